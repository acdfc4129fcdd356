"""Scalar modulo quantizer.

The encoder dithers ``x`` onto the lattice ``eps * Z`` (unbiasedly) and
sends the lattice index modulo ``k``.  The decoder picks the point of the
coset ``{(z k + w) eps}`` nearest to its side information ``y``.  When
``|x - y| <= delta_prime`` and ``k eps >= 2 (eps + delta_prime)`` the
decoder recovers the encoder's lattice point exactly.
"""

from dataclasses import dataclass

import numpy as np

from . import bitpack
from ._validation import ceil_log2
from .publicrand import draw_uniforms

# x/eps closer than this to an integer is treated as on-lattice
ON_LATTICE_TOL = 1e-12


@dataclass(frozen=True)
class MqParams:
    k: int
    delta_prime: float
    epsilon: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 3:
            raise ValueError(f"k must be an integer >= 3, got {self.k}")
        if not self.delta_prime > 0:
            raise ValueError(f"delta_prime must be positive, got {self.delta_prime}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        lhs = self.k * self.epsilon
        rhs = 2.0 * (self.epsilon + self.delta_prime)
        if lhs < rhs * (1.0 - 1e-12):
            raise ValueError(
                f"k*eps = {lhs!r} < 2(eps + delta_prime) = {rhs!r}; decoding is not guaranteed"
            )

    @property
    def bit_width(self):
        return ceil_log2(self.k)


@dataclass(frozen=True)
class MqWord:
    w: int
    bit_width: int

    def to_bytes(self):
        return bitpack.pack(bitpack.uint_to_bits([self.w], self.bit_width))


def mq_params(k, delta_prime):
    """Parameters with ``eps = 2 delta_prime / (k - 2)``."""
    if int(k) != k or k < 3:
        raise ValueError(f"k must be an integer >= 3, got {k}")
    if not delta_prime > 0:
        raise ValueError(f"delta_prime must be positive, got {delta_prime}")
    return MqParams(int(k), float(delta_prime), 2.0 * delta_prime / (k - 2))


def lattice_indices(x, epsilon, uniforms):
    """Unbiased randomized rounding of ``x / epsilon`` to an integer.

    ``uniforms`` are draws from ``[0, 1)``, one per entry; the upper
    neighbour is chosen when the draw falls below the fractional part.
    """
    t = np.asarray(x, dtype=np.float64) / epsilon
    nearest = np.rint(t)
    on_lattice = np.abs(t - nearest) <= ON_LATTICE_TOL
    lower = np.floor(t)
    up = np.asarray(uniforms) < (t - lower)
    z = np.where(on_lattice, nearest, lower + up)
    return z.astype(np.int64)


def encode_coords(x, params, uniforms):
    """Vectorized encoder core: returns ``(w, z_tilde)``."""
    z = lattice_indices(x, params.epsilon, uniforms)
    return np.mod(z, params.k), z


def decode_coords(w, y, params):
    """Vectorized decoder core: nearest coset point to each ``y``.

    Ties go to the smaller lattice value.
    """
    w = np.asarray(w, dtype=np.int64)
    y = np.asarray(y, dtype=np.float64)
    k, eps = params.k, params.epsilon
    z0 = np.floor((y / eps - w) / k).astype(np.int64)
    lo = (z0 * k + w) * eps
    hi = ((z0 + 1) * k + w) * eps
    pick_hi = np.abs(hi - y) < np.abs(lo - y)
    return np.where(pick_hi, hi, lo)


def mq_encode(x, params, stream):
    """Encode one real; consumes one uniform from ``stream``."""
    x = float(x)
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    u = draw_uniforms(stream, 0.0, 1.0, 1)
    w, _ = encode_coords(np.array([x]), params, u)
    return MqWord(int(w[0]), params.bit_width)


def mq_decode(word, y, params):
    """Decode a word against side information ``y``."""
    w = word.w if isinstance(word, MqWord) else int(word)
    if not 0 <= w < params.k:
        raise ValueError(f"word {w} outside [0, {params.k})")
    return float(decode_coords(np.array([w]), np.array([float(y)]), params)[0])
