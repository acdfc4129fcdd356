"""Wyner-Ziv quantizers for a known distance bound.

RMQ rotates both ``x`` and ``y`` with the shared randomized Hadamard
matrix and applies the modulo quantizer coordinate-wise with a
per-coordinate range ``delta_prime ~ delta / sqrt(d)``.  The subsampled
variant (SWZ) sends only a shared random subset of ``mu_d`` coordinates
and fills the rest from the side information, rescaled by ``d / mu_d``.

Stream draw order: signs (length d), subset (SWZ only, skipped when
``mu_d == d``), then one dither uniform per transmitted coordinate.  The
decoder never reads the dither uniforms.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import bitpack
from ._validation import (
    BudgetError,
    DimensionError,
    ceil_log2,
    check_vector,
    next_power_of_two,
    pad_to,
)
from .mq import MqParams, decode_coords, encode_coords
from .publicrand import draw_signs, draw_subset, draw_uniforms, rotate, rotate_inverse

REGIMES = ("low", "high")


@dataclass(frozen=True)
class WzKnownParams:
    """Per-client configuration of RMQ / subsampled RMQ.

    ``d`` is the padded (power-of-two) dimension; bit budgets refer to it.
    ``rotate=False`` gives the unrotated per-coordinate baseline.
    """

    d: int
    n: int
    r: int
    delta: float
    delta_small: float
    k: int
    delta_prime: float
    epsilon: float
    mu_d: int
    regime: str
    rotate: bool = True

    @property
    def degenerate(self):
        """Zero distance: the decoder just returns the side information."""
        return self.delta == 0

    @property
    def mq(self):
        return MqParams(self.k, self.delta_prime, self.epsilon)

    @property
    def bit_width(self):
        return ceil_log2(self.k)

    @property
    def message_bits(self):
        return self.mu_d * self.bit_width

    @property
    def mu(self):
        return self.mu_d / self.d


@dataclass(frozen=True)
class SwzMessage:
    """Modulo-quantizer words for the sampled coordinates, ascending index."""

    words: np.ndarray
    bit_width: int

    @property
    def n_bits(self):
        return len(self.words) * self.bit_width

    def to_bits(self):
        return bitpack.uint_to_bits(self.words, self.bit_width)

    def to_bytes(self):
        return bitpack.pack(self.to_bits())

    @classmethod
    def from_bytes(cls, data, count, bit_width):
        bits = bitpack.unpack(data, count * bit_width)
        return cls(bitpack.bits_to_uint(bits, bit_width, count), bit_width)


def _finish(d, n, r, delta, delta_small, k, mu_d, regime, rotate=True):
    if delta == 0:
        return WzKnownParams(d, n, r, 0.0, 0.0, k, 0.0, 0.0, mu_d, regime, rotate)
    if not 0 < delta_small < delta:
        raise ValueError(f"bias knob must lie in (0, delta), got {delta_small} for delta={delta}")
    delta_prime = math.sqrt(6.0 * (delta**2 / d) * math.log(delta / delta_small))
    if not delta_prime > 0:
        raise ValueError("delta_prime must be positive")
    epsilon = 2.0 * delta_prime / (k - 2)
    return WzKnownParams(d, n, r, float(delta), delta_small, k, delta_prime, epsilon, mu_d, regime, rotate)


def low_precision_log_k(n):
    """Bits per transmitted coordinate in the low-precision regime."""
    return math.ceil(math.log2(2.0 + math.sqrt(12.0 * math.log(n))))


def known_params(n, d, r, delta, regime="low"):
    """Parameters for client with distance bound ``delta``.

    Low precision (``r <= d``): ``delta_small = delta / sqrt(n)``,
    ``log k = ceil(log2(2 + sqrt(12 ln n)))``, ``mu_d = floor(r / log k)``.
    High precision (``r = m d``, ``m >= 2``): ``log k = m``, every
    coordinate is sent and ``delta_small = delta / (sqrt(n) (2^m - 2))``.

    ``n = 1`` is treated as ``n = 2`` in the low regime; otherwise the
    bias knob would equal ``delta`` and the per-coordinate range vanish.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if delta < 0 or not math.isfinite(delta):
        raise ValueError(f"delta must be finite and non-negative, got {delta}")
    d = next_power_of_two(d)
    if regime == "low":
        n_eff = max(n, 2)
        log_k = low_precision_log_k(n_eff)
        if r < 2 * log_k:
            raise BudgetError(f"r={r} below the minimum {2 * log_k} bits for n={n}")
        if r > d:
            raise BudgetError(f"r={r} exceeds d={d}; use the high-precision regime")
        mu_d = r // log_k
        return _finish(d, n, r, delta, delta / math.sqrt(n_eff), 2**log_k, mu_d, regime)
    if r % d:
        raise BudgetError(f"high-precision regime needs r to be a multiple of d={d}, got r={r}")
    m = r // d
    if m < 2:
        raise BudgetError(f"high-precision regime needs r >= 2d, got r={r}, d={d}")
    k = 2**m
    return _finish(d, n, r, delta, delta / (math.sqrt(n) * (k - 2)), k, d, regime)


def rmq_params(d, delta, k, delta_small):
    """RMQ over all ``d`` coordinates with an explicit ``k`` and bias knob."""
    d = next_power_of_two(d)
    if k < 4:
        raise ValueError(f"k must be >= 4, got {k}")
    return _finish(d, 1, d * ceil_log2(k), delta, delta_small, int(k), d, "custom")


def baseline_params(n, d, r, delta):
    """Unrotated per-coordinate MQ with ``delta_prime = delta``.

    Same ``k`` and sampling rate as :func:`known_params` in the low
    regime; exactly unbiased but its error grows with ``d``.
    """
    p = known_params(n, d, r, delta, "low")
    d_raw = int(d)
    mu_d = min(p.mu_d, d_raw)
    if delta == 0:
        return WzKnownParams(d_raw, n, r, 0.0, 0.0, p.k, 0.0, 0.0, mu_d, "baseline", False)
    epsilon = 2.0 * delta / (p.k - 2)
    return WzKnownParams(d_raw, n, r, float(delta), 0.0, p.k, float(delta), epsilon, mu_d, "baseline", False)


def _prepare(x, params):
    x = check_vector(x)
    if params.rotate:
        fits = next_power_of_two(x.size) == params.d
    else:
        fits = x.size == params.d
    if not fits:
        raise DimensionError(f"vector of length {x.size} does not match d={params.d}")
    return pad_to(x, params.d)


def _shared(stream, params):
    signs = draw_signs(stream, params.d) if params.rotate else None
    subset = draw_subset(stream, params.d, params.mu_d)
    return signs, subset


def swz_encode(x, params, stream):
    """Subsampled RMQ encoder: words for the shared subset, ascending."""
    if params.mu_d < 1:
        raise BudgetError("mu_d must be >= 1")
    xp = _prepare(x, params)
    if params.degenerate:
        return SwzMessage(np.zeros(params.mu_d, dtype=np.int64), params.bit_width)
    signs, subset = _shared(stream, params)
    xr = rotate(xp, signs) if params.rotate else xp
    u = draw_uniforms(stream, 0.0, 1.0, subset.size)
    w, _ = encode_coords(xr[subset], params.mq, u)
    return SwzMessage(w, params.bit_width)


def swz_decode(msg, y, params, stream):
    """Subsampled RMQ decoder; output has the length of ``y``."""
    words = np.asarray(msg.words if isinstance(msg, SwzMessage) else msg, dtype=np.int64)
    if words.size != params.mu_d:
        raise DimensionError(f"expected {params.mu_d} words, got {words.size}")
    y = check_vector(y, "y")
    yp = _prepare(y, params)
    if params.degenerate:
        return y.copy()
    if np.any(words < 0) or np.any(words >= params.k):
        raise ValueError("word outside [0, k)")
    signs, subset = _shared(stream, params)
    yr = rotate(yp, signs) if params.rotate else yp
    x_tilde = decode_coords(words, yr[subset], params.mq)
    x_hat = yr.copy()
    x_hat[subset] += (x_tilde - yr[subset]) * (params.d / params.mu_d)
    out = rotate_inverse(x_hat, signs) if params.rotate else x_hat
    return out[: y.size]


def _full(params):
    if params.mu_d != params.d:
        raise ValueError("RMQ sends every coordinate; got params with mu_d < d")
    return params


def rmq_encode(x, params, stream):
    """RMQ encoder: one modulo-quantizer word per rotated coordinate."""
    return swz_encode(x, _full(params), stream)


def rmq_decode(msg, y, params, stream):
    """RMQ decoder."""
    return swz_decode(msg, y, _full(params), stream)


def decoded_rotated(msg, y, params, stream):
    """Rotated-domain decoder outputs for the sampled coordinates.

    Returns ``(subset, x_tilde, Ry[subset])``; used to check that every
    decoded coordinate stays within ``k * eps`` of the side information.
    """
    y = check_vector(y, "y")
    yp = _prepare(y, params)
    signs, subset = _shared(stream, params)
    yr = rotate(yp, signs) if params.rotate else yp
    x_tilde = decode_coords(np.asarray(msg.words), yr[subset], params.mq)
    return subset, x_tilde, yr[subset]
