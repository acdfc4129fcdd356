"""Shared public randomness and the randomized Hadamard rotation.

Every quantizer in this package draws from a :class:`RandomStream` in a
fixed order: rotation signs first, then the coordinate subset (if any),
then the per-coordinate uniforms in coordinate-major, scale-minor order.
The encoder and the decoder each build their own stream from the same
``(master_seed, client_id, domain_tag)`` triple and replay that order, so
nothing but the quantized payload crosses the wire.
"""

import hashlib
import math

import numpy as np

from ._validation import DimensionError, is_power_of_two

_MASK64 = (1 << 64) - 1


def _tag_hash(client_id, domain_tag):
    digest = hashlib.blake2b(
        f"{int(client_id)}\x1f{domain_tag}".encode(), digest_size=16
    ).digest()
    return int.from_bytes(digest[:8], "little"), int.from_bytes(digest[8:], "little")


class RandomStream:
    """Deterministic substream of the public randomness.

    The stream is a Philox counter-based generator keyed by
    ``master_seed XOR hash(client_id, domain_tag)``.  Two streams built
    from the same triple yield identical draw sequences; a stream is
    owned by one party at a time, use :meth:`replay` to hand an
    identical fresh copy to the other side.
    """

    def __init__(self, master_seed, client_id=0, domain_tag=""):
        master_seed = int(master_seed)
        if not 0 <= master_seed <= _MASK64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if int(client_id) < 0:
            raise ValueError("client_id must be non-negative")
        self.master_seed = master_seed
        self.client_id = int(client_id)
        self.domain_tag = str(domain_tag)
        lo, hi = _tag_hash(self.client_id, self.domain_tag)
        key = ((hi << 64) | (lo ^ master_seed))
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self):
        return (
            f"RandomStream(master_seed={self.master_seed}, client_id={self.client_id}, "
            f"domain_tag={self.domain_tag!r})"
        )

    @property
    def generator(self):
        return self._gen

    def replay(self):
        """A fresh stream positioned at the first draw of this one."""
        return RandomStream(self.master_seed, self.client_id, self.domain_tag)

    def child(self, tag):
        """Independent substream for the same client under a sub-tag."""
        return RandomStream(self.master_seed, self.client_id, f"{self.domain_tag}/{tag}")


def fwht(x):
    """Normalized fast Walsh-Hadamard transform along the last axis.

    Returns ``H x / sqrt(d)`` with ``H`` in Sylvester (natural) order, in
    ``O(d log d)`` operations.  The normalized transform is orthogonal and
    its own inverse.
    """
    arr = np.array(x, dtype=np.float64)
    d = arr.shape[-1] if arr.ndim else 0
    if not is_power_of_two(d):
        raise DimensionError(f"fwht needs a power-of-two length, got {d}")
    rows = arr.reshape(-1, d)
    h = 1
    while h < d:
        # butterflies in place on the private copy
        pairs = rows.reshape(rows.shape[0], d // (2 * h), 2, h)
        a = pairs[:, :, 0, :]
        b = pairs[:, :, 1, :]
        diff = a - b
        a += b
        b[...] = diff
        h *= 2
    return arr / math.sqrt(d)


def _check_signs(x, signs):
    signs = np.asarray(signs)
    if signs.shape[-1] != np.shape(x)[-1]:
        raise DimensionError(
            f"sign vector has length {signs.shape[-1]}, vector has {np.shape(x)[-1]}"
        )
    return signs


def rotate(x, signs):
    """Apply ``R = H D / sqrt(d)`` to ``x``."""
    signs = _check_signs(x, signs)
    return fwht(np.asarray(x, dtype=np.float64) * signs)


def rotate_inverse(y, signs):
    """Apply ``R^{-1} = D H / sqrt(d)`` to ``y``."""
    signs = _check_signs(y, signs)
    return fwht(y) * signs


def draw_signs(stream, d):
    """``d`` i.i.d. uniform signs as an int8 array over {-1, +1}."""
    if d < 1:
        raise DimensionError(f"d must be >= 1, got {d}")
    bits = stream.generator.integers(0, 2, size=d, dtype=np.int8)
    return (2 * bits - 1).astype(np.int8)


def draw_subset(stream, d, m):
    """Uniform ``m``-subset of ``range(d)``, sorted ascending.

    Partial Fisher-Yates driven by ``m`` uniforms from the stream.  The
    full set (``m == d``) is returned without consuming any draws, so a
    fully sampled quantizer replays exactly like its unsampled parent.
    """
    if not 1 <= m <= d:
        raise ValueError(f"subset size must satisfy 1 <= m <= d, got m={m}, d={d}")
    if m == d:
        return np.arange(d, dtype=np.int64)
    perm = np.arange(d, dtype=np.int64)
    u = stream.generator.random(m)
    picks = np.arange(m) + np.floor(u * (d - np.arange(m))).astype(np.int64)
    for i, j in enumerate(picks):
        perm[i], perm[j] = perm[j], perm[i]
    return np.sort(perm[:m])


def draw_uniform(stream, lo, hi):
    """One uniform draw in ``[lo, hi)``."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    return float(lo + (hi - lo) * stream.generator.random())


def draw_uniforms(stream, lo, hi, size):
    """Array of uniforms in ``[lo, hi)``; ``lo``/``hi`` broadcast against ``size``."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(lo >= hi):
        raise ValueError("need lo < hi")
    return lo + (hi - lo) * stream.generator.random(size)


def draw_normals(stream, size):
    """Standard normals via Box-Muller on stream uniforms."""
    n = int(np.prod(size))
    pairs = (n + 1) // 2
    u1 = 1.0 - stream.generator.random(pairs)
    u2 = stream.generator.random(pairs)
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate((rad * np.cos(2 * np.pi * u2), rad * np.sin(2 * np.pi * u2)))
    return z[:n].reshape(size)
