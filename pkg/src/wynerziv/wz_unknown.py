"""Distance-adaptive quantizers for inputs in the unit ball.

These need no bound on ``||x - y||``.  Each coordinate is sent as the bit
``1{U <= x}`` for a shared uniform ``U``; the decoder subtracts its own
bit ``1{U <= y}``, so the error variance scales with ``|x - y|``.

* DAQ: one uniform per coordinate on ``[-1, 1]``, no rotation.
* RDAQ: rotate, then quantize every coordinate at ``h`` scales
  ``[-M_j, M_j]`` and also send the smallest scale ``z(i)`` covering
  ``Rx(i)``.  The decoder uses scale ``max(z(i), z'(i))``.
* Subsampled RDAQ: RDAQ payload for a shared subset only, rescaled.
* Boosted RDAQ: ``N`` independent repetitions per (coordinate, scale),
  transmitting only the count of ones.

Stream draw order: signs, subset (subsampled only), then uniforms with
shape ``(coordinates, scales)`` or ``(coordinates, scales, repetitions)``
in C order.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import bitpack
from ._validation import (
    BudgetError,
    DimensionError,
    ceil_log2,
    check_in_ball,
    check_vector,
    log2_int,
    next_power_of_two,
    pad_to,
)
from .publicrand import draw_signs, draw_subset, draw_uniforms, rotate, rotate_inverse

REGIMES = ("low", "boosted")


def iterated_log_star(a):
    """Number of natural logs needed to bring ``a`` below 1."""
    count = 0
    a = float(a)
    while a >= 1.0:
        a = math.log(a)
        count += 1
    return count


def exp_tower(j):
    """``e^{*j}``: 1, e, e^e, ...; ``inf`` once it overflows."""
    value = 1.0
    for _ in range(j):
        try:
            value = math.exp(value)
        except OverflowError:
            return math.inf
    return value


@dataclass(frozen=True)
class RdaqLevels:
    d: int
    h: int
    M: np.ndarray

    @property
    def log_h(self):
        return log2_int(self.h)


def rdaq_levels(d):
    """Scale grid ``M_j^2 = 6 e^{*j} / d`` with ``log2 h = ceil(log2(1 + ln*(d/6)))``."""
    if d < 1:
        raise DimensionError(f"d must be >= 1, got {d}")
    log_h = math.ceil(math.log2(1 + iterated_log_star(d / 6.0)))
    h = 2**log_h
    M = np.sqrt(np.array([6.0 * exp_tower(j) / d for j in range(h)]))
    if M[-1] < 1.0:
        raise AssertionError("largest scale does not cover the unit interval")
    return RdaqLevels(int(d), h, M)


@dataclass(frozen=True)
class RdaqMessage:
    """Per transmitted coordinate: ``h`` bits and a scale index."""

    bits: np.ndarray
    scales: np.ndarray
    h: int

    @property
    def n_bits(self):
        return self.bits.shape[0] * (self.h + ceil_log2(self.h))

    def to_bits(self):
        return np.concatenate(
            (self.bits.astype(np.uint8).ravel(), bitpack.uint_to_bits(self.scales, ceil_log2(self.h)))
        )

    def to_bytes(self):
        return bitpack.pack(self.to_bits())

    @classmethod
    def from_bytes(cls, data, count, h):
        width = ceil_log2(h)
        bits = bitpack.unpack(data, count * (h + width))
        matrix = bits[: count * h].reshape(count, h).astype(np.uint8)
        return cls(matrix, bitpack.bits_to_uint(bits[count * h :], width, count), h)


@dataclass(frozen=True)
class BrdaqMessage:
    """Per coordinate: ones-counts over ``N`` repetitions at each scale."""

    counts: np.ndarray
    scales: np.ndarray
    h: int
    N: int

    @property
    def count_width(self):
        return ceil_log2(self.N + 1)

    @property
    def n_bits(self):
        return self.counts.shape[0] * (self.h * self.count_width + ceil_log2(self.h))

    def to_bits(self):
        return np.concatenate(
            (
                bitpack.uint_to_bits(self.counts, self.count_width),
                bitpack.uint_to_bits(self.scales, ceil_log2(self.h)),
            )
        )

    def to_bytes(self):
        return bitpack.pack(self.to_bits())

    @classmethod
    def from_bytes(cls, data, count, h, N):
        cw, sw = ceil_log2(N + 1), ceil_log2(h)
        bits = bitpack.unpack(data, count * (h * cw + sw))
        counts = bitpack.bits_to_uint(bits, cw, count * h).reshape(count, h)
        scales = bitpack.bits_to_uint(bits[count * h * cw :], sw, count)
        return cls(counts, scales, h, N)


@dataclass(frozen=True)
class UnknownParams:
    d: int
    r: int
    h: int
    mu_d: int
    N: int
    regime: str
    levels: RdaqLevels

    @property
    def message_bits(self):
        if self.regime == "low":
            return self.mu_d * (self.h + self.levels.log_h)
        return self.d * (self.h * ceil_log2(self.N + 1) + self.levels.log_h)


def unknown_params(d, r, regime="low"):
    """Shared parameters of the universal quantizer.

    Low precision: ``mu_d = floor(r / (h + log2 h))``.  Boosted:
    ``r = m d`` and ``N`` is the largest repetition count whose ones-count
    (range ``0..N``) fits the budget, ``N = 2^floor((m - log2 h)/h) - 1``.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    d = next_power_of_two(d)
    levels = rdaq_levels(d)
    h, log_h = levels.h, levels.log_h
    if regime == "low":
        if r < 2 * (h + log_h):
            raise BudgetError(f"r={r} below the minimum {2 * (h + log_h)} bits")
        if r > d:
            raise BudgetError(f"r={r} exceeds d={d}; use the boosted regime")
        return UnknownParams(d, r, h, r // (h + log_h), 1, regime, levels)
    if r % d:
        raise BudgetError(f"boosted regime needs r to be a multiple of d={d}, got r={r}")
    m = r // d
    if m < h + log_h:
        raise BudgetError(f"boosted regime needs at least {h + log_h} bits per coordinate, got {m}")
    N = 2 ** ((m - log_h) // h) - 1
    return UnknownParams(d, r, h, d, N, regime, levels)


def _ball_vector(x, name):
    x = check_vector(x, name)
    check_in_ball(x, name)
    return x


def _rotated(x, levels, stream, name):
    x = _ball_vector(x, name)
    if next_power_of_two(x.size) != levels.d:
        raise DimensionError(f"{name} of length {x.size} does not match d={levels.d}")
    signs = draw_signs(stream, levels.d)
    return x, signs, rotate(pad_to(x, levels.d), signs)


def _scale_index(v, levels):
    z = np.searchsorted(levels.M, np.abs(v), side="left")
    return np.minimum(z, levels.h - 1)


def daq_encode(x, stream):
    """One bit per coordinate: ``1{U(i) <= x(i)}`` with ``U(i) ~ Unif[-1, 1]``."""
    x = _ball_vector(x, "x")
    u = draw_uniforms(stream, -1.0, 1.0, x.size)
    return (u <= x).astype(np.uint8)


def daq_decode(bits, y, stream):
    """``2 (w - 1{U <= y}) + y``."""
    y = _ball_vector(y, "y")
    bits = np.asarray(bits)
    if bits.shape != y.shape:
        raise DimensionError(f"expected {y.size} bits, got shape {bits.shape}")
    u = draw_uniforms(stream, -1.0, 1.0, y.size)
    return 2.0 * (bits.astype(np.float64) - (u <= y)) + y


def _encode_scales(xr, levels, stream, shape):
    z = _scale_index(xr, levels)
    M = levels.M.reshape((1, -1) + (1,) * (len(shape) - 2))
    u = draw_uniforms(stream, -M, M, shape)
    below = u <= xr.reshape((-1,) + (1,) * (len(shape) - 1))
    return z, below


def rdaq_encode(x, levels, stream):
    """RDAQ encoder: ``d x h`` bit matrix plus per-coordinate scale index."""
    _, _, xr = _rotated(x, levels, stream, "x")
    z, bits = _encode_scales(xr, levels, stream, (levels.d, levels.h))
    return RdaqMessage(bits.astype(np.uint8), z, levels.h)


def _check_message(msg, count, h):
    if msg.bits.shape != (count, h) or msg.scales.shape != (count,):
        raise DimensionError(f"message shape {msg.bits.shape} does not match ({count}, {h})")
    if np.any(msg.scales < 0) or np.any(msg.scales >= h):
        raise ValueError("scale index out of range")


def _correction(bits_at, yr_s, u_at, M_at):
    return 2.0 * M_at * (bits_at.astype(np.float64) - (u_at <= yr_s))


def rdaq_decode(msg, y, levels, stream):
    """RDAQ decoder; exactly unbiased for inputs in the unit ball."""
    _check_message(msg, levels.d, levels.h)
    y, signs, yr = _rotated(y, levels, stream, "y")
    u = draw_uniforms(stream, -levels.M[None, :], levels.M[None, :], (levels.d, levels.h))
    zs = np.maximum(msg.scales, _scale_index(yr, levels))
    rows = np.arange(levels.d)
    x_hat = yr + _correction(msg.bits[rows, zs], yr, u[rows, zs], levels.M[zs])
    return rotate_inverse(x_hat, signs)[: y.size]


def srdaq_encode(x, levels, mu_d, stream):
    """RDAQ payload restricted to a shared random subset of ``mu_d`` coordinates."""
    if not 1 <= mu_d <= levels.d:
        raise BudgetError(f"mu_d must lie in [1, {levels.d}], got {mu_d}")
    _, _, xr = _rotated(x, levels, stream, "x")
    subset = draw_subset(stream, levels.d, mu_d)
    z, bits = _encode_scales(xr[subset], levels, stream, (mu_d, levels.h))
    return RdaqMessage(bits.astype(np.uint8), z, levels.h)


def srdaq_decode(msg, y, levels, mu_d, stream):
    """Subsampled RDAQ decoder with ``d / mu_d`` rescaling of sampled terms."""
    if not 1 <= mu_d <= levels.d:
        raise BudgetError(f"mu_d must lie in [1, {levels.d}], got {mu_d}")
    _check_message(msg, mu_d, levels.h)
    y, signs, yr = _rotated(y, levels, stream, "y")
    subset = draw_subset(stream, levels.d, mu_d)
    u = draw_uniforms(stream, -levels.M[None, :], levels.M[None, :], (mu_d, levels.h))
    ys = yr[subset]
    zs = np.maximum(msg.scales, _scale_index(ys, levels))
    rows = np.arange(mu_d)
    x_hat = yr.copy()
    x_hat[subset] += (levels.d / mu_d) * _correction(msg.bits[rows, zs], ys, u[rows, zs], levels.M[zs])
    return rotate_inverse(x_hat, signs)[: y.size]


def brdaq_encode(x, levels, N, stream):
    """Boosted RDAQ encoder: ones-counts over ``N`` repetitions."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    _, _, xr = _rotated(x, levels, stream, "x")
    z, bits = _encode_scales(xr, levels, stream, (levels.d, levels.h, int(N)))
    return BrdaqMessage(bits.sum(axis=2).astype(np.int64), z, levels.h, int(N))


def brdaq_decode(msg, y, levels, N, stream):
    """Boosted RDAQ decoder: average of ``N`` conditionally independent RDAQ outputs."""
    if msg.N != N:
        raise ValueError(f"message carries N={msg.N}, decoder configured with N={N}")
    if msg.counts.shape != (levels.d, levels.h) or msg.scales.shape != (levels.d,):
        raise DimensionError("message shape does not match the levels")
    if np.any(msg.counts < 0) or np.any(msg.counts > N):
        raise ValueError(f"ones-count outside [0, {N}]")
    if np.any(msg.scales < 0) or np.any(msg.scales >= levels.h):
        raise ValueError("scale index out of range")
    y, signs, yr = _rotated(y, levels, stream, "y")
    M3 = levels.M[None, :, None]
    u = draw_uniforms(stream, -M3, M3, (levels.d, levels.h, N))
    zs = np.maximum(msg.scales, _scale_index(yr, levels))
    rows = np.arange(levels.d)
    count_y = (u[rows, zs, :] <= yr[:, None]).sum(axis=1)
    x_hat = yr + 2.0 * levels.M[zs] * (msg.counts[rows, zs] - count_y) / N
    return rotate_inverse(x_hat, signs)[: y.size]
