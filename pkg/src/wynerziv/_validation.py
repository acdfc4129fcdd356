"""Input validation helpers shared by the quantizers and estimators."""

import math

import numpy as np

BALL_TOL = 1e-9


class DimensionError(ValueError):
    """Vector length does not match what the operation requires."""


class BudgetError(ValueError):
    """The requested bit budget cannot host the quantizer."""


class ConstraintError(ValueError):
    """Inputs violate a distance or norm precondition."""


def is_power_of_two(d):
    return d >= 1 and (d & (d - 1)) == 0


def next_power_of_two(d):
    if d < 1:
        raise DimensionError(f"dimension must be >= 1, got {d}")
    return 1 << (int(d) - 1).bit_length()


def check_vector(x, name="x"):
    """Return ``x`` as a finite 1-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def pad_to(x, d):
    """Zero-pad ``x`` to length ``d``."""
    if x.shape[-1] == d:
        return x
    if x.shape[-1] > d:
        raise DimensionError(f"cannot pad length {x.shape[-1]} down to {d}")
    out = np.zeros(x.shape[:-1] + (d,), dtype=np.float64)
    out[..., : x.shape[-1]] = x
    return out


def check_in_ball(x, name="x"):
    norm = float(np.linalg.norm(x))
    if norm > 1.0 + BALL_TOL:
        raise ConstraintError(f"{name} must lie in the unit ball, has norm {norm!r}")


def check_distance(x, y, delta):
    dist = float(np.linalg.norm(x - y))
    if dist > delta * (1.0 + 1e-9) + 1e-12:
        raise ConstraintError(f"||x - y|| = {dist!r} exceeds the distance bound {delta!r}")


def ceil_log2(k):
    """Bits needed for an integer in ``{0, ..., k-1}``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return (int(k) - 1).bit_length()


def log2_int(h):
    if not is_power_of_two(h):
        raise ValueError(f"{h} is not a power of two")
    return int(math.log2(h))
