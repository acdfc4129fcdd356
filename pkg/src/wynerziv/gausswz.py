"""Modulo quantization for the (sub)Gaussian Wyner-Ziv source.

The source is ``X = Y + Z`` coordinate-wise, with ``Z`` centred and
subgaussian with variance factor ``sigma_z^2``.  Each ``X(i)`` is sent
with the scalar modulo quantizer and decoded against ``Y(i)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .mq import MqParams, decode_coords, encode_coords
from .publicrand import RandomStream, draw_normals, draw_uniforms

SOURCES = ("gaussian", "bounded")
# distortion must not exceed sigma_z^2 / DISTORTION_FLOOR
DISTORTION_FLOOR = 308.0


@dataclass(frozen=True)
class GwzConfig:
    d: int
    sigma_y: float
    sigma_z: float
    D: float
    trials: int = 100
    seed: int = 0
    source: str = "gaussian"

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.d < 1 or self.trials < 1:
            raise ValueError("d and trials must be positive")
        if not (self.sigma_y > 0 and self.sigma_z > 0 and self.D > 0):
            raise ValueError("sigma_y, sigma_z and D must be positive")
        _check_distortion(self.sigma_z, self.D)


@dataclass(frozen=True)
class GwzResult:
    empirical_distortion_per_dim: float
    distortion_stderr: float
    rate_per_dim: int
    shannon_rate: float
    excess_rate: float
    params: MqParams

    def row(self, config):
        return {
            "sigma_z": config.sigma_z,
            "D": config.D,
            "d": config.d,
            "rate_per_dim": self.rate_per_dim,
            "shannon_rate": self.shannon_rate,
            "excess_rate": self.excess_rate,
            "empirical_distortion": self.empirical_distortion_per_dim,
        }


CSV_COLUMNS = ("sigma_z", "D", "d", "rate_per_dim", "shannon_rate", "excess_rate", "empirical_distortion")


def _check_distortion(sigma_z, D):
    if D > sigma_z**2 / DISTORTION_FLOOR * (1 + 1e-12):
        raise ValueError(f"target distortion {D} exceeds sigma_z^2/{DISTORTION_FLOOR:g}")


def gwz_params(sigma_z, D):
    """Modulo-quantizer parameters reaching per-coordinate distortion ``D``."""
    if not (sigma_z > 0 and D > 0):
        raise ValueError("sigma_z and D must be positive")
    _check_distortion(sigma_z, D)
    ratio = sigma_z**2 / D
    delta_small = math.sqrt(D / DISTORTION_FLOOR)
    log_k = math.ceil(math.log2(2.0 + math.sqrt(24.0 * ratio * math.log(DISTORTION_FLOOR * ratio))))
    k = 2**log_k
    delta_prime = math.sqrt(6.0 * sigma_z**2 * math.log(sigma_z / delta_small))
    return MqParams(k, delta_prime, 2.0 * delta_prime / (k - 2))


def shannon_rate(sigma_z, D):
    """Wyner-Ziv rate-distortion function for the Gaussian source, bits per coordinate."""
    return 0.5 * math.log2(sigma_z**2 / D) if D <= sigma_z**2 else 0.0


def sample_source(config, stream):
    """One draw of ``(X, Y)``; bounded noise is uniform on ``[-sqrt(3) s, sqrt(3) s]``."""
    y = config.sigma_y * draw_normals(stream, config.d)
    if config.source == "gaussian":
        z = config.sigma_z * draw_normals(stream, config.d)
    else:
        a = math.sqrt(3.0) * config.sigma_z
        z = draw_uniforms(stream, -a, a, config.d)
    return y + z, y


def quantize(x, y, params, stream):
    """Encode ``x`` coordinate-wise and decode against ``y``; returns ``(words, x_hat)``."""
    w, _ = encode_coords(x, params, draw_uniforms(stream, 0.0, 1.0, np.shape(x)))
    return w, decode_coords(w, y, params)


def gwz_run(config):
    params = gwz_params(config.sigma_z, config.D)
    per_trial = np.empty(config.trials)
    for t in range(config.trials):
        stream = RandomStream(config.seed, 0, f"gwz:{t}")
        x, y = sample_source(config, stream)
        _, x_hat = quantize(x, y, params, stream)
        per_trial[t] = np.mean((x_hat - x) ** 2)
    stderr = float(per_trial.std(ddof=1) / math.sqrt(config.trials)) if config.trials > 1 else 0.0
    rate = params.bit_width
    shannon = shannon_rate(config.sigma_z, config.D)
    return GwzResult(float(per_trial.mean()), stderr, rate, shannon, rate - shannon, params)
