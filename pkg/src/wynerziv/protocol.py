"""Simultaneous-message mean estimation harness.

Each client quantizes its vector with its own substream of the public
randomness; the server decodes every message against that client's side
information and averages.  Runs are repeated over independent trials to
measure the mean squared error and compare it with the analytic bounds.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import wz_known, wz_unknown
from ._validation import BudgetError, ConstraintError, check_distance, check_vector, next_power_of_two
from .publicrand import RandomStream, draw_normals

SCHEMES = ("known_low", "known_high", "unknown_low", "unknown_boosted", "baseline_mq")
KNOWN_SCHEMES = ("known_low", "known_high", "baseline_mq", "rmq")
BALL_SCHEMES = ("unknown_low", "unknown_boosted", "daq", "rdaq")
INPUT_KINDS = ("sphere", "gaussian", "axis")
SUMMARY_VERSION = "1"


@dataclass
class Codec:
    """Encoder/decoder pair for one client with its parameters bound."""

    scheme: str
    params: object
    encode: object
    decode: object
    message_bits: int

    def roundtrip(self, x, y, stream):
        msg = self.encode(x, stream)
        return msg, self.decode(msg, y, stream.replay())


def make_codec(scheme, n=1, d=None, r=None, delta=None, *, k=None, delta_small=None, N=None):
    """Build the codec for ``scheme``.

    Protocol schemes take ``(n, d, r)`` and, for the known-distance ones,
    the client's ``delta``.  The building blocks ``rmq`` (needs ``k`` and
    ``delta_small``), ``daq``, ``rdaq`` and ``brdaq`` (needs ``N``) are
    also available for measuring single-quantizer error statistics.
    """
    if scheme in ("known_low", "known_high"):
        p = wz_known.known_params(n, d, r, delta, "low" if scheme == "known_low" else "high")
        return Codec(scheme, p, lambda x, s: wz_known.swz_encode(x, p, s),
                     lambda m, y, s: wz_known.swz_decode(m, y, p, s), p.message_bits)
    if scheme == "baseline_mq":
        p = wz_known.baseline_params(n, d, r, delta)
        return Codec(scheme, p, lambda x, s: wz_known.swz_encode(x, p, s),
                     lambda m, y, s: wz_known.swz_decode(m, y, p, s), p.message_bits)
    if scheme == "rmq":
        p = wz_known.rmq_params(d, delta, k, delta_small)
        return Codec(scheme, p, lambda x, s: wz_known.rmq_encode(x, p, s),
                     lambda m, y, s: wz_known.rmq_decode(m, y, p, s), p.message_bits)
    if scheme == "unknown_low":
        p = wz_unknown.unknown_params(d, r, "low")
        return Codec(scheme, p, lambda x, s: wz_unknown.srdaq_encode(x, p.levels, p.mu_d, s),
                     lambda m, y, s: wz_unknown.srdaq_decode(m, y, p.levels, p.mu_d, s),
                     p.message_bits)
    if scheme == "unknown_boosted":
        p = wz_unknown.unknown_params(d, r, "boosted")
        return Codec(scheme, p, lambda x, s: wz_unknown.brdaq_encode(x, p.levels, p.N, s),
                     lambda m, y, s: wz_unknown.brdaq_decode(m, y, p.levels, p.N, s),
                     p.message_bits)
    if scheme == "daq":
        return Codec(scheme, None, wz_unknown.daq_encode, wz_unknown.daq_decode, int(d))
    if scheme in ("rdaq", "brdaq"):
        levels = wz_unknown.rdaq_levels(next_power_of_two(d))
        if scheme == "rdaq":
            return Codec(scheme, levels, lambda x, s: wz_unknown.rdaq_encode(x, levels, s),
                         lambda m, y, s: wz_unknown.rdaq_decode(m, y, levels, s),
                         levels.d * (levels.h + levels.log_h))
        width = (int(N)).bit_length()
        return Codec(scheme, levels, lambda x, s: wz_unknown.brdaq_encode(x, levels, N, s),
                     lambda m, y, s: wz_unknown.brdaq_decode(m, y, levels, N, s),
                     levels.d * (levels.h * width + levels.log_h))
    raise ValueError(f"unknown scheme {scheme!r}")


def message_bytes(msg):
    if isinstance(msg, np.ndarray):
        return np.packbits(msg.astype(np.uint8), bitorder="little").tobytes()
    return msg.to_bytes()


def message_bits(msg):
    if isinstance(msg, np.ndarray):
        return int(msg.size)
    return int(msg.n_bits)


def _unit(v):
    return v / np.linalg.norm(v)


def pair_at_distance(d, delta, kind="sphere", stream=None, unit_ball=False):
    """Test pair ``(x, y)`` with ``||x - y|| = delta`` exactly.

    ``sphere`` draws uniform directions, ``gaussian`` a Gaussian-scaled
    point, ``axis`` puts the whole difference on one coordinate.  With
    ``unit_ball`` both vectors are kept inside the unit ball by placing
    them symmetrically around a centre of norm at most ``1 - delta/2``.
    """
    if kind not in INPUT_KINDS:
        raise ValueError(f"kind must be one of {INPUT_KINDS}, got {kind!r}")
    stream = stream if stream is not None else RandomStream(0, 0, "pair")
    g = stream.generator
    if kind == "axis":
        u = np.zeros(d)
        u[int(g.integers(d))] = 1.0
    else:
        u = _unit(draw_normals(stream, d))
    if unit_ball:
        if delta > 2:
            raise ConstraintError("two points of the unit ball are at most 2 apart")
        radius = 1.0 - delta / 2.0
        if kind == "gaussian":
            radius *= g.random()
        centre = radius * _unit(draw_normals(stream, d))
        return centre + 0.5 * delta * u, centre - 0.5 * delta * u
    if kind == "gaussian":
        y = draw_normals(stream, d) / math.sqrt(d)
    else:
        y = _unit(draw_normals(stream, d))
    return y + delta * u, y


def generate_inputs(n, d, deltas, kind="sphere", seed=0, unit_ball=False):
    """Client inputs ``X`` and side information ``Y`` with row distances ``deltas``."""
    deltas = np.broadcast_to(np.asarray(deltas, dtype=np.float64), (n,))
    X = np.empty((n, d))
    Y = np.empty((n, d))
    for i in range(n):
        X[i], Y[i] = pair_at_distance(d, deltas[i], kind, RandomStream(seed, i, "inputs"), unit_ball)
    return X, Y


@dataclass
class ProtocolConfig:
    n: int
    d: int
    r: int
    scheme: str
    deltas: tuple = None
    master_seed: int = 0
    trials: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.n < 1 or self.d < 1 or self.trials < 1:
            raise ValueError("n, d and trials must be positive")
        if self.deltas is not None:
            self.deltas = tuple(float(v) for v in np.broadcast_to(self.deltas, (self.n,)))
            if any(v < 0 or not math.isfinite(v) for v in self.deltas):
                raise ValueError("deltas must be finite and non-negative")
        elif self.scheme in KNOWN_SCHEMES:
            raise ValueError(f"scheme {self.scheme} needs per-client deltas")

    @property
    def padded_d(self):
        return next_power_of_two(self.d)

    def codecs(self):
        if self.scheme in KNOWN_SCHEMES:
            return [make_codec(self.scheme, self.n, self.d, self.r, dl) for dl in self.deltas]
        shared = make_codec(self.scheme, self.n, self.d, self.r)
        return [shared] * self.n


@dataclass
class ErrorStats:
    alpha_hat: float
    beta_hat: float
    trials: int
    delta: float
    beta_noise: float = 0.0

    def __post_init__(self):
        self.alpha_hat = float(self.alpha_hat)
        self.beta_hat = float(self.beta_hat)


@dataclass
class ProtocolResult:
    estimate: np.ndarray
    true_mean: np.ndarray
    squared_errors: np.ndarray
    mse: float
    client_bits: list
    theory_bound: float
    client_mse: np.ndarray = field(repr=False, default=None)
    client_sq_bias: np.ndarray = field(repr=False, default=None)
    client_bias_noise: np.ndarray = field(repr=False, default=None)
    transcript_sha256: str = ""
    config: ProtocolConfig = None

    @property
    def mse_stderr(self):
        t = self.squared_errors.size
        if t < 2:
            return 0.0
        return float(np.std(self.squared_errors, ddof=1) / math.sqrt(t))

    def summary(self):
        cfg = asdict(self.config) if self.config is not None else {}
        if cfg.get("deltas") is not None:
            cfg["deltas"] = list(cfg["deltas"])
        return {
            "spec_version": SUMMARY_VERSION,
            "config": cfg,
            "mse": self.mse,
            "mse_stderr": self.mse_stderr,
            "theory_bound": self.theory_bound,
            "ratio": self.mse / self.theory_bound if self.theory_bound > 0 else None,
            "bits_max": max(self.client_bits),
            "client_bits": list(self.client_bits),
            "estimate": self.estimate.tolist(),
            "true_mean": self.true_mean.tolist(),
            "transcript_sha256": self.transcript_sha256,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.summary(), **kwargs)

    def trial_rows(self):
        cfg = self.config
        summary = delta_summary(cfg.deltas)
        bits_max = max(self.client_bits)
        for t, err in enumerate(self.squared_errors):
            yield {
                "trial": t,
                "scheme": cfg.scheme,
                "n": cfg.n,
                "d": cfg.d,
                "r": cfg.r,
                "delta_summary": summary,
                "sq_error": repr(float(err)),
                "bits_max": bits_max,
            }


TRIAL_COLUMNS = ("trial", "scheme", "n", "d", "r", "delta_summary", "sq_error", "bits_max")


def delta_summary(deltas):
    if deltas is None:
        return "unbounded"
    deltas = np.asarray(deltas)
    if np.all(deltas == deltas[0]):
        return f"{deltas[0]:g}"
    return f"min={deltas.min():g};mean={deltas.mean():g};max={deltas.max():g}"


def _check_inputs(X, Y, config):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape != (config.n, config.d) or Y.shape != X.shape:
        raise ValueError(f"inputs must have shape ({config.n}, {config.d}), got {X.shape} and {Y.shape}")
    for i in range(config.n):
        check_vector(X[i])
        check_vector(Y[i], "y")
        if config.scheme in KNOWN_SCHEMES:
            check_distance(X[i], Y[i], config.deltas[i])
    return X, Y


def run_protocol(inputs, side_info, config):
    """Run ``config.trials`` independent rounds of the protocol.

    Client ``i`` in trial ``t`` uses ``RandomStream(master_seed, i,
    "trial:t")``; the server replays the same stream to decode.
    """
    X, Y = _check_inputs(inputs, side_info, config)
    codecs = config.codecs()
    n, d, trials = config.n, config.d, config.trials
    true_mean = X.mean(axis=0)
    sq_errors = np.empty(trials)
    sum_hat = np.zeros((n, d))
    sum_sq = np.zeros(n)
    sum_hat_sq = np.zeros((n, d))
    bits = [0] * n
    digest = hashlib.sha256()
    estimate = None
    for t in range(trials):
        x_hats = np.empty((n, d))
        for i, codec in enumerate(codecs):
            stream = RandomStream(config.master_seed, i, f"trial:{t}")
            msg, x_hats[i] = codec.roundtrip(X[i], Y[i], stream)
            nb = message_bits(msg)
            if nb > config.r:
                raise BudgetError(f"client {i} sent {nb} bits, budget is {config.r}")
            bits[i] = max(bits[i], nb)
            digest.update(message_bytes(msg))
        err = x_hats - X
        sum_hat += x_hats
        sum_hat_sq += x_hats**2
        sum_sq += np.einsum("ij,ij->i", err, err)
        estimate = x_hats.mean(axis=0)
        sq_errors[t] = float(np.sum((estimate - true_mean) ** 2))
    mean_hat = sum_hat / trials
    var_hat = np.maximum(sum_hat_sq / trials - mean_hat**2, 0.0)
    deltas = config.deltas if config.deltas is not None else tuple(np.linalg.norm(X - Y, axis=1))
    return ProtocolResult(
        estimate=estimate,
        true_mean=true_mean,
        squared_errors=sq_errors,
        mse=float(sq_errors.mean()),
        client_bits=bits,
        theory_bound=theory_bound(config, deltas),
        client_mse=sum_sq / trials,
        client_sq_bias=np.sum((mean_hat - X) ** 2, axis=1),
        client_bias_noise=var_hat.sum(axis=1) / trials,
        transcript_sha256=digest.hexdigest(),
        config=config,
    )


def theory_bound(config, deltas=None):
    """Right-hand side of the matching MSE guarantee for ``config``."""
    deltas = np.asarray(config.deltas if deltas is None else deltas, dtype=np.float64)
    n, r = config.n, config.r
    d = config.padded_d
    scheme = config.scheme
    if scheme == "known_low":
        log_k = math.ceil(math.log2(2.0 + math.sqrt(12.0 * math.log(n))))
        return (79 * log_k + 26) * float(np.sum(deltas**2)) / n * d / (n * r)
    if scheme == "known_high":
        m = r / d
        return (12 * math.log(n) + 24 * m + 154 / n + 166) * float(np.sum(deltas**2)) / (
            n**2 * (2**m - 2) ** 2
        )
    if scheme == "unknown_low":
        star = wz_unknown.iterated_log_star(d / 6.0)
        return 128 * math.sqrt(3) * (1 + star) * float(np.sum(deltas)) / n * d / (n * r)
    if scheme == "unknown_boosted":
        N = wz_unknown.unknown_params(d, r, "boosted").N
        return 16 * math.sqrt(3) * float(np.sum(deltas)) / (n**2 * N)
    if scheme == "baseline_mq":
        total = 0.0
        for delta in deltas:
            p = wz_known.baseline_params(n, config.d, r, delta)
            total += (p.d * p.epsilon**2 + delta**2) * p.d / p.mu_d
        return total / n**2
    raise ValueError(f"unknown scheme {scheme!r}")


def boosted_closed_form_bound(n, d, r, deltas):
    """Closed form of the boosted-regime guarantee, for the power-of-two repetition count."""
    d = next_power_of_two(d)
    star = wz_unknown.iterated_log_star(d / 6.0)
    return float(np.sum(deltas)) / n * 64 * math.sqrt(3) / (n * 2 ** (r / (d * (2 + 2 * star))))


def decomposition_bound(alphas, betas, n):
    return float(np.sum(alphas)) / n**2 + float(np.sum(betas)) / n


def decomposition_check(alphas, betas, mse, n, slack=0.0):
    """Whether ``mse <= sum(alpha)/n^2 + sum(beta)/n + slack``."""
    return bool(mse <= decomposition_bound(alphas, betas, n) + slack)


def monte_carlo(codec, x, y, trials, seed=0, client_id=0, tag="mc"):
    """Repeat one client's round trip; returns per-trial errors and statistics."""
    x = check_vector(x)
    y = check_vector(y, "y")
    sq = np.empty(trials)
    total = np.zeros_like(x)
    total_sq = np.zeros_like(x)
    bits = 0
    for t in range(trials):
        msg, x_hat = codec.roundtrip(x, y, RandomStream(seed, client_id, f"{tag}:{t}"))
        bits = max(bits, message_bits(msg))
        diff = x_hat - x
        sq[t] = diff @ diff
        total += x_hat
        total_sq += x_hat**2
    mean = total / trials
    var = np.maximum(total_sq / trials - mean**2, 0.0)
    return {
        "sq_errors": sq,
        "mse": float(sq.mean()),
        "mse_stderr": float(sq.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        "mean": mean,
        "coord_var": var,
        "sq_bias": float(np.sum((mean - x) ** 2)),
        "bias_noise": float(var.sum() / trials),
        "bits": bits,
    }


def empirical_alpha_beta(scheme, d, delta, trials, seed=0, *, n=16, r=None, n_directions=3,
                         codec=None, **codec_kwargs):
    """Empirical stand-ins for the worst-case MSE and squared bias at ``delta``.

    Evaluates random-direction pairs plus one axis-aligned pair at exactly
    distance ``delta`` and returns the largest MSE and squared bias seen.
    ``beta_noise`` is the Monte Carlo floor ``tr(Cov)/trials`` that the
    squared-bias estimate carries even for an unbiased quantizer.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if codec is None:
        codec = make_codec(scheme, n, d, r, delta, **codec_kwargs)
    unit_ball = codec.scheme in BALL_SCHEMES
    kinds = ["sphere"] * n_directions + ["axis"]
    alpha = beta = noise = 0.0
    for j, kind in enumerate(kinds):
        x, y = pair_at_distance(d, delta, kind, RandomStream(seed, j, "alpha-beta-pair"), unit_ball)
        stats = monte_carlo(codec, x, y, trials, seed, client_id=j, tag="alpha-beta")
        alpha = max(alpha, stats["mse"])
        if stats["sq_bias"] > beta:
            beta, noise = stats["sq_bias"], stats["bias_noise"]
    return ErrorStats(alpha, beta, trials, float(delta), noise)
