"""Command-line experiment runner.

Subcommands::

    wynerziv simulate     one protocol configuration, per-trial CSV + summary JSON
    wynerziv sweep        grid over n, d, r and delta, one row per grid point
    wynerziv quantize     quantize one vector against side information read from files
    wynerziv gaussian-wz  rate/distortion of the scalar quantizer on X = Y + Z

Settings come from, in increasing priority: built-in defaults, a TOML
file given with ``--config``, then explicit flags.  ``--print-config``
shows the resolved settings as TOML and exits.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .gausswz import CSV_COLUMNS as GWZ_COLUMNS
from .gausswz import SOURCES, GwzConfig, gwz_run
from .protocol import (
    BALL_SCHEMES,
    INPUT_KINDS,
    KNOWN_SCHEMES,
    SCHEMES,
    SUMMARY_VERSION,
    TRIAL_COLUMNS,
    ProtocolConfig,
    generate_inputs,
    make_codec,
    message_bits,
    message_bytes,
    run_protocol,
)
from .publicrand import RandomStream

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SWEEP_COLUMNS = (
    "scheme", "n", "d", "r", "delta", "trials", "seed",
    "mse", "mse_stderr", "theory_bound", "ratio", "bits_max",
)

DEFAULTS = {
    "simulate": {
        "scheme": "known_low", "n": 16, "d": 64, "r": 32, "delta": 1.0, "delta_file": None,
        "trials": 100, "seed": 0, "inputs": "sphere", "out": None, "format": "json", "check": False,
    },
    "sweep": {
        "scheme": "known_low", "n": [16], "d": [64], "r": [32], "delta": [1.0],
        "trials": 100, "seed": 0, "inputs": "sphere", "out": None, "format": "csv",
        "check": False, "jobs": 1,
    },
    "quantize": {
        "scheme": "unknown_low", "x": None, "y": None, "n": 1, "r": 32, "delta": None,
        "seed": 0, "format": "json",
    },
    "gaussian-wz": {
        "sigma_z": 1.0, "sigma_y": 1.0, "D": [1 / 308], "d": 4096, "trials": 100, "seed": 0,
        "source": "gaussian", "out": None, "format": "csv",
    },
}

LIST_KEYS = {"sweep": ("n", "d", "r", "delta"), "gaussian-wz": ("D",)}


class CliError(Exception):
    pass


def _number_list(kind):
    def parse(text):
        try:
            return [kind(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _common(p, fmt_default):
    p.add_argument("--config", help="TOML file with settings; flags override it")
    p.add_argument("--print-config", action="store_true", help="print resolved settings and exit")
    p.add_argument("--seed", type=int, help="master seed of the public randomness")
    p.add_argument("--format", choices=("csv", "json"), help=f"report format (default {fmt_default})")


def _protocol_flags(p, grid):
    num = _number_list(int) if grid else int
    real = _number_list(float) if grid else float
    suffix = " (comma-separated list)" if grid else ""
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--n", type=num, help="number of clients" + suffix)
    p.add_argument("--d", type=num, help="dimension" + suffix)
    p.add_argument("--r", type=num, help="bits per client" + suffix)
    p.add_argument("--delta", type=real, help="distance bound per client" + suffix)
    p.add_argument("--trials", type=int)
    p.add_argument("--inputs", choices=INPUT_KINDS, help="input generator")
    p.add_argument("--out", help="output directory")
    p.add_argument("--check", action="store_true", default=None,
                   help="exit with status 1 if the MSE exceeds bound + 3 stderr")


def build_parser():
    parser = argparse.ArgumentParser(prog="wynerziv", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one protocol configuration")
    _protocol_flags(p, grid=False)
    p.add_argument("--delta-file", help="per-client deltas, one per line")
    _common(p, "json")

    p = sub.add_parser("sweep", help="run a grid of protocol configurations")
    _protocol_flags(p, grid=True)
    p.add_argument("--jobs", type=int, help="worker processes")
    _common(p, "csv")

    p = sub.add_parser("quantize", help="quantize one vector end to end")
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--x", help="client vector file, one real per line")
    p.add_argument("--y", help="side-information file, one real per line")
    p.add_argument("--n", type=int, help="client count used to tune known-distance schemes")
    p.add_argument("--r", type=int)
    p.add_argument("--delta", type=float, help="distance bound (known-distance schemes)")
    _common(p, "json")

    p = sub.add_parser("gaussian-wz", help="scalar quantizer on the Gaussian source")
    p.add_argument("--sigma-z", dest="sigma_z", type=float)
    p.add_argument("--sigma-y", dest="sigma_y", type=float)
    p.add_argument("--D", type=_number_list(float), help="target distortions (comma-separated)")
    p.add_argument("--d", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--source", choices=SOURCES)
    p.add_argument("--out", help="output directory")
    _common(p, "csv")
    return parser


def resolve(args):
    """Merge defaults, the TOML file and explicit flags."""
    command = args.command
    settings = dict(DEFAULTS[command])
    if args.config:
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
        data = data.get(command, data)
        unknown = set(data) - set(settings)
        if unknown:
            raise CliError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
        settings.update(data)
    for key in settings:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    for key in LIST_KEYS.get(command, ()):
        if not isinstance(settings[key], list):
            settings[key] = [settings[key]]
    return settings


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return json.dumps(str(v))


def to_toml(command, settings):
    lines = [f"[{command}]"]
    for key, value in settings.items():
        if value is None:
            lines.append(f"# {key} = (unset)")
        else:
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def read_vector(path):
    try:
        with open(path) as fh:
            values = [float(line) for line in fh if line.strip()]
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from None
    if not values:
        raise CliError(f"{path} is empty")
    return np.array(values)


def _csv_text(columns, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row[k]) for k in columns})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _deltas(settings, n):
    if settings.get("delta_file"):
        values = read_vector(settings["delta_file"])
        if values.size != n:
            raise CliError(f"delta file has {values.size} values, expected n={n}")
        return values
    return np.full(n, float(settings["delta"]))


def _protocol_run(scheme, n, d, r, deltas, trials, seed, inputs):
    ball = scheme in BALL_SCHEMES
    X, Y = generate_inputs(n, d, deltas, inputs, seed=seed, unit_ball=ball)
    known = scheme in KNOWN_SCHEMES
    config = ProtocolConfig(n, d, r, scheme, tuple(deltas) if known else None, seed, trials)
    return run_protocol(X, Y, config)


def _violates(result):
    return result.mse > result.theory_bound + 3 * result.mse_stderr


def cmd_simulate(settings, stdout):
    n = settings["n"]
    deltas = _deltas(settings, n)
    result = _protocol_run(settings["scheme"], n, settings["d"], settings["r"], deltas,
                           settings["trials"], settings["seed"], settings["inputs"])
    summary = result.summary()
    summary["inputs"] = settings["inputs"]
    trials_csv = _csv_text(TRIAL_COLUMNS, result.trial_rows())
    if settings["out"]:
        _write(settings["out"], "trials.csv", trials_csv)
        _write(settings["out"], "summary.json", _json_text(summary))
    if settings["format"] == "json":
        brief = {k: summary[k] for k in ("spec_version", "mse", "mse_stderr", "theory_bound", "ratio",
                                         "bits_max", "transcript_sha256")}
        stdout.write(_json_text(brief))
    else:
        stdout.write(trials_csv)
    if settings["check"] and _violates(result):
        print(f"check failed: mse {result.mse!r} > bound {result.theory_bound!r} + 3 stderr",
              file=sys.stderr)
        return 1
    return 0


def sweep_point(point):
    """One grid point; module-level so worker processes can import it."""
    scheme, n, d, r, delta, trials, seed, inputs = point
    result = _protocol_run(scheme, n, d, r, np.full(n, delta), trials, seed, inputs)
    return {
        "scheme": scheme, "n": n, "d": d, "r": r, "delta": float(delta), "trials": trials,
        "seed": seed, "mse": result.mse, "mse_stderr": result.mse_stderr,
        "theory_bound": result.theory_bound,
        "ratio": result.mse / result.theory_bound if result.theory_bound > 0 else math.nan,
        "bits_max": max(result.client_bits),
    }


def sweep_grid(settings):
    grid = [
        (settings["scheme"], n, d, r, delta, settings["trials"], settings["seed"], settings["inputs"])
        for n in settings["n"] for d in settings["d"] for r in settings["r"] for delta in settings["delta"]
    ]
    if not grid:
        raise CliError("empty grid")
    return grid


def cmd_sweep(settings, stdout):
    grid = sweep_grid(settings)
    jobs = max(1, int(settings["jobs"]))
    if jobs == 1 or len(grid) == 1:
        rows = [sweep_point(p) for p in grid]
    else:
        # map yields in submission order, so output order never depends on scheduling
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(sweep_point, grid))
    if settings["format"] == "csv":
        text = _csv_text(SWEEP_COLUMNS, rows)
        name = "sweep.csv"
    else:
        text = _json_text({"spec_version": SUMMARY_VERSION, "rows": rows})
        name = "sweep.json"
    if settings["out"]:
        _write(settings["out"], name, text)
    stdout.write(text)
    if settings["check"]:
        bad = [r for r in rows if r["mse"] > r["theory_bound"] + 3 * r["mse_stderr"]]
        if bad:
            print(f"check failed at {len(bad)} grid point(s)", file=sys.stderr)
            return 1
    return 0


def cmd_quantize(settings, stdout):
    if not settings["x"] or not settings["y"]:
        raise CliError("quantize needs --x and --y files")
    x, y = read_vector(settings["x"]), read_vector(settings["y"])
    if x.shape != y.shape:
        raise CliError(f"x has {x.size} entries, y has {y.size}")
    scheme = settings["scheme"]
    delta = settings["delta"]
    if scheme in KNOWN_SCHEMES and delta is None:
        delta = float(np.linalg.norm(x - y))
    codec = make_codec(scheme, settings["n"], x.size, settings["r"], delta)
    msg, x_hat = codec.roundtrip(x, y, RandomStream(settings["seed"], 0, "quantize"))
    report = {
        "scheme": scheme,
        "message_hex": message_bytes(msg).hex(),
        "bits": message_bits(msg),
        "decoded": [float(v) for v in x_hat],
        "l2_error": float(np.linalg.norm(x_hat - x)),
    }
    if settings["format"] == "json":
        stdout.write(_json_text(report))
    else:
        stdout.write(_csv_text(("scheme", "message_hex", "bits", "l2_error"), [report]))
    return 0


def cmd_gaussian_wz(settings, stdout):
    rows = []
    for D in settings["D"]:
        config = GwzConfig(settings["d"], settings["sigma_y"], settings["sigma_z"], D,
                           settings["trials"], settings["seed"], settings["source"])
        rows.append(gwz_run(config).row(config))
    if settings["format"] == "csv":
        text, name = _csv_text(GWZ_COLUMNS, rows), "gaussian_wz.csv"
    else:
        text, name = _json_text({"spec_version": SUMMARY_VERSION, "rows": rows}), "gaussian_wz.json"
    if settings["out"]:
        _write(settings["out"], name, text)
    stdout.write(text)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "quantize": cmd_quantize,
    "gaussian-wz": cmd_gaussian_wz,
}


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        settings = resolve(args)
        if args.print_config:
            stdout.write(to_toml(args.command, settings))
            return 0
        return COMMANDS[args.command](settings, stdout)
    except (CliError, ValueError, OSError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
