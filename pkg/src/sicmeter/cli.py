"""Command-line front end: ``sicmeter <experiment> [flags]``.

Config files are flat ``key = value`` text; ``#`` starts a comment, keys
are the long flag names without the leading dashes (``chain-len`` and
``chain_len`` are both accepted). Flags override file values.
"""

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from . import experiments, measurement

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2
EXIT_IO = 3

CONFIG_KEYS = {
    "seed", "experiment", "s", "m", "xyz", "grid", "samples", "chain_len",
    "observers", "settings", "format", "out", "reset_meter",
}
AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument errors surface as ConfigError so they get a JSON error record."""

    def error(self, message):
        raise ConfigError(message)


def parse_vector(text):
    text = text.strip()
    name = text.lstrip("+-")
    if name in AXES:
        sign = -1.0 if text.startswith("-") else 1.0
        return [sign * c for c in AXES[name]]
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse vector {text!r}") from exc


def parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean {text!r}")


def read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


CONVERTERS = {
    "seed": int,
    "experiment": str,
    "s": parse_vector,
    "m": parse_vector,
    "xyz": parse_vector,
    "grid": int,
    "samples": int,
    "chain_len": int,
    "observers": int,
    "settings": str,
    "format": str,
    "out": str,
    "reset_meter": parse_bool,
}


def build_parser():
    parser = _Parser(
        prog="sicmeter",
        description="Reproducible experiments for the SIC-frame qubit-meter measurement model.",
    )
    parser.add_argument("experiment_pos", nargs="?", metavar="experiment",
                        choices=experiments.EXPERIMENTS, help="experiment to run")
    parser.add_argument("--experiment", choices=experiments.EXPERIMENTS)
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", help="64-bit PRNG seed")
    parser.add_argument("--s", help="state: Bloch 'sx,sy,sz' or SIC 'p1,p2,p3,p4'")
    parser.add_argument("--m", help="unit direction 'mx,my,mz' or an axis name x, -y, ...")
    parser.add_argument("--xyz", help="family parameters 'x,y,z' (default 1,0,0)")
    parser.add_argument("--grid", help="grid points per axis, or direction count for negativity")
    parser.add_argument("--samples", help="random sample count")
    parser.add_argument("--chain-len", dest="chain_len", help="chain length / repeat count")
    parser.add_argument("--observers", help="number of broadcast observer bits")
    parser.add_argument("--settings", help="CHSH settings: tsirelson, equal, random")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--reset-meter", dest="reset_meter", action="store_const", const="true",
                        help="re-initialise the meter to +1 between shots")
    return parser


def _attach_values(argv, parser):
    """Join each value flag with its argument so values like '-x' or '-0.5,0,0' parse."""
    takes_value = {
        flag
        for action in parser._actions
        if action.option_strings and action.nargs is None
        for flag in action.option_strings
    }
    out, tokens = [], iter(argv)
    for tok in tokens:
        if tok in takes_value:
            value = next(tokens, None)
            out.append(tok if value is None else f"{tok}={value}")
        else:
            out.append(tok)
    return out


def resolve(args):
    """Merge config file and flags into (ExperimentConfig, format, out)."""
    raw = read_config(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if args.experiment_pos is not None:
        raw["experiment"] = args.experiment_pos
    values = {}
    for key, text in raw.items():
        try:
            values[key] = CONVERTERS[key](text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {text!r}") from exc
    if "experiment" not in values:
        raise ConfigError("no experiment given")
    if values["experiment"] not in experiments.EXPERIMENTS:
        raise ConfigError(f"unknown experiment {values['experiment']!r}")
    if "samples" in values and values["samples"] < 1 and values["experiment"] == "oracle-diff":
        raise ConfigError("--samples must be at least 1")
    if "xyz" in values:
        if len(values["xyz"]) != 3:
            raise ConfigError("--xyz needs three numbers")
        values["xyz"] = tuple(values["xyz"])
    fmt = values.pop("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    out = values.pop("out", None)
    return experiments.ExperimentConfig(**values), fmt, out


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def payload(record):
    """Everything except wall-clock time; identical across reruns with one seed."""
    return _plain({
        "experiment": record.experiment,
        "seed": record.seed,
        "inputs": record.inputs,
        "tolerances": record.tolerances,
        "columns": record.columns,
        "rows": record.rows,
        "summary": record.summary,
        "telemetry": record.telemetry,
        "ok": record.ok,
        "failure": record.failure,
    })


def render(record, fmt, duration):
    data = payload(record)
    if fmt == "json":
        data["duration_s"] = duration
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    for key in ("experiment", "seed", "inputs", "tolerances", "summary", "telemetry", "ok", "failure"):
        buf.write(f"# {key}: {json.dumps(data[key], sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(record.columns)
    for row in record.rows:
        writer.writerow([_cell(v) for v in row])
    buf.write(f"# duration_s: {duration!r}\n")
    return buf.getvalue()


def _error(kind, message, details=None, stream=None):
    record = {"error": kind, "message": str(message)}
    if details:
        record["details"] = _plain(details)
    print(json.dumps(record, sort_keys=True), file=stream or sys.stderr)


def main(argv=None):
    try:
        parser = build_parser()
        argv = sys.argv[1:] if argv is None else argv
        cfg, fmt, out = resolve(parser.parse_args(_attach_values(argv, parser)))
    except ConfigError as exc:
        _error("config", exc)
        return EXIT_USAGE
    except OSError as exc:
        _error("io", exc)
        return EXIT_IO
    started = time.perf_counter()
    try:
        record = experiments.run(cfg)
    except measurement.PositivityError as exc:
        _error("positivity", exc, exc.dump)
        return EXIT_INVARIANT
    except ValueError as exc:
        _error("input", exc)
        return EXIT_USAGE
    text = render(record, fmt, time.perf_counter() - started)
    try:
        if out:
            with open(out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        _error("io", exc)
        return EXIT_IO
    if not record.ok:
        _error("invariant", f"{record.experiment} exceeded its tolerances",
               record.failure or record.summary)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
