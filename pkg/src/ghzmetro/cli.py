"""Command-line entry point.

Usage::

    ghzmetro MODE [options]          # MODE in evolve, sweep, optimize, qfi,
                                     #   oracle-check, fig2, fig3
    ghzmetro plot CSV [CSV ...] [--output PREFIX]

Options may also come from a flat JSON object given with ``--config``;
flags on the command line take precedence.  Exit codes: 0 success,
2 configuration or domain error, 3 insensitive configuration or vanishing
information, 4 internal consistency failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (ConfigurationError, DomainError, InternalConsistencyError, SensitivityError,
                     StepSizeError)
from .experiments import MODES, RunConfig, emit_plotdata, run

EXIT_OK, EXIT_CONFIG, EXIT_SENSITIVITY, EXIT_INTERNAL = 0, 2, 3, 4

# config key -> type; also the set of keys accepted from JSON
_FIELDS = {
    "n": list, "theta": float, "phi": float, "Omega": float, "gamma": float,
    "gamma0": float, "tau_c": float, "gamma_prime": float, "T": float, "t": float,
    "t_grid": list, "scheme": str, "output": str, "seed": int, "seeds": int, "workers": int,
}


def _t_grid(text: str) -> list:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected lo,hi,count")
    try:
        return [float(parts[0]), float(parts[1]), int(parts[2])]
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo,hi,count") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghzmetro", description="GHZ angle-estimation experiments")
    parser.add_argument("mode", choices=MODES + ("plot",))
    parser.add_argument("csv", nargs="*", help="input CSV files (plot mode)")
    parser.add_argument("--config", type=Path, help="flat JSON object of option values")
    parser.add_argument("--n", type=int, nargs="+", help="qubit counts, strictly increasing")
    parser.add_argument("--theta", type=float)
    parser.add_argument("--phi", type=float)
    parser.add_argument("--Omega", "--omega", dest="Omega", type=float)
    parser.add_argument("--gamma", type=float, help="Markovian collective rate")
    parser.add_argument("--gamma0", type=float, help="Lorentzian collective rate")
    parser.add_argument("--tau-c", dest="tau_c", type=float, help="Lorentzian correlation time")
    parser.add_argument("--gamma-prime", dest="gamma_prime", type=float, help="independent dephasing rate")
    parser.add_argument("--T", "--total-time", dest="T", type=float)
    parser.add_argument("--t", dest="t", type=float, help="evolution time (evolve, qfi)")
    parser.add_argument("--t-grid", dest="t_grid", type=_t_grid, help="lo,hi,count (sweep)")
    parser.add_argument("--scheme", choices=("ghz-projection", "qfi-bound"))
    parser.add_argument("--output", "-o")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--seeds", type=int, help="configurations per n (oracle-check)")
    parser.add_argument("--workers", type=int, help="process count (default from GHZMETRO_WORKERS)")
    return parser


def _load_config(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"config={path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config={path}: invalid JSON ({exc.msg})") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config={path}: expected a flat JSON object")
    out = {}
    for key, value in raw.items():
        name = key.replace("-", "_")
        if name not in _FIELDS:
            raise ConfigurationError(f"{key}: unknown config key")
        if isinstance(value, (dict, list)) and _FIELDS[name] is not list:
            raise ConfigurationError(f"{key}: expected a scalar value")
        out[name] = value
    if "n" in out and not isinstance(out["n"], list):
        out["n"] = [out["n"]]
    return out


def make_config(args: argparse.Namespace) -> RunConfig:
    values = _load_config(args.config) if args.config else {}
    for name in _FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if "n" in values:
        values["n"] = tuple(values["n"])
    if values.get("t_grid") is not None:
        values["t_grid"] = tuple(values["t_grid"])
    try:
        return RunConfig(mode=args.mode, **values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def _plot(args) -> None:
    if not args.csv:
        raise ConfigurationError("csv: plot mode needs at least one CSV file")
    prefix = Path(args.output or "plot")
    data, script = emit_plotdata(args.csv, data_name=prefix.name + ".dat")
    Path(str(prefix) + ".dat").write_text(data)
    Path(str(prefix) + ".gp").write_text(script)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.mode == "plot":
            _plot(args)
            return EXIT_OK
        if args.csv:
            raise ConfigurationError(f"csv: positional files are only used by plot mode, got {args.csv}")
        text = run(make_config(args))
        if text:
            sys.stdout.write(text)
        return EXIT_OK
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SensitivityError as exc:
        print(f"sensitivity error: {exc}", file=sys.stderr)
        return EXIT_SENSITIVITY
    except (InternalConsistencyError, StepSizeError) as exc:
        print(f"internal consistency error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
