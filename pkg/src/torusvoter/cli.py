"""Command-line interface: one subcommand per experiment mode.

Exit codes: 0 success, 2 validation error, 3 capacity error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (MODES, ExperimentSpec, ValidationError,
                      parse_config_file, run_experiment)
from .oracle import CapacityError

EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_IO = 4


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(","))


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusvoter",
        description="Threshold voter model on tori: simulation, couplings, "
                    "ball-game bounds, and exact oracles.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--d", type=str, default=None,
                        help="dimension, or comma list for sweep/ldp")
        sp.add_argument("--r", type=int, default=None, help="torus side length")
        sp.add_argument("--p", type=str, default=None,
                        help="density, or p1,p2 for the monotone coupling")
        sp.add_argument("--T", type=float, default=None, help="time horizon")
        sp.add_argument("--replicas", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--grid", type=int, default=None, help="time-grid size")
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--config", type=str, default=None,
                        help="key=value config file; CLI flags override it")
        sp.add_argument("--init", type=str, default=None,
                        help="fixed initial 0/1 string instead of density sampling")
    return parser


_DEFAULTS = {"d": "1", "r": 2, "p": "0.3", "T": 1.0, "replicas": 1, "seed": 0,
             "grid": 9}

_PARSERS = {"d": _int_list, "p": _float_list, "r": int, "T": float,
            "replicas": int, "seed": int, "grid": int, "out": str, "init": str}


def spec_from_args(args) -> ExperimentSpec:
    merged = dict(_DEFAULTS)
    if args.config:
        cfg = parse_config_file(args.config)
        unknown = set(cfg) - set(_PARSERS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        merged.update(cfg)
    for key in _PARSERS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    parsed = {}
    for key, value in merged.items():
        if value is None:
            continue
        parsed[key] = _PARSERS[key](value) if isinstance(value, str) else value
    return ExperimentSpec(
        mode=args.mode,
        d=parsed["d"],
        r=parsed["r"],
        p=parsed["p"],
        T=parsed["T"],
        replicas=parsed["replicas"],
        seed=parsed["seed"],
        grid=parsed["grid"],
        out=parsed.get("out"),
        init_bits=parsed.get("init"),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        result = run_experiment(spec)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        path = getattr(exc, "filename", None)
        print(f"i/o error{f' ({path})' if path else ''}: {exc}", file=sys.stderr)
        return EXIT_IO
    summary = result["summary"]
    print(f"mode={spec.mode} d={','.join(map(str, spec.d))} r={spec.r} "
          f"p={','.join(map(str, spec.p))} replicas={spec.replicas}")
    for key, value in summary.items():
        if not isinstance(value, (list, dict)):
            print(f"  {key}: {value}")
    if spec.out:
        print(f"wrote {spec.out}/rows.csv and {spec.out}/summary.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
