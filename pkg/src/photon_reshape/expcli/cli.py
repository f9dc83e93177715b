"""``photon-reshape`` command line.

Exit codes: 0 success, 2 config error, 3 numerical-consistency failure,
4 calibration saturation.  Log verbosity comes from ``PHOTON_RESHAPE_LOG``
(error, warn, info or debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from ..errors import (
    CalibrationSaturationError,
    ConfigError,
    GridError,
    NoMatchedWavelengthError,
    NumericalConsistencyError,
    OutOfRangeError,
    RefinementError,
)
from . import scenarios
from .config import load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_SATURATION = 4

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO,
           "debug": logging.DEBUG}

log = logging.getLogger("photon_reshape")


def configure_logging() -> None:
    name = os.environ.get("PHOTON_RESHAPE_LOG", "warn").strip().lower()
    level = _LEVELS.get(name)
    logging.basicConfig(level=level or logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if level is None:
        log.warning("PHOTON_RESHAPE_LOG=%r not understood; using 'warn'", name)


def _output_dir(args, cfg) -> Path:
    if args.out is not None:
        return Path(args.out)
    if cfg.output_dir is not None:
        return Path(args.config).parent / cfg.output_dir
    return Path("photon_reshape_out") / cfg.scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photon-reshape",
        description="Simulate XPM spectral reshaping of photon pairs from a JSON config.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the scenario named in the config")
    run.add_argument("config", help="scenario config (JSON)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--svg", action="store_true", help="also write SVG plots")

    val = sub.add_parser("validate", help="check a config against the schema")
    val.add_argument("config")

    cal = sub.add_parser("calibrate", help="calibrate the control peak power only")
    cal.add_argument("config")
    cal.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv=None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"{args.config}: ok ({cfg.scenario}, sha256 {cfg.config_hash[:12]})")
            return EXIT_OK
        if getattr(args, "jobs", 1) < 1:
            raise ConfigError("--jobs must be at least 1")
        out = _output_dir(args, cfg)
        if args.command == "calibrate":
            result = scenarios.run_calibrate(cfg, out)
        else:
            result = scenarios.run(cfg, out, jobs=args.jobs, make_svg=args.svg)
        log.info("wrote outputs to %s", out)
        print(json.dumps(scenarios._plain(result), sort_keys=True, indent=2))
        return EXIT_OK
    except (ConfigError, GridError, OutOfRangeError, NoMatchedWavelengthError,
            RefinementError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalConsistencyError as exc:
        print(f"numerical consistency failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CalibrationSaturationError as exc:
        print(f"calibration saturated: {exc}", file=sys.stderr)
        return EXIT_SATURATION


if __name__ == "__main__":
    sys.exit(main())
