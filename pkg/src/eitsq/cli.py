"""Command-line entry point: ``eitsq run | calibrate | list-scenarios``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .calibration import CalibrationError, CalibrationRecord, calibrate
from .config import ConfigError, MissingCalibrationError, ScenarioConfig
from .eit import UndefinedDelayError
from .opo import InfeasibleTargetError
from .scenarios import SCENARIOS, run_scenario
from .spectral import UnphysicalStateError

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_CALIBRATION = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eitsq", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write CSV output")
    run.add_argument("scenario", choices=sorted(SCENARIOS))
    run.add_argument("--config", type=Path, help="INI file overlaid on the built-in defaults")
    run.add_argument("--seed", type=int, help="override [pulse] seed")
    run.add_argument("--out", type=Path, help="output directory (default: ./out/<scenario>)")
    run.add_argument("--calibration", type=Path, help="calibration record from 'eitsq calibrate'")
    run.add_argument("--no-plots", action="store_true", help="skip PNG figures")

    cal = sub.add_parser("calibrate", help="fit source, control and path parameters to the anchors")
    cal.add_argument("--config", type=Path)
    cal.add_argument("--out", type=Path, required=True, help="where to write the JSON record")

    sub.add_parser("list-scenarios", help="print the available scenario names")
    return p


def _record_path(args, cfg: ScenarioConfig) -> Path | None:
    if args.calibration is not None:
        return args.calibration
    if cfg.has("calibration", "record"):
        path = cfg.get("calibration", "record")
        # relative to the config file that named it
        if not path.is_absolute() and args.config is not None:
            path = args.config.parent / path
        return path
    return None


def _load_record(path: Path | None) -> CalibrationRecord | None:
    if path is None:
        return None
    try:
        return CalibrationRecord.load(path)
    except FileNotFoundError:
        raise MissingCalibrationError(f"calibration record {path} not found") from None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read calibration record {path}: {exc}") from None


def _dispatch(args) -> int:
    if args.command == "list-scenarios":
        for name, fn in SCENARIOS.items():
            print(f"{name:20s} {fn.__doc__.strip().splitlines()[0]}")
        return EXIT_OK

    cfg = ScenarioConfig.load(args.config)
    if args.command == "calibrate":
        record = calibrate(cfg)
        record.save(args.out)
        for key, value in sorted(record.residuals.items()):
            print(f"{key:32s} {value:.6g}")
        print(f"wrote {args.out}")
        return EXIT_OK

    record = _load_record(_record_path(args, cfg))
    out = args.out if args.out is not None else Path("out") / args.scenario
    plots = False if args.no_plots else None
    for path in run_scenario(args.scenario, cfg, out, record, args.seed, plots):
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"eitsq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingCalibrationError as exc:
        print(f"eitsq: missing calibration: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except CalibrationError as exc:
        print(f"eitsq: calibration failed at {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (UnphysicalStateError, InfeasibleTargetError, UndefinedDelayError) as exc:
        print(f"eitsq: physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except ValueError as exc:
        # parameter validation in the model types: a bad configured value
        print(f"eitsq: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
