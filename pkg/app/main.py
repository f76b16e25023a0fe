# app/main.py
"""Command-line entry point: ``anondet run | validate | project | exponent``."""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from loguru import logger
from pydantic import ValidationError

from app import artifacts
from app.core.config import PROJECT_ROOT, Settings, get_settings
from app.core.logger import configure_logging
from app.schemas import ConfigError, ExperimentConfig, ProfileConfig
from src.chernoff.efficient_test import packing_radius
from src.errors import AnonDetError
from src.probability.distributions import Dist
from src.projection.exponents import exponent_informed, exponent_np
from src.projection.solver import f_project

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

CONFIG_DIR = PROJECT_ROOT / "configs"


def _read_json(path: Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path} is not UTF-8 text") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e


def load_config(path: Path) -> ExperimentConfig:
    return ExperimentConfig.model_validate(_read_json(path))


def load_profile(path: Path) -> ProfileConfig:
    """A profile document, or an experiment config carrying a ``profile`` section."""
    document = _read_json(path)
    if isinstance(document, dict) and "profile" in document:
        document = document["profile"]
    return ProfileConfig.model_validate(document)


def _number(x: float):
    x = float(x)
    return x if np.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (ValidationError, ConfigError)):
        return EXIT_CONFIG
    if isinstance(exc, AnonDetError):
        return EXIT_SOLVER
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_CONFIG
    return EXIT_FAILED


def _fail(exc: BaseException, error_path: Optional[Path] = None) -> int:
    code = _exit_code(exc)
    record = {"status": "failed", "exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    if error_path is not None:
        record = artifacts.write_error(error_path, exc, code)
    logger.error("{}: {}", type(exc).__name__, exc)
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def cmd_run(args, settings: Settings) -> int:
    from app.tasks.experiment_tasks import run_experiment

    output_dir = Path(args.output) if args.output else None
    try:
        config = load_config(args.config)
        output_dir = output_dir or config.resolved_output_dir(settings.output_dir)
        if args.no_plot:
            config = config.model_copy(update={"plot": False})
        files = run_experiment(config, settings, output_dir)
    except (AnonDetError, OSError, ValueError) as e:
        return _fail(e, (output_dir / "error.json") if output_dir is not None else None)
    print(json.dumps({k: str(v) for k, v in files.items()}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_validate(args, settings: Settings) -> int:
    from app.validation import validate

    report = validate(quick=args.quick, inject_failure=args.inject_failure, suites=args.suite, seed=args.seed)
    frame = report.frame()
    print("\n========== ANONDET VALIDATION ==========")
    print(frame.to_string(index=False) if not frame.empty else "(no checks)")
    print(f"Result: {'PASS' if report.passed else 'FAIL'} ({int(frame['passed'].sum()) if not frame.empty else 0}"
          f"/{len(frame)} checks)")
    print("========================================")
    if args.report:
        try:
            artifacts.write_json(report.as_dict(), Path(args.report))
        except OSError as e:
            return _fail(e)
    return EXIT_OK if report.passed else EXIT_FAILED


def _parse_dist(text: str) -> Dist:
    try:
        values = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError as e:
        raise ConfigError(f"cannot parse distribution {text!r}") from e
    return Dist(values)


def cmd_project(args, settings: Settings) -> int:
    try:
        profile = load_profile(args.profile).to_profile()
        result = f_project(_parse_dist(args.t), profile.dists(args.hypothesis), profile.alpha)
    except (AnonDetError, OSError, ValueError) as e:
        return _fail(e)
    answer = {
        "value_bits": _number(result.value),
        "status": result.status,
        "iterations": result.iterations,
        "gap": _number(result.gap),
        "u": [[_number(x) for x in u.p] for u in result.u],
        "tilt": [_number(x) for x in result.tilt],
    }
    print(json.dumps(answer, indent=2))
    return EXIT_OK


def cmd_exponent(args, settings: Settings) -> int:
    try:
        profile = load_profile(args.profile).to_profile()
        anonymous = exponent_np(profile)
        informed = exponent_informed(profile)
        answer = {
            "E_anonymous_bits": _number(anonymous),
            "E_anonymous_swapped_bits": _number(exponent_np(profile.swapped())),
            "E_informed_bits": _number(informed),
            "price_bits": _number(informed - anonymous) if np.isfinite(informed) else "inf",
            "chernoff_bits": _number(packing_radius(profile)),
        }
    except (AnonDetError, OSError, ValueError) as e:
        return _fail(e)
    print(json.dumps(answer, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anondet",
                                     description="Anonymous heterogeneous distributed detection experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one experiment config and write its artifacts")
    run.add_argument("config", type=Path, help="Path to an experiment config (JSON)")
    run.add_argument("--output", type=str, default=None, help="Output directory (overrides the config)")
    run.add_argument("--no-plot", action="store_true", help="Skip plot.svg")

    val = sub.add_parser("validate", help="Run the acceptance suites")
    val.add_argument("--quick", action="store_true", help="Reduced sample counts")
    val.add_argument("--inject-failure", action="store_true", help="Perturb tolerances so every numeric check fails")
    val.add_argument("--report", type=str, default=None, help="Write the report as JSON to this path")
    val.add_argument("--suite", type=int, action="append", default=None, help="Run only this suite (repeatable)")
    val.add_argument("--seed", type=int, default=0)

    proj = sub.add_parser("project", help="Evaluate f_Q(T) with Q = P_theta of a profile")
    proj.add_argument("--t", required=True, help="Target distribution, e.g. 0.3,0.7")
    proj.add_argument("--profile", required=True, type=Path, help="Profile or experiment config (JSON)")
    proj.add_argument("--hypothesis", type=int, choices=(0, 1), default=1)

    exp = sub.add_parser("exponent", help="Anonymous and informed exponents of a profile")
    exp.add_argument("--profile", required=True, type=Path, help="Profile or experiment config (JSON)")
    return parser


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "project": cmd_project, "exponent": cmd_exponent}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except ValidationError as e:
        return _fail(e)
    configure_logging(settings.log_level)
    return COMMANDS[args.command](args, settings)


if __name__ == "__main__":
    sys.exit(main())
