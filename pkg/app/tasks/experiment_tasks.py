# app/tasks/experiment_tasks.py
"""Runners for each experiment kind, plus the task wrapper that writes the artifacts."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from app import artifacts
from app.core.config import Settings
from app.schemas import ExperimentConfig, SanovRegionConfig
from src.analysis.byzantine import attack_threshold, byzantine_iid_exponent, byzantine_worst_exponent
from src.analysis.partial_info import best_clustering
from src.chernoff.efficient_test import lambda_range
from src.chernoff.region import DEFAULT_RESOLUTION, region_boundary, region_monotone
from src.errors import AnonDetError, DecayFitError, ExperimentError
from src.probability.distributions import Profile
from src.projection.exponents import exponent_informed, exponent_np, projection_np
from src.simulation.decay import decay_fit
from src.simulation.monte_carlo import simulate_errors
from src.simulation.sanov import TypeRegion, divergence_exterior, half_space, sanov_check, whole_simplex

PROCESSING = "processing"
COMPLETED = "completed"
FAILED = "failed"


@dataclass
class RunOutput:
    frame: pd.DataFrame
    resolutions: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def _alpha_vector(entry) -> List[float]:
    return list(entry) if isinstance(entry, list) else [float(entry), 1.0 - float(entry)]


def _anonymity_point(profile: Profile, alpha: List[float]) -> dict:
    point = profile.with_alpha(alpha)
    projection = projection_np(point)
    informed = exponent_informed(point)
    return {
        "alpha": alpha[0],
        "alpha_vector": " ".join(f"{a:.12g}" for a in alpha),
        "E_anonymous": projection.value,
        "E_informed": informed,
        "price": informed - projection.value if np.isfinite(informed) else np.inf,
        "status": projection.status,
    }


def run_price_of_anonymity(config: ExperimentConfig, settings: Settings) -> RunOutput:
    profile = config.target_profile()
    grid = [_alpha_vector(a) for a in config.sweep.alpha_grid]
    rows = Parallel(n_jobs=settings.threads)(delayed(_anonymity_point)(profile, a) for a in grid)
    return RunOutput(pd.DataFrame(rows))


def _byzantine_point(config: ExperimentConfig, alpha: float) -> dict:
    inst = config.byzantine.instance(alpha)
    worst = byzantine_worst_exponent(inst)
    iid = byzantine_iid_exponent(inst)
    return {"alpha": alpha, "E_worst": worst, "E_iid": iid, "gap": worst - iid}


def run_byzantine_compare(config: ExperimentConfig, settings: Settings) -> RunOutput:
    grid = [float(a) for a in config.sweep.alpha_grid]
    rows = Parallel(n_jobs=settings.threads)(delayed(_byzantine_point)(config, a) for a in grid)
    frame = pd.DataFrame(rows)
    summary = {
        "attack_threshold": attack_threshold(config.byzantine.instance(0.0)),
        "worst_dominates_iid": bool((frame["gap"] >= -1e-9).all()),
        "max_gap_bits": float(frame["gap"].max()),
    }
    return RunOutput(frame, summary=summary)


def run_partial_info(config: ExperimentConfig, settings: Settings) -> RunOutput:
    profile = config.target_profile()
    sweep = config.sweep
    rows, previous = [], None
    for L in sorted(sweep.L_list):
        result = best_clustering(profile, L, budget=sweep.budget, restarts=sweep.restarts, seed=config.seed,
                                 warm_start=previous, n_jobs=settings.threads)
        logger.info("L={}: exponent {:.6f} ({})", L, result.exponent, result.status)
        rows.append({
            "L": L,
            "super_groups": 2**L,
            "exponent": result.exponent,
            "status": result.status,
            "evaluations": result.evaluations,
            "clustering": " ".join(str(j) for j in result.clustering.assign),
        })
        previous = result.clustering
    summary = {"E_informed": exponent_informed(profile), "E_anonymous": exponent_np(profile)}
    return RunOutput(pd.DataFrame(rows), summary=summary)


def run_region_boundary(config: ExperimentConfig, settings: Settings) -> RunOutput:
    profile = config.target_profile()
    region = config.region
    resolution = region.resolution or DEFAULT_RESOLUTION.get(profile.d, 0.05)
    points = region_boundary(profile, lambdas=region.lambda_bits, n_points=region.n_points,
                             resolution=resolution, n_jobs=settings.threads)
    low, high = lambda_range(profile)
    summary = {
        "lambda_range_bits": [low, high],
        "E_np": exponent_np(profile),
        "E_np_swapped": exponent_np(profile.swapped()),
        "monotone": region_monotone(points),
        "closures_differ": sum(p.closures_differ for p in points),
    }
    return RunOutput(pd.DataFrame([p.as_row() for p in points]), resolutions={"region": resolution},
                     summary=summary)


def run_finite_n_validation(config: ExperimentConfig, settings: Settings) -> RunOutput:
    profile = config.target_profile()
    sweep = config.sweep
    rows = []
    for n in sweep.n_list:
        instance = profile.at_n(n)
        for test_id in sweep.tests:
            report = simulate_errors(instance, test_id, sweep.trials, config.seed, n_jobs=settings.threads)
            rows.append({
                "n": n,
                "nu": " ".join(str(v) for v in instance.nu),
                "test": report.test_id,
                "pf_exact": report.exact_pf,
                "pm_exact": report.exact_pm,
                "pf_mc": report.pf,
                "pm_mc": report.pm,
                "pf_ci_low": report.pf_ci[0],
                "pf_ci_high": report.pf_ci[1],
                "pm_ci_low": report.pm_ci[0],
                "pm_ci_high": report.pm_ci[1],
                "neg_log2_pm_exact": -np.log2(report.exact_pm) if report.exact_pm > 0 else np.inf,
            })
    frame = pd.DataFrame(rows)
    slopes = {}
    for test_id, group in frame.groupby("test", sort=True):
        points = [(int(n), float(np.log2(pm)) if pm > 0 else -np.inf) for n, pm in zip(group["n"], group["pm_exact"])]
        try:
            slopes[test_id] = decay_fit(points).slope
        except DecayFitError as e:
            logger.warning("no decay fit for {}: {}", test_id, e)
    summary = {"E_np": exponent_np(profile), "pm_decay_slope_bits": slopes}
    return RunOutput(frame, resolutions={"trials": sweep.trials}, summary=summary)


def build_region(spec: SanovRegionConfig, profile: Profile, theta: int) -> TypeRegion:
    if spec.kind == "whole_simplex":
        return whole_simplex()
    if spec.kind == "half_space":
        return half_space(spec.t, spec.symbol, spec.margin)
    return divergence_exterior(profile, theta, spec.delta_bits, spec.margin)


def run_sanov(config: ExperimentConfig, settings: Settings) -> RunOutput:
    profile = config.target_profile()
    theta = config.sweep.theta
    regions = [build_region(spec, profile, theta) for spec in config.sweep.regions]
    reports = Parallel(n_jobs=settings.threads, prefer="threads")(
        delayed(sanov_check)(profile, theta, region, config.sweep.n_list) for region in regions
    )
    rows = [
        {"region": r.region, "theta": r.theta, "slope": r.slope, "lower": r.lower, "upper": r.upper,
         "tolerance": r.tolerance, "holds": r.holds}
        for r in reports
    ]
    return RunOutput(pd.DataFrame(rows), resolutions={"grid": 1e-3},
                     summary={"all_hold": all(r.holds for r in reports)})


RUNNERS: Dict[str, Callable[[ExperimentConfig, Settings], RunOutput]] = {
    "price-of-anonymity": run_price_of_anonymity,
    "byzantine-compare": run_byzantine_compare,
    "partial-info": run_partial_info,
    "region-boundary": run_region_boundary,
    "finite-n-validation": run_finite_n_validation,
    "sanov": run_sanov,
}


def run_experiment(config: ExperimentConfig, settings: Settings, output_dir: Path) -> Dict[str, Path]:
    """Run one experiment and write results.csv, manifest.json and (optionally) plot.svg.

    On failure the manifest is written with status "failed". Library and I/O errors
    propagate unchanged; anything else is wrapped in ExperimentError.
    """
    output_dir = Path(output_dir)
    document = config.model_dump(mode="json")
    digest = artifacts.config_hash(document)
    logger.info("[{}] {} -> {}", PROCESSING, config.kind, output_dir)
    try:
        runner = RUNNERS.get(config.kind)
        if runner is None:
            raise ExperimentError(f"no runner for experiment kind {config.kind!r}")
        output = runner(config, settings)
    except Exception as e:
        logger.error("{} failed: {}", config.kind, e)
        try:
            artifacts.write_manifest(output_dir / "manifest.json", document, FAILED)
        except OSError:
            pass
        if isinstance(e, (AnonDetError, OSError, ValueError)):
            raise
        raise ExperimentError(f"{config.kind} failed: {e}") from e

    files = {"results": artifacts.write_results_csv(output.frame, output_dir / "results.csv", config.kind)}
    if config.plot:
        plot = artifacts.render_plot(output.frame, config.kind, output_dir / "plot.svg", digest)
        if plot is not None:
            files["plot"] = plot
    files["manifest"] = artifacts.write_manifest(output_dir / "manifest.json", document, COMPLETED,
                                                 resolutions=output.resolutions, summary=output.summary)
    logger.info("[{}] {} rows written to {}", COMPLETED, len(output.frame), files["results"])
    return files
