# tests/test_experiments.py
import json

import numpy as np
import pytest
from pydantic import ValidationError

from app.artifacts import read_results_csv
from app.core.config import Settings
from app.schemas import ExperimentConfig
from app.tasks.experiment_tasks import RUNNERS, run_experiment
from src.errors import ExperimentError

PROFILE = {"p0": [[0.8, 0.2], [0.6, 0.4]], "p1": [[0.4, 0.6], [0.2, 0.8]], "alpha": [0.5, 0.5]}


def _run(tmp_path, document):
    config = ExperimentConfig.model_validate(document)
    files = run_experiment(config, Settings(), tmp_path / config.kind)
    manifest = json.loads(files["manifest"].read_text(encoding="utf-8"))
    assert manifest["status"] == "completed"
    return read_results_csv(files["results"]), manifest


def test_price_of_anonymity(tmp_path):
    frame, _ = _run(tmp_path, {"kind": "price-of-anonymity", "profile": PROFILE,
                               "sweep": {"alpha_grid": [0.0, 0.5, [0.25, 0.75], 1.0]}})
    assert list(frame["alpha"]) == [0.0, 0.5, 0.25, 1.0]
    assert (frame["price"] >= -1e-9).all()
    # a single active group is never hurt by anonymity
    assert frame.loc[0, "price"] == pytest.approx(0.0, abs=1e-9)
    assert frame.loc[3, "price"] == pytest.approx(0.0, abs=1e-9)


def test_partial_info(tmp_path):
    frame, manifest = _run(tmp_path, {"kind": "partial-info", "construction": {"K": 6},
                                      "sweep": {"L_list": [0, 1, 2]}})
    assert list(frame["super_groups"]) == [1, 2, 4]
    assert np.all(np.diff(frame["exponent"]) > 0)
    assert frame["exponent"].iloc[0] == pytest.approx(manifest["summary"]["E_anonymous"], abs=1e-9)


def test_region_boundary(tmp_path):
    frame, manifest = _run(tmp_path, {"kind": "region-boundary", "profile": PROFILE,
                                      "region": {"n_points": 5, "resolution": 0.01}})
    assert list(frame.columns) == [
        "lambda_bits", "E0_bits", "E1_bits", "E0_open_bits", "E1_open_bits", "closures_differ", "resolution",
    ]
    assert manifest["summary"]["monotone"] is True
    assert manifest["summary"]["closures_differ"] == int(frame["closures_differ"].sum())
    assert frame["E1_bits"].iloc[0] == pytest.approx(manifest["summary"]["E_np"], abs=1e-6)


def test_finite_n_validation(tmp_path):
    frame, manifest = _run(tmp_path, {"kind": "finite-n-validation", "seed": 3, "profile": PROFILE,
                                      "sweep": {"n_list": [4, 8, 12], "tests": ["mlrt(0.1)", "phi_eff"],
                                                "trials": 2000}})
    assert len(frame) == 6
    assert set(frame["test"]) == {"mlrt(0.1)", "phi_eff"}
    mlrt = frame[frame["test"] == "mlrt(0.1)"]
    np.testing.assert_allclose(mlrt["pf_exact"], 0.1, atol=1e-12)
    assert (frame["pf_ci_low"] <= frame["pf_mc"]).all() and (frame["pf_mc"] <= frame["pf_ci_high"]).all()
    assert set(manifest["summary"]["pm_decay_slope_bits"]) == {"mlrt(0.1)", "phi_eff"}
    assert manifest["resolutions"]["trials"] == 2000


def test_sanov(tmp_path):
    frame, manifest = _run(tmp_path, {"kind": "sanov", "profile": PROFILE,
                                      "sweep": {"n_list": [10, 20, 30],
                                                "regions": [{"kind": "whole_simplex"}]}})
    assert frame["region"].tolist() == ["whole_simplex"]
    assert bool(frame["holds"].iloc[0])
    assert manifest["summary"]["all_hold"] is True


@pytest.mark.parametrize("document", [
    {"kind": "price-of-anonymity", "profile": PROFILE, "sweep": {"alpha_grid": [[0.2, 0.3, 0.5]]}},
    {"kind": "partial-info", "sweep": {"L_list": [1]}},
    {"kind": "finite-n-validation", "profile": PROFILE, "sweep": {"n_list": [20, 10]}},
    {"kind": "sanov", "profile": PROFILE, "sweep": {"n_list": [10], "regions": [{"kind": "half_space"}]}},
    {"kind": "byzantine-compare", "byzantine": {"p0": [0.8, 0.2], "p1": [0.2, 0.8]},
     "sweep": {"alpha_grid": [1.5]}},
    {"kind": "region-boundary", "profile": PROFILE, "unexpected": 1},
    {"kind": "price-of-anonymity", "profile": PROFILE, "sweep": {"alpha_grid": [[0.3, 0.3]]}},
    {"kind": "price-of-anonymity", "profile": PROFILE, "sweep": {"alpha_grid": [[-0.2, 1.2]]}},
    {"kind": "region-boundary", "profile": PROFILE, "region": {"lambda_bits": [100.0]}},
])
def test_config_validation(document):
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(document)


def test_failed_run_leaves_failed_manifest(tmp_path):
    config = ExperimentConfig.model_validate({"kind": "sanov", "profile": PROFILE,
                                              "sweep": {"n_list": [10, 20, 30],
                                                        "regions": [{"kind": "half_space", "t": 1.5}]}})
    with pytest.raises(Exception):
        run_experiment(config, Settings(), tmp_path / "sanov")
    manifest = json.loads((tmp_path / "sanov" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "failed"


def test_unexpected_runner_failure_is_an_experiment_error(tmp_path, monkeypatch):
    def broken(config, settings):
        raise RuntimeError("worker died")

    monkeypatch.setitem(RUNNERS, "price-of-anonymity", broken)
    config = ExperimentConfig.model_validate({"kind": "price-of-anonymity", "profile": PROFILE,
                                              "sweep": {"alpha_grid": [0.5]}})
    with pytest.raises(ExperimentError, match="worker died"):
        run_experiment(config, Settings(), tmp_path / "poa")
    manifest = json.loads((tmp_path / "poa" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["status"] == "failed"


def test_missing_runner_is_an_experiment_error(tmp_path, monkeypatch):
    monkeypatch.delitem(RUNNERS, "price-of-anonymity")
    config = ExperimentConfig.model_validate({"kind": "price-of-anonymity", "profile": PROFILE,
                                              "sweep": {"alpha_grid": [0.5]}})
    with pytest.raises(ExperimentError, match="no runner"):
        run_experiment(config, Settings(), tmp_path / "poa")
