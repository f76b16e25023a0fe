# app/artifacts.py
"""Result files of one experiment run: results.csv, manifest.json, plot.svg, error.json."""

import hashlib
import json
import platform
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Dict, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import scipy  # noqa: E402

CSV_SCHEMA = "anondet-results/v1"
FLOAT_FORMAT = "%.12g"

# (x column, y columns, x label, y label) per experiment kind
PLOT_LAYOUT = {
    "price-of-anonymity": ("alpha", ["E_anonymous", "E_informed"], "alpha_1", "exponent (bits)"),
    "byzantine-compare": ("alpha", ["E_worst", "E_iid"], "Byzantine fraction alpha", "exponent (bits)"),
    "partial-info": ("L", ["exponent"], "bits of partial information L", "exponent (bits)"),
    "region-boundary": ("E0_bits", ["E1_bits"], "E_0 (bits)", "E_1 (bits)"),
    "finite-n-validation": ("n", ["neg_log2_pm_exact"], "n", "-log2 P_M"),
    "sanov": ("region", ["slope", "lower", "upper"], "region", "decay rate (bits)"),
}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=str)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def _version(package: str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


def package_versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "anondet": _version("anondet"),
    }


def write_results_csv(frame: pd.DataFrame, path: Path, kind: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema: {CSV_SCHEMA} kind={kind}\n")
        frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_results_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_json(obj, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return path


def write_manifest(
    path: Path,
    config: dict,
    status: str,
    resolutions: Optional[dict] = None,
    summary: Optional[dict] = None,
) -> Path:
    """manifest.json; ``created_at`` is the only field that changes between identical runs."""
    manifest = {
        "config": config,
        "config_sha256": config_hash(config),
        "versions": package_versions(),
        "resolutions": resolutions or {},
        "summary": summary or {},
        "status": status,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    return write_json(manifest, path)


def write_error(path: Path, exc: BaseException, exit_code: int) -> dict:
    record = {"status": "failed", "exit_code": exit_code, "error": type(exc).__name__, "message": str(exc)}
    try:
        write_json(record, path)
    except OSError:
        pass
    return record


def render_plot(frame: pd.DataFrame, kind: str, path: Path, digest: str) -> Optional[Path]:
    """Standalone SVG of the sweep, reproducible byte-for-byte for a given frame and digest."""
    if kind not in PLOT_LAYOUT or frame.empty:
        return None
    x, ys, xlabel, ylabel = PLOT_LAYOUT[kind]
    plt.rcParams["svg.hashsalt"] = "anondet"
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        for y in ys:
            if y not in frame:
                continue
            values = frame[y].replace([np.inf, -np.inf], np.nan)
            if frame[x].dtype == object:
                ax.plot(range(len(frame)), values, marker="o", label=y)
                ax.set_xticks(range(len(frame)))
                ax.set_xticklabels(frame[x], rotation=20, fontsize=7)
            else:
                ax.plot(frame[x], values, marker="o", markersize=3, label=y)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(kind)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None, "Description": f"config-sha256={digest}"})
    finally:
        plt.close(fig)
    return path
