# app/schemas.py
"""Experiment configuration documents (JSON), validated before any computation."""

import math
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.analysis.byzantine import ByzantineInstance
from src.analysis.partial_info import partial_info_profile
from src.chernoff.efficient_test import TIE_TOLERANCE, lambda_range
from src.errors import AnonDetError
from src.probability.distributions import SUM_TOLERANCE, Dist, Profile

ExperimentKind = Literal[
    "price-of-anonymity",
    "byzantine-compare",
    "partial-info",
    "region-boundary",
    "finite-n-validation",
    "sanov",
]


class ConfigError(ValueError):
    """Config document that cannot be read as JSON or fails cross-field checks."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProfileConfig(_Strict):
    """K groups; rows of p0/p1 are per-group distributions over one alphabet."""

    p0: List[List[float]]
    p1: List[List[float]]
    alpha: Optional[List[float]] = None
    nu: Optional[List[int]] = None
    labels: Optional[List[str]] = None

    @model_validator(mode="after")
    def _builds(self):
        try:
            self.to_profile()
        except AnonDetError as e:
            raise ValueError(str(e)) from e
        return self

    def to_profile(self) -> Profile:
        return Profile(
            p0=[Dist(p) for p in self.p0],
            p1=[Dist(p) for p in self.p1],
            alpha=self.alpha,
            nu=tuple(self.nu) if self.nu is not None else None,
            labels=tuple(self.labels or ()),
        )


class ByzantineConfig(_Strict):
    p0: List[float]
    p1: List[float]

    @model_validator(mode="after")
    def _builds(self):
        try:
            self.instance(0.0)
        except AnonDetError as e:
            raise ValueError(str(e)) from e
        return self

    def instance(self, alpha: float) -> ByzantineInstance:
        return ByzantineInstance(Dist(self.p0), Dist(self.p1), alpha)


class RegionConfig(_Strict):
    lambda_bits: Optional[List[float]] = None
    n_points: int = Field(default=21, ge=2)
    resolution: Optional[float] = Field(default=None, gt=0, le=0.5)

    @field_validator("lambda_bits")
    @classmethod
    def _finite(cls, value):
        if value is not None and not all(math.isfinite(x) for x in value):
            raise ValueError("lambda_bits must be finite")
        return value


class ConstructionConfig(_Strict):
    """Partial-information construction: Ber(theta_k) vs Ber(1 - theta_k)."""

    K: int = Field(ge=2)
    grid: Literal["interior", "endpoint"] = "interior"

    def to_profile(self) -> Profile:
        return partial_info_profile(self.K, self.grid)


class SanovRegionConfig(_Strict):
    kind: Literal["whole_simplex", "half_space", "divergence_exterior"]
    t: Optional[float] = None
    symbol: int = 1
    delta_bits: Optional[float] = Field(default=None, gt=0)
    margin: float = Field(default=0.01, ge=0)

    @model_validator(mode="after")
    def _parameters(self):
        if self.kind == "half_space" and self.t is None:
            raise ValueError("half_space needs t")
        if self.kind == "divergence_exterior" and self.delta_bits is None:
            raise ValueError("divergence_exterior needs delta_bits")
        return self


class SweepConfig(_Strict):
    alpha_grid: Optional[List[Union[float, List[float]]]] = None
    n_list: Optional[List[int]] = None
    L_list: Optional[List[int]] = None
    epsilon: float = Field(default=0.1, gt=0, lt=1)
    delta_bits: Optional[float] = Field(default=None, gt=0)
    tests: List[str] = Field(default_factory=lambda: ["mlrt(0.1)"])
    trials: int = Field(default=10_000, ge=1)
    theta: Literal[0, 1] = 0
    regions: List[SanovRegionConfig] = Field(default_factory=list)
    budget: int = Field(default=20_000, ge=1)
    restarts: int = Field(default=8, ge=0)

    @field_validator("alpha_grid")
    @classmethod
    def _fractions(cls, value):
        for entry in value or ():
            if isinstance(entry, list):
                if not entry or any(not math.isfinite(a) or a < 0 for a in entry):
                    raise ValueError(f"alpha_grid entry {entry} must hold nonnegative fractions")
                if abs(sum(entry) - 1.0) > SUM_TOLERANCE:
                    raise ValueError(f"alpha_grid entry {entry} sums to {sum(entry)!r}, not 1")
            elif not 0 <= entry <= 1:
                raise ValueError(f"alpha_grid entry {entry} outside [0, 1]")
        return value

    @field_validator("n_list")
    @classmethod
    def _increasing(cls, value):
        if value is not None:
            if any(n < 1 for n in value) or sorted(set(value)) != list(value):
                raise ValueError("n_list must be strictly increasing positive integers")
        return value


class ExperimentConfig(_Strict):
    kind: ExperimentKind
    seed: int = Field(default=0, ge=0)
    output_dir: Optional[Path] = None
    plot: bool = True
    profile: Optional[ProfileConfig] = None
    byzantine: Optional[ByzantineConfig] = None
    construction: Optional[ConstructionConfig] = None
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    region: RegionConfig = Field(default_factory=RegionConfig)

    @model_validator(mode="after")
    def _required_sections(self):
        s = self.sweep
        if self.kind == "price-of-anonymity":
            self._need(self.profile, "profile")
            self._need(s.alpha_grid, "sweep.alpha_grid")
            K = len(self.profile.p0)
            for a in s.alpha_grid:
                if isinstance(a, list) and len(a) != K:
                    raise ValueError(f"alpha_grid entries must hold K={K} fractions")
                if not isinstance(a, list) and K != 2:
                    raise ValueError("scalar alpha_grid entries need K=2 (alpha, 1 - alpha)")
        elif self.kind == "byzantine-compare":
            self._need(self.byzantine, "byzantine")
            self._need(s.alpha_grid, "sweep.alpha_grid")
            if any(isinstance(a, list) or not 0 <= a <= 1 for a in s.alpha_grid):
                raise ValueError("byzantine alpha_grid entries must be scalars in [0, 1]")
        elif self.kind == "partial-info":
            if self.profile is None and self.construction is None:
                raise ValueError("partial-info needs profile or construction")
            self._need(s.L_list, "sweep.L_list")
        elif self.kind == "region-boundary":
            self._need(self.profile, "profile")
            if self.region.lambda_bits:
                self._check_lambdas()
        elif self.kind == "finite-n-validation":
            self._need(self.profile, "profile")
            self._need(s.n_list, "sweep.n_list")
        elif self.kind == "sanov":
            self._need(self.profile, "profile")
            self._need(s.n_list, "sweep.n_list")
            if not s.regions:
                raise ValueError("sanov needs at least one entry in sweep.regions")
        return self

    def _check_lambdas(self) -> None:
        try:
            low, high = lambda_range(self.profile.to_profile())
        except AnonDetError as e:
            raise ValueError(str(e)) from e
        for lam in self.region.lambda_bits:
            if lam < low - TIE_TOLERANCE or lam > high + TIE_TOLERANCE:
                raise ValueError(f"lambda_bits entry {lam} outside [{low:.6g}, {high:.6g}]")

    @staticmethod
    def _need(value, name: str) -> None:
        if value is None:
            raise ValueError(f"missing {name}")

    def resolved_output_dir(self, default_root: Path) -> Path:
        if self.output_dir is None:
            return Path(default_root) / self.kind
        return Path(self.output_dir)

    def target_profile(self) -> Profile:
        if self.profile is not None:
            return self.profile.to_profile()
        return self.construction.to_profile()
