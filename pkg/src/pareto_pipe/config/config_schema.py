from __future__ import annotations

import hashlib
import json
import operator
from functools import reduce
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any, Literal

from loguru import logger
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    create_model,
    field_validator,
    model_validator,
)

from pareto_pipe.models.inference import Objective
from pareto_pipe.models.margins import MarginMode
from pareto_pipe.models.variogram import Family, VariogramModel
from pareto_pipe.ops.base import RiskFunctional, WeightFunction
from pareto_pipe.ops.registry import REGISTRY, Kind, build_op
from pareto_pipe.rng import MAX_SEED

#: Schema generation understood by this build.
CURRENT_SCHEMA_VERSION = 1

###################################################################
# Top-Level Configuration Models
###################################################################


class GeneralSettings(BaseModel):
    """General run settings."""

    model_config = ConfigDict(extra="forbid")

    analysis_name: str = "run"
    out_dir: str = "results"
    seed: int = Field(0, ge=0, le=MAX_SEED)
    threads: int = Field(1, ge=1)
    log_dir: str | None = None


class GridSettings(BaseModel):
    """Regular simulation grid, x varying fastest."""

    model_config = ConfigDict(extra="forbid")

    nx: int = Field(ge=1)
    ny: int = Field(ge=1)
    spacing: float = Field(1.0, gt=0)


class SitesSettings(BaseModel):
    """Where the site set comes from: a CSV file or a grid."""

    model_config = ConfigDict(extra="forbid")

    path: str | None = None
    grid: GridSettings | None = None
    lonlat: bool = False

    @model_validator(mode="after")
    def _exactly_one_source(self) -> SitesSettings:
        if (self.path is None) == (self.grid is None):
            raise ValueError("Give exactly one of 'path' and 'grid'.")
        return self


class DataSettings(BaseModel):
    """Observation table."""

    model_config = ConfigDict(extra="forbid")

    path: str | None = None


class MarginSettings(BaseModel):
    """Marginal standardization."""

    model_config = ConfigDict(extra="forbid")

    q: float = Field(0.95, gt=0, lt=1)
    mode: MarginMode = "gpd"
    per_site_q: dict[str, float] = Field(default_factory=dict)

    @field_validator("per_site_q")
    @classmethod
    def _check_levels(cls, v: dict[str, float]) -> dict[str, float]:
        bad = {k: q for k, q in v.items() if not 0 < q < 1}
        if bad:
            raise ValueError(f"Threshold probabilities outside (0, 1): {bad}")
        return v


class GevMapSettings(BaseModel):
    """Per-site (or common) location, scale and shape."""

    model_config = ConfigDict(extra="forbid")

    mu: float | list[float] = 0.0
    sigma: float | list[float] = 1.0
    xi: float | list[float] = 0.0


class SimulateSettings(BaseModel):
    """Ensemble simulation."""

    model_config = ConfigDict(extra="forbid")

    n_episodes: int = Field(1000, ge=1)
    max_iters: int = Field(10**6, ge=1)
    gev_map: GevMapSettings | None = None


class DiagnoseSettings(BaseModel):
    """Extremogram and POT-stability checks."""

    model_config = ConfigDict(extra="forbid")

    thresholds: list[float] = Field(default_factory=lambda: [0.95, 0.98])
    n_bins: int = Field(15, ge=1)
    u_grid: list[float] = Field(default_factory=lambda: [1.0, 2.0, 5.0])
    n_permutations: int = Field(999, ge=0)
    plot: bool = True
    fit_path: str | None = None

    @field_validator("thresholds")
    @classmethod
    def _check_thresholds(cls, v: list[float]) -> list[float]:
        if not v or any(not 0 < q < 1 for q in v):
            raise ValueError("Thresholds must be a nonempty list in (0, 1).")
        return v


class LiftSettings(BaseModel):
    """Lifting of empirical episodes."""

    model_config = ConfigDict(extra="forbid")

    episodes_path: str | None = None
    n_episodes: int = Field(1000, ge=0)
    alpha: float = Field(1.0, gt=0)


###################################################################
# Operator specs (generated from the registry)
###################################################################
class OpSpec(BaseModel):
    """A registered operator selected by ``type``."""

    model_config = ConfigDict(extra="forbid")

    type: str

    def build(self, kind: Kind) -> Any:
        """Instantiates the operator."""
        parameters = getattr(self, "parameters", None)
        if isinstance(parameters, BaseModel):
            parameters = parameters.model_dump()
        return build_op(kind, self.type, **(parameters or {}))


def create_op_models(kind: Kind, suffix: str) -> list[type[BaseModel]]:
    """Creates one spec model per operator registered under ``kind``.

    Returns:
        Models with a literal ``type`` and the operator's ``Params`` as
        ``parameters``.
    """
    models = []
    for name, entry in REGISTRY[kind].items():
        model_name = "".join(p.capitalize() for p in name.split("_")) + suffix
        models.append(
            create_model(
                model_name,
                type=(Literal[name], ...),
                parameters=(
                    entry.param_model,
                    Field(default={}, validate_default=True),
                ),
                __base__=OpSpec,
            )
        )
    return models


if TYPE_CHECKING:
    RiskSpec = OpSpec
    WeightSpec = OpSpec
else:
    RiskSpec = reduce(
        operator.or_, create_op_models("risk_functional", "RiskSpec")
    )
    WeightSpec = reduce(
        operator.or_, create_op_models("weight_function", "WeightSpec")
    )


class FitSettings(BaseModel):
    """Dependence fit."""

    model_config = ConfigDict(extra="forbid")

    objective: Objective = "gradscore"
    family: Family = "power"
    u: float | None = Field(None, gt=0)
    u_quantile: float = Field(0.95, gt=0, lt=1)
    init_beta: float = Field(1.0, gt=0)
    init_alpha: float = Field(1.0, gt=0)
    max_iters: int = Field(2000, ge=1)
    min_exceedances: int = Field(20, ge=1)
    weights: Annotated[WeightSpec, Field(discriminator="type")] | None = None

    def build_weights(self) -> WeightFunction | None:
        return None if self.weights is None else self.weights.build(
            "weight_function"
        )


class RunConfig(BaseModel):
    """Root model of a run configuration.

    Input paths are checked for existence at validation time. Derived paths
    (``run_dir``, ``log_dir_path``) are resolved from ``general``.
    """

    model_config = ConfigDict(extra="forbid")

    schema_version: int = CURRENT_SCHEMA_VERSION
    general: GeneralSettings = Field(default_factory=GeneralSettings)
    sites: SitesSettings | None = None
    data: DataSettings = Field(default_factory=DataSettings)
    vario: VariogramModel | None = None
    risk: Annotated[RiskSpec, Field(discriminator="type")] | None = None
    margins: MarginSettings = Field(default_factory=MarginSettings)
    simulate: SimulateSettings = Field(default_factory=SimulateSettings)
    fit: FitSettings = Field(default_factory=FitSettings)
    diagnose: DiagnoseSettings = Field(default_factory=DiagnoseSettings)
    lift: LiftSettings = Field(default_factory=LiftSettings)

    @model_validator(mode="after")
    def _check_inputs_exist(self) -> RunConfig:
        inputs = {
            "sites.path": self.sites.path if self.sites else None,
            "data.path": self.data.path,
            "lift.episodes_path": self.lift.episodes_path,
            "diagnose.fit_path": self.diagnose.fit_path,
        }
        missing = [
            f"{key}='{value}'"
            for key, value in inputs.items()
            if value is not None and not Path(value).exists()
        ]
        if missing:
            raise ValueError(f"Referenced files do not exist: {missing}")
        return self

    @property
    def run_dir(self) -> Path:
        return Path(self.general.out_dir) / self.general.analysis_name

    @property
    def log_dir_path(self) -> Path:
        if self.general.log_dir:
            return Path(self.general.log_dir)
        return self.run_dir / "logs"

    def build_risk(self) -> RiskFunctional:
        """The configured risk functional, ``site`` 0 when none is set."""
        if self.risk is None:
            logger.warning("No risk functional configured; using 'site' 0.")
            return build_op("risk_functional", "site", index=0)
        return self.risk.build("risk_functional")

    def config_hash(self) -> str:
        """First 16 hex digits of the SHA-256 of the canonical JSON dump.

        Worker count, output folder and log location do not change any
        output and are left out.
        """
        payload = self.model_dump(
            mode="json",
            exclude={"general": {"threads", "out_dir", "log_dir"}},
        )
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
