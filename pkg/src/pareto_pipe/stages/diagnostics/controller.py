from __future__ import annotations

from dataclasses import dataclass

import pandas as pd
from loguru import logger

from pareto_pipe.diagnostics.extremogram import (
    chi_comparison,
    empirical_extremogram,
)
from pareto_pipe.diagnostics.pot_stability import (
    MIN_EPISODES,
    PotStabilityReport,
    pot_stability_report,
)
from pareto_pipe.io.geometry import SiteSet
from pareto_pipe.io.tables import DataMatrix
from pareto_pipe.models.rpareto import ParetoEpisode
from pareto_pipe.models.variogram import VariogramModel
from pareto_pipe.ops.base import RiskFunctional


@dataclass
class DiagnosticsResult:
    """Extremogram table (with model column when a fit exists) and report."""

    extremogram: pd.DataFrame
    pot_stability: PotStabilityReport | None


class DiagnosticsController:
    """Runs the extremogram and, given episodes, the POT-stability checks."""

    def __init__(
        self,
        sites: SiteSet,
        thresholds: list[float] | None = None,
        n_bins: int = 15,
        model: VariogramModel | None = None,
        u_grid: list[float] | None = None,
        n_permutations: int = 999,
        seed: int = 0,
    ) -> None:
        self.sites = sites
        self.thresholds = list(thresholds or [0.95, 0.98])
        self.n_bins = n_bins
        self.model = model
        self.u_grid = list(u_grid or [1.0])
        self.n_permutations = n_permutations
        self.seed = seed

    def extremogram(self, data: DataMatrix) -> pd.DataFrame:
        """Binned extremogram at every threshold, stacked."""
        tables = [
            empirical_extremogram(data, self.sites, margp, self.n_bins)
            for margp in self.thresholds
        ]
        table = pd.concat(tables, ignore_index=True)
        if self.model is None:
            logger.info("No fitted model; extremogram is empirical only.")
            return table
        return chi_comparison(self.model, table)

    def run(
        self,
        data: DataMatrix,
        episodes: list[ParetoEpisode] | None = None,
        risk: RiskFunctional | None = None,
    ) -> DiagnosticsResult:
        """Computes the diagnostics.

        The POT-stability report needs ``episodes`` and their ``risk`` and is
        skipped (with a warning) when fewer than 30 episodes are available.
        """
        table = self.extremogram(data)
        report = None
        if episodes is not None and risk is not None:
            if len(episodes) >= MIN_EPISODES:
                report = pot_stability_report(
                    episodes,
                    risk,
                    self.u_grid,
                    self.n_permutations,
                    self.seed,
                )
            else:
                logger.warning(
                    f"POT-stability checks skipped: {len(episodes)} episodes "
                    f"(need {MIN_EPISODES})."
                )
        logger.success(
            f"Diagnostics done: {len(table)} extremogram rows"
            f"{'' if report is None else ', POT-stability report'}."
        )
        return DiagnosticsResult(table, report)
