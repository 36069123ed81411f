from __future__ import annotations

import numpy as np
from loguru import logger

from pareto_pipe.errors import ConfigError
from pareto_pipe.io.geometry import SiteSet
from pareto_pipe.models.inference import (
    DEFAULT_MAX_ITERS,
    FitResult,
    Objective,
    fit,
)
from pareto_pipe.models.rpareto import ParetoEpisode, extract_episodes
from pareto_pipe.models.variogram import Family
from pareto_pipe.ops.base import RiskFunctional, WeightFunction
from pareto_pipe.ops.risk_functionals import SiteRisk
from pareto_pipe.ops.weight_functions import MarginalWeights


class DependenceFitController:
    """Extracts risk exceedances from standardized data and fits the variogram.

    The risk threshold is either given or taken as an empirical quantile of
    the risk over the complete rows.
    """

    def __init__(
        self,
        sites: SiteSet,
        risk: RiskFunctional,
        init: tuple[float, float] = (1.0, 1.0),
        objective: Objective = "gradscore",
        u: float | None = None,
        u_quantile: float = 0.95,
        family: Family = "power",
        weights: WeightFunction | None = None,
        max_iters: int = DEFAULT_MAX_ITERS,
        min_exceedances: int = 20,
    ) -> None:
        """Initializes the DependenceFitController.

        Args:
            sites: Site set of the data columns.
            risk: Risk functional defining exceedances.
            init: Starting ``(beta, alpha)``.
            objective: ``gradscore`` or ``loglik``.
            u: Risk threshold on the standardized scale.
            u_quantile: Quantile of the risk used when ``u`` is not set.
            family: Variogram family.
            weights: Gradient-score weights (marginal weights when unset).
            max_iters: Iteration cap of the optimizer.
            min_exceedances: Fewest exceedances a fit is run on.

        Raises:
            ConfigError: If the risk does not fit the site set.
        """
        try:
            risk.validate_dimension(sites.n_sites)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if (
            objective == "gradscore"
            and not isinstance(risk, SiteRisk)
            and (weights is None or isinstance(weights, MarginalWeights))
        ):
            logger.warning(
                f"Marginal weights do not vanish on the boundary of the "
                f"'{risk.type_name}' exceedance region; consider 'risk' "
                f"weights."
            )
        self.sites = sites
        self.risk = risk
        self.init = init
        self.objective = objective
        self.u = u
        self.u_quantile = u_quantile
        self.family = family
        self.weights = weights
        self.max_iters = max_iters
        self.min_exceedances = min_exceedances

    def risk_threshold(self, values: np.ndarray) -> float:
        """The configured ``u``, or the risk quantile over complete rows."""
        if self.u is not None:
            return float(self.u)
        complete = values[~np.any(np.isnan(values), axis=1)]
        if complete.size == 0:
            raise ConfigError("No complete rows to set the risk threshold.")
        u = float(np.quantile(self.risk(complete), self.u_quantile))
        logger.info(
            f"Risk threshold u={u:.6g} from the {self.u_quantile} quantile."
        )
        return u

    def extract(self, values: np.ndarray) -> tuple[list[ParetoEpisode], float]:
        """Episodes above the risk threshold.

        Raises:
            ConfigError: If fewer than ``min_exceedances`` rows exceed.
        """
        u = self.risk_threshold(values)
        episodes = extract_episodes(values, self.risk, u)
        if len(episodes) < self.min_exceedances:
            msg = (
                f"Only {len(episodes)} '{self.risk.type_name}' exceedances "
                f"above u={u:.6g}; at least {self.min_exceedances} are needed. "
                f"Choose a lower risk threshold u."
            )
            logger.error(msg)
            raise ConfigError(msg)
        return episodes, u

    def run(self, values: np.ndarray) -> tuple[FitResult, list[ParetoEpisode]]:
        """Extracts the exceedances of ``values`` and fits them.

        Args:
            values: Standardized ``(n, D)`` matrix.

        Returns:
            The fit and the episodes it was computed from.
        """
        episodes, u = self.extract(values)
        result = fit(
            episodes,
            self.sites,
            self.init,
            objective=self.objective,
            risk=self.risk,
            weights=self.weights,
            family=self.family,
            max_iters=self.max_iters,
            u=u,
        )
        return result, episodes
