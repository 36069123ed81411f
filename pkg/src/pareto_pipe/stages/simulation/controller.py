from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from loguru import logger

from pareto_pipe.errors import ConfigError
from pareto_pipe.io.geometry import SiteSet
from pareto_pipe.models.rpareto import (
    DEFAULT_MAX_ITERS,
    AcceptanceStats,
    BrownResnickField,
    GevMarginalMap,
    ParetoEpisode,
    generalized_transform,
    simulate_ensemble,
)
from pareto_pipe.models.variogram import VariogramModel
from pareto_pipe.ops.base import RiskFunctional


@dataclass
class SimulationResult:
    """Ensemble drawn by a :class:`SimulationController`.

    Attributes:
        episodes: Episodes on the standard-Pareto scale.
        stats: Pooled rejection counts.
        generalized: Fields after the marginal map, when one was given.
    """

    episodes: list[ParetoEpisode]
    stats: AcceptanceStats
    generalized: np.ndarray | None = None


class SimulationController:
    """Simulates an r-Pareto ensemble on a site set.

    Every check on the risk, the ensemble size and the marginal map runs in
    the constructor, so a bad combination fails before any sampling.
    """

    def __init__(
        self,
        sites: SiteSet,
        model: VariogramModel,
        risk: RiskFunctional,
        n_episodes: int,
        seed: int,
        threads: int = 1,
        max_iters: int = DEFAULT_MAX_ITERS,
        gev_map: GevMarginalMap | None = None,
    ) -> None:
        """Initializes the SimulationController.

        Args:
            sites: Site set.
            model: Variogram of the Brown-Resnick model.
            risk: Risk functional of the episodes.
            n_episodes: Ensemble size, >= 1.
            seed: Master seed; episode ``k`` uses stream ``(seed, k)``.
            threads: Worker threads.
            max_iters: Base draws per rejection sample.
            gev_map: Optional marginal map to a generalized process.

        Raises:
            ConfigError: On an invalid combination of the above.
        """
        try:
            risk.validate_dimension(sites.n_sites)
        except ValueError as exc:
            msg = f"Risk '{risk.type_name}' does not fit the site set: {exc}"
            logger.error(msg)
            raise ConfigError(msg) from exc
        if n_episodes < 1:
            msg = f"Ensemble size must be >= 1, got {n_episodes}."
            logger.error(msg)
            raise ConfigError(msg)
        if gev_map is not None and gev_map.mu.size != sites.n_sites:
            msg = (
                f"Marginal map has {gev_map.mu.size} sites, the site set "
                f"{sites.n_sites}."
            )
            logger.error(msg)
            raise ConfigError(msg)

        self.sites = sites
        self.model = model
        self.risk = risk
        self.n_episodes = n_episodes
        self.seed = seed
        self.threads = threads
        self.max_iters = max_iters
        self.gev_map = gev_map

    def metadata(self, stats: AcceptanceStats) -> dict[str, Any]:
        """Sidecar entries describing the ensemble."""
        meta: dict[str, Any] = {
            "risk": {
                "type": self.risk.type_name,
                "parameters": self.risk.params.model_dump(),
            },
            "variogram": self.model.model_dump(),
            "seed": self.seed,
            "sampler": (
                "site"
                if self.risk.type_name == "site"
                else "mixture" if self.risk.LINEAR else "rejection"
            ),
        }
        if stats.attempts:
            meta["acceptance"] = {
                "attempts": stats.attempts,
                "accepted": stats.accepted,
                "rate": stats.rate,
                "dominating_constant": self.risk.dominating_constant(
                    self.sites.n_sites
                ),
            }
        return meta

    def run(self) -> SimulationResult:
        """Draws the ensemble (and its generalized version)."""
        brf = BrownResnickField(self.model, self.sites)
        episodes, stats = simulate_ensemble(
            brf,
            self.risk,
            self.n_episodes,
            self.seed,
            threads=self.threads,
            max_iters=self.max_iters,
        )
        generalized = None
        if self.gev_map is not None:
            generalized = generalized_transform(
                np.stack([e.Z for e in episodes]), self.gev_map
            )
        logger.success(f"Simulated {len(episodes)} episodes.")
        return SimulationResult(episodes, stats, generalized)
