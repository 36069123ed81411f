from __future__ import annotations

from loguru import logger

from pareto_pipe.models.rpareto import ParetoEpisode, lift_resample
from pareto_pipe.rng import stream


class LiftingController:
    """Lifts empirical episodes to new risk levels with fresh Pareto radii."""

    def __init__(self, n_episodes: int, seed: int, alpha: float = 1.0) -> None:
        if n_episodes < 0:
            raise ValueError(f"n_episodes must be >= 0, got {n_episodes}.")
        self.n_episodes = n_episodes
        self.seed = seed
        self.alpha = alpha

    def run(self, episodes: list[ParetoEpisode]) -> list[ParetoEpisode]:
        """Resamples ``n_episodes`` angular vectors from ``episodes``.

        Raises:
            ValueError: If ``episodes`` is empty.
        """
        if not episodes:
            msg = "No episodes to lift."
            logger.error(msg)
            raise ValueError(msg)
        lifted = lift_resample(
            episodes, self.n_episodes, stream(self.seed), self.alpha
        )
        logger.success(
            f"Lifted {len(lifted)} episodes from {len(episodes)} empirical "
            f"ones."
        )
        return lifted
