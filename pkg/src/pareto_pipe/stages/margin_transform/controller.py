from __future__ import annotations

from loguru import logger

from pareto_pipe.io.tables import DataMatrix
from pareto_pipe.models.margins import (
    MarginMode,
    StandardizedMatrix,
    fit_margins,
    standardize,
)


class MarginTransformController:
    """Fits per-site margins and maps the data to the standard-Pareto scale."""

    def __init__(
        self,
        q: float = 0.95,
        mode: MarginMode = "gpd",
        per_site_q: dict[str, float] | None = None,
        threads: int = 1,
    ) -> None:
        if not 0 < q < 1:
            raise ValueError(f"q must lie in (0, 1), got {q}.")
        self.q = q
        self.mode = mode
        self.per_site_q = dict(per_site_q or {})
        self.threads = threads

    def run(self, data: DataMatrix) -> StandardizedMatrix:
        """Fits the margins of ``data`` and standardizes it.

        Raises:
            ConfigError: If some sites have fewer than 10 excesses.
        """
        margins = fit_margins(
            data, self.q, self.mode, self.per_site_q, self.threads
        )
        standardized = standardize(data, margins)
        n_tail = sum(m.is_gpd for m in margins)
        logger.success(
            f"Standardized {data.n_rows} rows at {len(margins)} sites "
            f"({n_tail} GPD tails)."
        )
        return standardized
