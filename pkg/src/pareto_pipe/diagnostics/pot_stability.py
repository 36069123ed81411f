"""Checks that extracted episodes behave like an r-Pareto sample.

The radius should be standard Pareto and independent of the angular
vector, also when recomputed above higher thresholds.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict
from scipy.stats import kstest, pareto, permutation_test, spearmanr

from pareto_pipe.models.rpareto import ParetoEpisode
from pareto_pipe.ops.base import RiskFunctional
from pareto_pipe.rng import stream

#: Fewest episodes a check is run on.
MIN_EPISODES = 30


class ThresholdCheck(BaseModel):
    """Diagnostics of the episodes with risk above ``u``, rescaled by ``u``.

    Attributes:
        u: Threshold on the episode risk scale (1 is the full sample).
        n_episodes: Episodes above ``u``.
        ks_statistic: Kolmogorov-Smirnov distance of ``R / u`` to the
            standard Pareto law.
        ks_pvalue: Its p-value.
        max_abs_spearman: Largest absolute rank correlation between ``R``
            and an angular coordinate.
        min_spearman_pvalue: Smallest per-coordinate p-value of those rank
            correlations.
    """

    model_config = ConfigDict(frozen=True)

    u: float
    n_episodes: int
    ks_statistic: float
    ks_pvalue: float
    max_abs_spearman: float
    min_spearman_pvalue: float


class PotStabilityReport(BaseModel):
    """Radius law and radius/angle independence checks."""

    model_config = ConfigDict(frozen=True)

    risk: str
    checks: list[ThresholdCheck]
    spearman: list[float]
    spearman_pvalues: list[float]

    def to_frame(self) -> pd.DataFrame:
        """One row per threshold."""
        return pd.DataFrame([c.model_dump() for c in self.checks])


def radius_ks(radii: np.ndarray) -> tuple[float, float]:
    """KS statistic and p-value of ``radii`` against the unit Pareto law."""
    res = kstest(radii, pareto(b=1.0).cdf)
    return float(res.statistic), float(res.pvalue)


def radius_angle_correlation(
    radii: np.ndarray,
    angles: np.ndarray,
    n_permutations: int = 999,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Spearman correlation of the radius with each angular coordinate.

    Args:
        radii: Episode radii, shape ``(n,)``.
        angles: Angular vectors, shape ``(n, D)``.
        n_permutations: Resamples of the permutation test; 0 uses the
            asymptotic p-value.
        rng: Generator of the permutation test.

    Returns:
        Correlations and p-values per coordinate. Constant coordinates get
        correlation 0 and p-value 1.
    """
    n_coords = angles.shape[1]
    rho = np.zeros(n_coords)
    pvalues = np.ones(n_coords)
    rng = rng if rng is not None else np.random.default_rng(0)

    def _statistic(x: np.ndarray, y: np.ndarray) -> float:
        return spearmanr(x, y).statistic

    for j in range(n_coords):
        y = angles[:, j]
        if np.ptp(y) == 0:
            continue
        res = spearmanr(radii, y)
        rho[j] = float(res.statistic)
        if n_permutations > 0:
            perm = permutation_test(
                (radii, y),
                _statistic,
                permutation_type="pairings",
                n_resamples=n_permutations,
                random_state=rng,
            )
            pvalues[j] = float(perm.pvalue)
        else:
            pvalues[j] = float(res.pvalue)
    return rho, pvalues


def pot_stability_report(
    episodes: list[ParetoEpisode],
    risk: RiskFunctional,
    u_grid: list[float] | None = None,
    n_permutations: int = 999,
    seed: int = 0,
) -> PotStabilityReport:
    """Runs the radius and independence checks at each threshold.

    Args:
        episodes: At least 30 episodes.
        risk: Risk functional of the episodes; radii are recomputed with it.
        u_grid: Thresholds on the radius scale; 1 always included.
        n_permutations: Permutation resamples per coordinate.
        seed: Seed of the permutation tests.

    Returns:
        The report. Thresholds with fewer than 30 episodes are skipped.

    Raises:
        ValueError: If fewer than 30 episodes are given.
    """
    if len(episodes) < MIN_EPISODES:
        msg = (
            f"POT-stability checks need at least {MIN_EPISODES} episodes, "
            f"got {len(episodes)}."
        )
        logger.error(msg)
        raise ValueError(msg)

    z = np.stack([e.Z for e in episodes])
    radii = np.asarray(risk(z), dtype=float)
    angles = z / radii[:, None]
    rng = stream(seed)

    grid = sorted({1.0, *(float(u) for u in (u_grid or []))})
    checks = []
    rho_full = p_full = np.array([])
    for u in grid:
        keep = radii > u if u > 1.0 else np.ones(radii.size, dtype=bool)
        n_keep = int(keep.sum())
        if n_keep < MIN_EPISODES:
            logger.warning(
                f"Only {n_keep} episodes above u={u:g}; check skipped."
            )
            continue
        ks_stat, ks_p = radius_ks(radii[keep] / u)
        rho, pvals = radius_angle_correlation(
            radii[keep], angles[keep], n_permutations, rng
        )
        if u == 1.0:
            rho_full, p_full = rho, pvals
        checks.append(
            ThresholdCheck(
                u=u,
                n_episodes=n_keep,
                ks_statistic=ks_stat,
                ks_pvalue=ks_p,
                max_abs_spearman=float(np.abs(rho).max()),
                min_spearman_pvalue=float(pvals.min()),
            )
        )
        logger.info(
            f"u={u:g}: n={n_keep}, KS={ks_stat:.4f} (p={ks_p:.3g}), "
            f"max|rho|={np.abs(rho).max():.3f}"
        )

    return PotStabilityReport(
        risk=risk.type_name,
        checks=checks,
        spearman=rho_full.tolist(),
        spearman_pvalues=p_full.tolist(),
    )
