"""Semivariogram models of Brown-Resnick dependence.

``gamma`` is a semivariogram: ``Var(G(s1) - G(s2)) = 2 * gamma(|s1 - s2|)``
for the underlying Gaussian process ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import norm

from pareto_pipe.io.geometry import SiteSet, pairwise_distances

Family = Literal["power", "bounded_exponential"]


class VariogramModel(BaseModel):
    """Parametric semivariogram.

    Attributes:
        family: ``power`` gives ``(h / beta) ** alpha``;
            ``bounded_exponential`` gives ``alpha * (1 - exp(-h / beta))``.
        beta: Scale (power) or range (bounded exponential), in length units.
        alpha: Shape in (0, 2) for power, sill for bounded exponential.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Family = "power"
    beta: float = Field(gt=0)
    alpha: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_power_shape(self) -> VariogramModel:
        if self.family == "power" and not self.alpha < 2:
            raise ValueError(
                f"Power variogram shape must lie in (0, 2), got {self.alpha}."
            )
        return self


@dataclass(frozen=True)
class AnchoredSigma:
    """Covariance of the increments ``G(s_i) - G(s_anchor)``, ``i != anchor``.

    Attributes:
        anchor: Index of the anchor site.
        others: Indices of the remaining sites, in increasing order.
        matrix: ``(D - 1, D - 1)`` symmetric matrix.
    """

    anchor: int
    others: tuple[int, ...]
    matrix: np.ndarray


def semivariogram(
    model: VariogramModel, h: float | np.ndarray
) -> float | np.ndarray:
    """Evaluates the semivariogram at distance(s) ``h``.

    Args:
        model: The variogram model.
        h: Distance or array of distances, all nonnegative.

    Returns:
        Semivariogram value(s), exactly 0 at ``h = 0``.

    Raises:
        ValueError: If any distance is negative.
    """
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0):
        raise ValueError("Distances passed to a semivariogram must be >= 0.")

    if model.family == "power":
        out = (h_arr / model.beta) ** model.alpha
    else:
        out = -model.alpha * np.expm1(-h_arr / model.beta)

    if np.ndim(h) == 0:
        return float(out)
    return out


def gamma_matrix(model: VariogramModel, sites: SiteSet) -> np.ndarray:
    """Semivariogram of every site pair."""
    return semivariogram(model, pairwise_distances(sites))


def anchored_sigma_from_gamma(gamma: np.ndarray, anchor: int) -> AnchoredSigma:
    """Builds the anchored covariance from a semivariogram matrix.

    Entry ``(i, j)`` is ``gamma[i, a] + gamma[j, a] - gamma[i, j]`` over the
    non-anchor sites ``i, j``.

    Raises:
        ValueError: If fewer than two sites are given or ``anchor`` is out
            of range.
    """
    n_sites = gamma.shape[0]
    if n_sites < 2:
        raise ValueError("The anchored covariance needs at least two sites.")
    if not 0 <= anchor < n_sites:
        raise ValueError(
            f"Anchor index {anchor} is out of range for {n_sites} sites."
        )

    others = tuple(i for i in range(n_sites) if i != anchor)
    idx = np.array(others)
    g_a = gamma[idx, anchor]
    matrix = g_a[:, None] + g_a[None, :] - gamma[np.ix_(idx, idx)]
    return AnchoredSigma(anchor=anchor, others=others, matrix=matrix)


def anchored_sigma(
    model: VariogramModel, sites: SiteSet, anchor: int
) -> AnchoredSigma:
    """Covariance of Gaussian increments relative to site ``anchor``."""
    return anchored_sigma_from_gamma(gamma_matrix(model, sites), anchor)


def extremal_coefficient_pair(
    model: VariogramModel, h: float | np.ndarray
) -> float | np.ndarray:
    """Bivariate extremal coefficient ``2 * Phi(sqrt(gamma(h) / 2))``."""
    out = 2.0 * norm.cdf(np.sqrt(np.asarray(semivariogram(model, h)) / 2.0))
    return float(out) if np.ndim(h) == 0 else out


def theoretical_chi(
    model: VariogramModel, h: float | np.ndarray
) -> float | np.ndarray:
    """Tail dependence coefficient ``2 * (1 - Phi(sqrt(gamma(h) / 2)))``."""
    out = 2.0 * norm.sf(np.sqrt(np.asarray(semivariogram(model, h)) / 2.0))
    return float(out) if np.ndim(h) == 0 else out
