from __future__ import annotations

import numpy as np
from pydantic import Field, field_validator

from pareto_pipe.ops.base import ParamsBase, RiskFunctional
from pareto_pipe.ops.registry import register

################################################################################
# Linear risk functionals
################################################################################


@register("risk_functional", "site")
class SiteRisk(RiskFunctional):
    """Value of the field at a single conditioning site.

    Episodes are exceedances at one location. The simple Pareto process
    conditioned on that site is drawn directly from the site spectral
    process.
    """

    LINEAR = True
    THETA_ONE = True
    DIFFERENTIABLE = True

    class Params(ParamsBase):
        index: int = Field(0, ge=0, description="Index of the conditioning site.")

    def validate_dimension(self, n_sites: int) -> None:
        super().validate_dimension(n_sites)
        if self.params.index >= n_sites:
            raise ValueError(
                f"Site index {self.params.index} is out of range for "
                f"{n_sites} sites."
            )

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return z[..., self.params.index]

    def gradient(self, z: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(z, dtype=float)
        grad[..., self.params.index] = 1.0
        return grad

    def linear_weights(self, n_sites: int) -> np.ndarray:
        self.validate_dimension(n_sites)
        weights = np.zeros(n_sites)
        weights[self.params.index] = 1.0
        return weights

    def dominating_constant(self, n_sites: int) -> float:
        return float(n_sites)


###############################################################################
###############################################################################


@register("risk_functional", "weighted_sum")
class WeightedSumRisk(RiskFunctional):
    """Weighted sum of site values with nonnegative weights summing to one."""

    LINEAR = True
    THETA_ONE = True
    DIFFERENTIABLE = True

    class Params(ParamsBase):
        weights: list[float] = Field(
            ..., min_length=1, description="One nonnegative weight per site."
        )

        @field_validator("weights")
        @classmethod
        def _check_weights(cls, v: list[float]) -> list[float]:
            arr = np.asarray(v, dtype=float)
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise ValueError("Weights must be finite and nonnegative.")
            if abs(arr.sum() - 1.0) > 1e-12:
                raise ValueError(
                    f"Weights must sum to 1 (got {arr.sum():.15g})."
                )
            return v

    def validate_dimension(self, n_sites: int) -> None:
        super().validate_dimension(n_sites)
        if len(self.params.weights) != n_sites:
            raise ValueError(
                f"Got {len(self.params.weights)} weights for {n_sites} sites."
            )

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return z @ np.asarray(self.params.weights)

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.params.weights), z.shape).copy()

    def linear_weights(self, n_sites: int) -> np.ndarray:
        self.validate_dimension(n_sites)
        return np.asarray(self.params.weights, dtype=float)

    def dominating_constant(self, n_sites: int) -> float:
        return float(n_sites * max(self.params.weights))


###############################################################################
###############################################################################


@register("risk_functional", "mean")
class MeanRisk(RiskFunctional):
    """Spatial average of the field.

    This is the base functional of the rejection sampler: every other
    functional is dominated by a multiple of it.
    """

    LINEAR = True
    THETA_ONE = True
    DIFFERENTIABLE = True

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return z.mean(axis=-1)

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return np.full(z.shape, 1.0 / z.shape[-1])

    def linear_weights(self, n_sites: int) -> np.ndarray:
        self.validate_dimension(n_sites)
        return np.full(n_sites, 1.0 / n_sites)

    def dominating_constant(self, n_sites: int) -> float:
        return 1.0


################################################################################
# Nonlinear risk functionals
################################################################################


@register("risk_functional", "max")
class MaxRisk(RiskFunctional):
    """Largest site value."""

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return z.max(axis=-1)

    def dominating_constant(self, n_sites: int) -> float:
        return float(n_sites)


@register("risk_functional", "min")
class MinRisk(RiskFunctional):
    """Smallest site value."""

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return z.min(axis=-1)

    def dominating_constant(self, n_sites: int) -> float:
        return 1.0


###############################################################################
###############################################################################


@register("risk_functional", "order_stat")
class OrderStatRisk(RiskFunctional):
    """The k-th largest site value (k=1 is the maximum, k=D the minimum)."""

    class Params(ParamsBase):
        k: int = Field(1, ge=1, description="Rank from the top, 1-based.")

    def validate_dimension(self, n_sites: int) -> None:
        super().validate_dimension(n_sites)
        if self.params.k > n_sites:
            raise ValueError(
                f"Order statistic k={self.params.k} exceeds {n_sites} sites."
            )

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        n_sites = z.shape[-1]
        pos = n_sites - self.params.k
        return np.partition(z, pos, axis=-1)[..., pos]

    def dominating_constant(self, n_sites: int) -> float:
        return float(n_sites)


###############################################################################
###############################################################################


@register("risk_functional", "lp_norm")
class LpNormRisk(RiskFunctional):
    """Unnormalized l_p norm ``(sum_j z_j ** p) ** (1 / p)``.

    With a large ``p`` it is a smooth stand-in for the maximum and is then
    used for gradient-score estimation of max-risk episodes.
    """

    DIFFERENTIABLE = True

    class Params(ParamsBase):
        p: float = Field(2.0, gt=0, description="Norm exponent.")

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        p = self.params.p
        scale = z.max(axis=-1, keepdims=True)
        scale = np.where(scale > 0, scale, 1.0)
        norm = np.sum((z / scale) ** p, axis=-1) ** (1.0 / p)
        return norm * scale[..., 0]

    def gradient(self, z: np.ndarray) -> np.ndarray:
        p = self.params.p
        norm = self.evaluate(z)[..., None]
        return (z / norm) ** (p - 1.0)

    def dominating_constant(self, n_sites: int) -> float:
        p = self.params.p
        if p >= 1:
            return float(n_sites)
        return float(n_sites ** (1.0 / p))


###############################################################################
###############################################################################


@register("risk_functional", "geometric_mean")
class GeometricMeanRisk(RiskFunctional):
    """Geometric average of the site values (zero if any site is zero)."""

    DIFFERENTIABLE = True

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.exp(np.log(z).mean(axis=-1))

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return self.evaluate(z)[..., None] / (z.shape[-1] * z)

    def dominating_constant(self, n_sites: int) -> float:
        return 1.0
