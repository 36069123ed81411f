"""Weight functions of the gradient score.

Weights vanish on the part of the sample space where the fitted
intensity should not be trusted, mimicking partial censoring of small
components.
"""

from __future__ import annotations

import numpy as np
from loguru import logger
from pydantic import Field

from pareto_pipe.ops.base import ParamsBase, RiskFunctional, WeightFunction
from pareto_pipe.ops.registry import register


def _check_not_at_kink(excess: np.ndarray, what: str) -> None:
    if np.any(excess == 0):
        msg = (
            f"Weight function is not differentiable where {what} equals the "
            f"weight threshold; move the threshold off the data."
        )
        logger.error(msg)
        raise ValueError(msg)


@register("weight_function", "marginal")
class MarginalWeights(WeightFunction):
    """``w_j(z) = 1 - exp(-(z_j / u_w - 1))`` for ``z_j > u_w``, else 0.

    Components below the threshold ``u_w`` do not contribute.
    """

    class Params(ParamsBase):
        u_w: float = Field(1.0, gt=0, description="Weight threshold.")

    def evaluate(
        self, z: np.ndarray, risk: RiskFunctional  # noqa: ARG002
    ) -> tuple[np.ndarray, np.ndarray]:
        u_w = self.params.u_w
        excess = z / u_w - 1.0
        _check_not_at_kink(excess, "a component")
        above = excess > 0
        decay = np.exp(-np.where(above, excess, 0.0))
        w = np.where(above, -np.expm1(-np.where(above, excess, 0.0)), 0.0)
        dw = np.where(above, decay / u_w, 0.0)
        return w, dw


@register("weight_function", "risk")
class RiskWeights(WeightFunction):
    """``w_j(z) = z_j (1 - exp(-(r(z) / u_w - 1)))`` for ``r(z) > u_w``, else 0.

    Needs a differentiable risk functional; use an ``lp_norm`` with large
    ``p`` in place of the maximum.
    """

    class Params(ParamsBase):
        u_w: float = Field(1.0, gt=0, description="Weight threshold.")

    def evaluate(
        self, z: np.ndarray, risk: RiskFunctional
    ) -> tuple[np.ndarray, np.ndarray]:
        if not risk.DIFFERENTIABLE:
            raise ValueError(
                f"Risk weights need a differentiable risk functional, got "
                f"'{risk.type_name}'."
            )
        u_w = self.params.u_w
        excess = risk(z) / u_w - 1.0
        _check_not_at_kink(excess, "the risk")
        above = (excess > 0)[:, None]
        decay = np.exp(-np.maximum(excess, 0.0))[:, None]
        factor = 1.0 - decay
        w = np.where(above, z * factor, 0.0)
        dw = np.where(above, factor + z * decay * risk.gradient(z) / u_w, 0.0)
        return w, dw
