"""Brown-Resnick intensity, r-Pareto likelihood and gradient-score fitting.

For a conditioning (anchor) site ``a`` and ``Q`` the inverse of the
anchored covariance, the log intensity of the exponent measure is

    log l(z) = -1/2 log|Sigma| - (D-1)/2 log(2 pi) - 2 log z_a
               - sum_{j != a} log z_j - 1/2 zh' Q zh,

with ``zh_j = log(z_j / z_a) + gamma(s_j, s_a)``. The value does not depend
on the choice of ``a``.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.linalg import solve_triangular
from scipy.optimize import minimize
from scipy.special import expit, logit

from pareto_pipe.errors import NumericalError, UnsupportedRiskForMLEError
from pareto_pipe.io.geometry import SiteSet
from pareto_pipe.models.rpareto import (
    AnchoredFactor,
    BrownResnickField,
    ParetoEpisode,
)
from pareto_pipe.models.variogram import Family, VariogramModel
from pareto_pipe.ops.base import RiskFunctional, WeightFunction
from pareto_pipe.ops.risk_functionals import LpNormRisk, MaxRisk, SiteRisk
from pareto_pipe.ops.weight_functions import MarginalWeights

Objective = Literal["loglik", "gradscore"]

#: Exponent of the l_p norm standing in for the maximum.
MAX_PROXY_P = 10.0

#: Default iteration cap of the simplex search.
DEFAULT_MAX_ITERS = 2000


class FitResult(BaseModel):
    """Outcome of a variogram fit.

    Attributes:
        family: Variogram family that was fitted.
        beta: Estimated scale.
        alpha: Estimated shape (power) or sill (bounded exponential).
        objective: ``loglik`` or ``gradscore``.
        objective_value: Minimised value (negative log-likelihood for
            ``loglik``).
        n_iter: Simplex iterations used.
        max_iters: Iteration cap.
        converged: Whether the simplex met its tolerances within the cap.
        n_exceedances: Number of episodes fitted.
        u: Risk threshold the episodes were extracted at.
        risk: Name of the risk functional.
        trace: Best objective value after each iteration.
    """

    model_config = ConfigDict(frozen=True)

    family: Family
    beta: float = Field(gt=0)
    alpha: float = Field(gt=0)
    objective: Objective
    objective_value: float
    n_iter: int = Field(ge=0)
    max_iters: int = Field(ge=1)
    converged: bool
    n_exceedances: int = Field(ge=1)
    u: float
    risk: str
    trace: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_consistency(self) -> FitResult:
        if self.family == "power" and not self.alpha < 2:
            raise ValueError(f"Power shape must lie in (0, 2), got {self.alpha}.")
        if self.converged and self.n_iter >= self.max_iters:
            raise ValueError("A fit that used up its iteration cap cannot be converged.")
        return self

    def variogram(self) -> VariogramModel:
        """The fitted variogram model."""
        return VariogramModel(family=self.family, beta=self.beta, alpha=self.alpha)


################################################################################
# Intensity
################################################################################


def _prepare(
    z: np.ndarray, brf: BrownResnickField, anchor: int
) -> tuple[np.ndarray, AnchoredFactor, np.ndarray, np.ndarray]:
    """Validates ``z`` and returns ``(z2d, factor, others, zhat)``."""
    z2d = np.atleast_2d(np.asarray(z, dtype=float))
    n_sites = brf.n_sites
    if n_sites < 2:
        raise ValueError("The intensity needs at least two sites.")
    if z2d.shape[1] != n_sites:
        raise ValueError(f"Expected {n_sites} components, got {z2d.shape[1]}.")
    if not np.all(z2d > 0) or not np.all(np.isfinite(z2d)):
        raise ValueError("Intensity arguments must be finite and > 0.")

    entry = brf.anchored(anchor)
    if not np.isfinite(entry.logdet):
        raise NumericalError(
            f"Anchored covariance at site {anchor} is degenerate "
            f"(a site is collocated with the anchor)."
        )
    others = np.array(entry.sigma.others)
    log_z = np.log(z2d)
    zhat = log_z[:, others] - log_z[:, [anchor]] + brf.gamma[others, anchor]
    return z2d, entry, others, zhat


def br_log_intensity(
    z: np.ndarray, brf: BrownResnickField, anchor: int = 0
) -> float | np.ndarray:
    """Log intensity of the Brown-Resnick exponent measure.

    Args:
        z: Point(s), shape ``(D,)`` or ``(n, D)``, all components > 0.
        brf: Spectral model.
        anchor: Conditioning site used for the computation.

    Returns:
        ``log l(z)``, scalar for a single point.

    Raises:
        ValueError: If a component is not strictly positive.
    """
    z2d, entry, others, zhat = _prepare(z, brf, anchor)
    n_free = others.size
    v = solve_triangular(entry.chol.lower, zhat.T, lower=True)
    quad = np.sum(v**2, axis=0)
    log_z = np.log(z2d)
    out = (
        -0.5 * entry.logdet
        - 0.5 * n_free * np.log(2.0 * np.pi)
        - 2.0 * log_z[:, anchor]
        - log_z[:, others].sum(axis=1)
        - 0.5 * quad
    )
    return float(out[0]) if np.ndim(z) == 1 else out


def br_log_intensity_derivatives(
    z: np.ndarray, brf: BrownResnickField, anchor: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """First and pure second partial derivatives of the log intensity.

    Returns:
        ``(grad, hess_diag)``, each of shape ``(n, D)``.
    """
    z2d, entry, others, zhat = _prepare(z, brf, anchor)
    q = entry.precision
    qz = zhat @ q
    sum_qz = qz.sum(axis=1)
    z_o = z2d[:, others]
    z_a = z2d[:, anchor]

    grad = np.empty_like(z2d)
    hess = np.empty_like(z2d)
    grad[:, others] = -(1.0 + qz) / z_o
    hess[:, others] = (1.0 + qz - np.diag(q)) / z_o**2
    grad[:, anchor] = (sum_qz - 2.0) / z_a
    hess[:, anchor] = (2.0 - sum_qz - q.sum()) / z_a**2
    return grad, hess


################################################################################
# Objectives
################################################################################


def _stack(episodes: list[ParetoEpisode]) -> np.ndarray:
    if not episodes:
        raise ValueError("No episodes given.")
    return np.stack([e.Z for e in episodes])


def _require_unit_normaliser(risk: RiskFunctional) -> None:
    if not risk.THETA_ONE:
        msg = (
            f"The likelihood is only available for risks with unit "
            f"normaliser (site, mean, weighted_sum), got '{risk.type_name}'. "
            f"Use the gradient score instead."
        )
        logger.error(msg)
        raise UnsupportedRiskForMLEError(msg)


def rpareto_loglik(
    episodes: list[ParetoEpisode] | np.ndarray,
    brf: BrownResnickField,
    risk: RiskFunctional,
) -> float:
    """Log-likelihood of episodes whose exceedance set has unit measure.

    Raises:
        UnsupportedRiskForMLEError: If the normaliser of ``risk`` depends on
            the parameters.
    """
    _require_unit_normaliser(risk)
    z = episodes if isinstance(episodes, np.ndarray) else _stack(episodes)
    return float(np.sum(br_log_intensity(np.atleast_2d(z), brf)))


def smooth_risk(risk: RiskFunctional, p: float = MAX_PROXY_P) -> RiskFunctional:
    """A differentiable stand-in: the l_p norm for the maximum.

    Raises:
        ValueError: If ``risk`` is neither differentiable nor the maximum.
    """
    if risk.DIFFERENTIABLE:
        return risk
    if isinstance(risk, MaxRisk):
        logger.info(f"Using the l_{p:g} norm in place of the maximum risk.")
        return LpNormRisk(p=p)
    raise ValueError(
        f"Gradient score needs a differentiable risk; '{risk.type_name}' is not."
    )


def gradient_score(
    episodes: list[ParetoEpisode] | np.ndarray,
    brf: BrownResnickField,
    risk: RiskFunctional,
    weights: WeightFunction | None = None,
) -> float:
    """Weighted gradient score of the episodes.

    Sums ``2 w_j dw_j g_j + w_j**2 h_jj + w_j**2 g_j**2 / 2`` over sites and
    episodes, with ``g`` and ``h`` the first and pure second partials of the
    log intensity. The normaliser of the risk region cancels.

    Args:
        episodes: Episodes or an ``(n, D)`` array of fields.
        brf: Spectral model.
        risk: Risk functional of the episodes.
        weights: Weight function; marginal weights at ``u_w = 1`` by default.
    """
    z = episodes if isinstance(episodes, np.ndarray) else _stack(episodes)
    z = np.atleast_2d(z)
    weights = weights or MarginalWeights(u_w=1.0)
    w, dw = weights.evaluate(z, smooth_risk(risk))
    if not np.any(w):
        return 0.0
    grad, hess = br_log_intensity_derivatives(z, brf)
    terms = 2.0 * w * dw * grad + w**2 * hess + 0.5 * w**2 * grad**2
    return float(terms.sum())


################################################################################
# Fitting
################################################################################


def _to_free(family: Family, beta: float, alpha: float) -> np.ndarray:
    if family == "power":
        return np.array([np.log(beta), logit(alpha / 2.0)])
    return np.array([np.log(beta), np.log(alpha)])


def _from_free(family: Family, theta: np.ndarray) -> tuple[float, float]:
    beta = float(np.exp(theta[0]))
    if family == "power":
        return beta, float(2.0 * expit(theta[1]))
    return beta, float(np.exp(theta[1]))


def fit(
    episodes: list[ParetoEpisode],
    sites: SiteSet,
    init: tuple[float, float],
    objective: Objective = "gradscore",
    risk: RiskFunctional | None = None,
    weights: WeightFunction | None = None,
    family: Family = "power",
    max_iters: int = DEFAULT_MAX_ITERS,
    u: float = 1.0,
) -> FitResult:
    """Fits the variogram by Nelder-Mead on ``(log beta, logit(alpha / 2))``.

    For the bounded exponential family the second coordinate is
    ``log alpha``. Away from the starting point, parameters where the
    objective cannot be evaluated get ``inf``.

    Args:
        episodes: Episodes to fit, nonempty.
        sites: Site set of the episodes.
        init: Starting ``(beta, alpha)``.
        objective: ``loglik`` (minimises the negative log-likelihood) or
            ``gradscore``.
        risk: Risk functional the episodes were extracted with.
        weights: Gradient-score weights.
        family: Variogram family.
        max_iters: Iteration cap; reaching it yields ``converged=False``.
        u: Risk threshold, recorded in the result.

    Returns:
        The fit result.

    Raises:
        ValueError: If ``init`` is outside the parameter domain.
        UnsupportedRiskForMLEError: For ``loglik`` with a risk lacking a
            unit normaliser.
        NumericalError: If the objective is not finite at ``init`` or
            nowhere finite along the search.
    """
    if risk is None:
        risk = SiteRisk(index=0)
    try:
        VariogramModel(family=family, beta=init[0], alpha=init[1])
    except ValueError as exc:
        raise ValueError(f"Initial values {init} are not valid: {exc}") from exc

    z = _stack(episodes)
    if objective == "loglik":
        _require_unit_normaliser(risk)
    score_risk = smooth_risk(risk) if objective == "gradscore" else risk

    def _evaluate(theta: np.ndarray) -> float:
        beta, alpha = _from_free(family, theta)
        model = VariogramModel(family=family, beta=beta, alpha=alpha)
        brf = BrownResnickField(model, sites)
        if objective == "loglik":
            return -rpareto_loglik(z, brf, risk)
        return gradient_score(z, brf, score_risk, weights)

    def _objective(theta: np.ndarray) -> float:
        try:
            value = _evaluate(theta)
        except (ValueError, NumericalError):
            return np.inf
        return value if np.isfinite(value) else np.inf

    trace: list[float] = []

    def _record(intermediate_result) -> None:  # type: ignore[no-untyped-def]
        trace.append(float(intermediate_result.fun))

    x0 = _to_free(family, *init)
    # errors at the starting point are real input problems, not bad steps
    start_value = _evaluate(x0)
    if not np.isfinite(start_value):
        msg = (
            f"The {objective} objective is not finite at the starting "
            f"values beta={init[0]:g}, alpha={init[1]:g}."
        )
        logger.error(msg)
        raise NumericalError(msg)
    logger.info(
        f"Fitting {family} variogram by {objective} on {len(episodes)} "
        f"episodes from beta={init[0]:g}, alpha={init[1]:g}."
    )
    res = minimize(
        _objective,
        x0,
        method="Nelder-Mead",
        callback=_record,
        options={"maxiter": max_iters, "xatol": 1e-6, "fatol": 1e-8},
    )
    if not np.isfinite(res.fun):
        msg = f"The {objective} objective has no finite minimum."
        logger.error(msg)
        raise NumericalError(msg)
    beta, alpha = _from_free(family, res.x)
    n_iter = int(res.nit)
    converged = bool(res.success) and n_iter < max_iters
    if not converged:
        logger.warning(f"Fit did not converge: {res.message}")

    result = FitResult(
        family=family,
        beta=beta,
        alpha=alpha,
        objective=objective,
        objective_value=float(res.fun),
        n_iter=n_iter,
        max_iters=max_iters,
        converged=converged,
        n_exceedances=len(episodes),
        u=u,
        risk=risk.type_name,
        trace=trace,
    )
    logger.success(
        f"Fit finished: beta={beta:.5g}, alpha={alpha:.5g}, "
        f"{objective}={res.fun:.6g}, iterations={n_iter}."
    )
    return result
