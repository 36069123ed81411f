"""Semiparametric marginal models and the standard-Pareto transform.

The body of each site's distribution is the empirical CDF with plotting
positions ``rank / (n + 1)``, linearly interpolated between order
statistics. Above the threshold ``u`` (the interpolated ``q`` quantile, so
that ``F(u) = q``) the tail is a generalized Pareto distribution anchored at
probability ``q``; in ``empirical`` mode the interpolated ECDF is used
throughout.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from loguru import logger
from scipy.optimize import minimize

from pareto_pipe.errors import ConfigError, GpdFitError
from pareto_pipe.io.tables import DataMatrix

MarginMode = Literal["gpd", "empirical"]

#: Fewest excesses accepted by the GPD fit.
MIN_EXCESSES = 10

#: Open interval of admissible GPD shapes.
XI_BOUNDS = (-0.99, 5.0)

#: Shapes closer to zero than this use the exponential limit.
XI_ZERO_TOL = 1e-8


@dataclass(frozen=True)
class MarginalModel:
    """Fitted marginal distribution of one site.

    Attributes:
        site_id: Site identifier.
        q: Threshold probability, ``F(u) = q``.
        u: Threshold in data units.
        sigma: GPD scale, ``None`` for an empirical tail.
        xi: GPD shape, ``None`` for an empirical tail.
        sample: Sorted observed values of the site.
    """

    site_id: str
    q: float
    u: float
    sigma: float | None
    xi: float | None
    sample: np.ndarray

    def __post_init__(self) -> None:
        if not 0 < self.q < 1:
            raise ValueError(f"q must lie in (0, 1), got {self.q}.")
        if (self.sigma is None) != (self.xi is None):
            raise ValueError("sigma and xi must be given together.")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"GPD scale must be > 0, got {self.sigma}.")
        sample = np.sort(np.asarray(self.sample, dtype=float))
        sample.setflags(write=False)
        object.__setattr__(self, "sample", sample)

    @property
    def is_gpd(self) -> bool:
        return self.sigma is not None

    @property
    def n(self) -> int:
        return self.sample.size

    def plotting_positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct sample values and their ECDF levels ``rank / (n + 1)``.

        Tied values share the level of their highest rank.
        """
        values, counts = np.unique(self.sample, return_counts=True)
        return values, np.cumsum(counts) / (self.n + 1.0)


@dataclass(frozen=True)
class StandardizedMatrix:
    """Data on the standard-Pareto scale.

    Attributes:
        values: ``(n, D)`` matrix, entries >= 1, ``NaN`` where missing.
        margins: Marginal models in column order.
        time: Optional row labels.
    """

    values: np.ndarray
    margins: tuple[MarginalModel, ...]
    time: tuple[str, ...] | None = None

    @property
    def site_ids(self) -> tuple[str, ...]:
        return tuple(m.site_id for m in self.margins)


################################################################################
# GPD fit
################################################################################


def gpd_negloglik(params: np.ndarray, excesses: np.ndarray) -> float:
    """Mean negative GPD log-likelihood at ``(log sigma, xi)``.

    Returns ``inf`` outside the admissible region.
    """
    log_sigma, xi = float(params[0]), float(params[1])
    if not XI_BOUNDS[0] < xi < XI_BOUNDS[1]:
        return np.inf
    sigma = np.exp(log_sigma)
    scaled = excesses / sigma
    if abs(xi) < XI_ZERO_TOL:
        return log_sigma + float(scaled.mean())
    t = xi * scaled
    if np.any(t <= -1.0):
        return np.inf
    return log_sigma + (1.0 + 1.0 / xi) * float(np.log1p(t).mean())


def _starting_points(excesses: np.ndarray) -> list[np.ndarray]:
    mean = float(excesses.mean())
    var = float(excesses.var())
    xi_mom = 0.5 * (1.0 - mean**2 / var) if var > 0 else 0.0
    xi_mom = float(np.clip(xi_mom, -0.5, 0.9))
    sigma_mom = max(mean * (1.0 - xi_mom), 1e-3 * mean)
    return [
        np.array([np.log(sigma_mom), xi_mom]),
        np.array([np.log(mean), 0.0]),
        np.array([np.log(mean), 0.25]),
    ]


def fit_gpd_mle(excesses: np.ndarray) -> tuple[float, float]:
    """Maximum-likelihood GPD fit with a restarted Nelder-Mead simplex.

    Args:
        excesses: Positive threshold excesses.

    Returns:
        ``(sigma, xi)`` with ``xi`` in (-0.99, 5).

    Raises:
        ValueError: If fewer than 10 excesses are given or any is <= 0.
        GpdFitError: If the sample is degenerate or no restart converges.
    """
    x = np.asarray(excesses, dtype=float)
    if x.size < MIN_EXCESSES:
        raise ValueError(
            f"GPD fit needs at least {MIN_EXCESSES} excesses, got {x.size}."
        )
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise ValueError("GPD excesses must be finite and > 0.")
    if np.ptp(x) == 0:
        msg = (
            f"All {x.size} excesses are equal ({x[0]:.6g}); the shape "
            f"estimate would sit on the lower boundary."
        )
        logger.error(msg)
        raise GpdFitError(msg)

    options = {"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000}
    best = None
    failures = []
    for start in _starting_points(x):
        res = minimize(
            gpd_negloglik, start, args=(x,), method="Nelder-Mead", options=options
        )
        if not res.success or not np.isfinite(res.fun):
            failures.append(f"start={start.round(4).tolist()}: {res.message}")
            continue
        # restart from the optimum to shake off a collapsed simplex
        res = minimize(
            gpd_negloglik, res.x, args=(x,), method="Nelder-Mead", options=options
        )
        if best is None or res.fun < best.fun:
            best = res

    if best is None:
        msg = "GPD fit did not converge from any start: " + "; ".join(failures)
        logger.error(msg)
        raise GpdFitError(msg)

    sigma, xi = float(np.exp(best.x[0])), float(best.x[1])
    logger.debug(
        f"GPD fit on {x.size} excesses: sigma={sigma:.5g}, xi={xi:.5g}"
    )
    return sigma, xi


################################################################################
# Distribution functions
################################################################################


def _gpd_tail_survival(model: MarginalModel, x: np.ndarray) -> np.ndarray:
    """``(1 - q) (1 + xi (x - u) / sigma)_+ ** (-1 / xi)`` for ``x >= u``."""
    assert model.sigma is not None and model.xi is not None
    y = (x - model.u) / model.sigma
    if abs(model.xi) < XI_ZERO_TOL:
        return (1.0 - model.q) * np.exp(-y)
    t = 1.0 + model.xi * y
    with np.errstate(divide="ignore", invalid="ignore"):
        surv = np.where(
            t > 0, np.exp(-np.log(np.where(t > 0, t, 1.0)) / model.xi), 0.0
        )
    return (1.0 - model.q) * surv


def semiparametric_survival(
    model: MarginalModel, x: float | np.ndarray
) -> float | np.ndarray:
    """``1 - F(x)``, computed without cancellation in the tail."""
    x_arr = np.asarray(x, dtype=float)
    values, levels = model.plotting_positions()
    body = 1.0 - np.interp(x_arr, values, levels)
    if model.is_gpd:
        surv = np.where(
            x_arr >= model.u, _gpd_tail_survival(model, x_arr), body
        )
    else:
        surv = body
    return float(surv) if np.ndim(x) == 0 else surv


def semiparametric_cdf(
    model: MarginalModel, x: float | np.ndarray
) -> float | np.ndarray:
    """Semiparametric CDF: empirical body, GPD tail above ``u``."""
    surv = semiparametric_survival(model, x)
    return 1.0 - surv


def to_standard_pareto(
    model: MarginalModel, x: float | np.ndarray
) -> float | np.ndarray:
    """Probability integral transform to the unit Pareto scale, ``1 / (1 - F(x))``.

    Missing values (``NaN``) stay missing.
    """
    x_arr = np.asarray(x, dtype=float)
    surv = np.asarray(semiparametric_survival(model, x_arr))
    with np.errstate(divide="ignore"):
        z = np.where(np.isnan(x_arr), np.nan, 1.0 / surv)
    if np.any(np.isinf(z)):
        logger.warning(
            f"Site {model.site_id}: values beyond the fitted upper endpoint "
            f"map to infinity."
        )
    return float(z) if np.ndim(x) == 0 else z


def from_standard_pareto(
    model: MarginalModel, z: float | np.ndarray
) -> float | np.ndarray:
    """Inverse of :func:`to_standard_pareto`.

    Raises:
        ValueError: If any ``z < 1``.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 1):
        raise ValueError("Standard-Pareto values must be >= 1.")

    surv = 1.0 / z_arr
    values, levels = model.plotting_positions()
    body = np.interp(1.0 - surv, levels, values)
    if model.is_gpd:
        assert model.sigma is not None and model.xi is not None
        ratio = surv / (1.0 - model.q)
        if abs(model.xi) < XI_ZERO_TOL:
            tail = model.u - model.sigma * np.log(ratio)
        else:
            tail = model.u + model.sigma * np.expm1(
                -model.xi * np.log(ratio)
            ) / model.xi
        x = np.where(ratio <= 1.0, tail, body)
    else:
        x = body
    return float(x) if np.ndim(z) == 0 else x


################################################################################
# Fitting all sites
################################################################################


def empirical_threshold(sample: np.ndarray, q: float) -> float:
    """The ``q`` quantile of the interpolated plotting-position ECDF.

    Raises:
        ValueError: If ``q`` lies outside the plotting-position range.
    """
    values, counts = np.unique(sample, return_counts=True)
    levels = np.cumsum(counts) / (sample.size + 1.0)
    if not levels[0] <= q <= levels[-1]:
        raise ValueError(
            f"q={q} is outside the plotting-position range "
            f"[{levels[0]:.4g}, {levels[-1]:.4g}] of {sample.size} values."
        )
    return float(np.interp(q, levels, values))


def fit_marginal_model(
    site_id: str,
    values: np.ndarray,
    q: float = 0.95,
    mode: MarginMode = "gpd",
) -> MarginalModel:
    """Fits the marginal model of one site.

    Args:
        site_id: Site identifier.
        values: Observations, ``NaN`` ignored.
        q: Threshold probability.
        mode: ``gpd`` for a GPD tail, ``empirical`` for an ECDF tail.

    Returns:
        The fitted model.
    """
    sample = np.sort(values[np.isfinite(values)])
    u = empirical_threshold(sample, q)
    if mode == "empirical":
        return MarginalModel(site_id, q, u, None, None, sample)

    excesses = sample[sample > u] - u
    if excesses.size < MIN_EXCESSES:
        raise ValueError(
            f"Site {site_id}: {excesses.size} excesses above u={u:.6g} "
            f"(need {MIN_EXCESSES})."
        )
    sigma, xi = fit_gpd_mle(excesses)
    return MarginalModel(site_id, q, u, sigma, xi, sample)


def fit_margins(
    data: DataMatrix,
    q: float = 0.95,
    mode: MarginMode = "gpd",
    per_site_q: dict[str, float] | None = None,
    threads: int = 1,
) -> list[MarginalModel]:
    """Fits a marginal model to every column of ``data``.

    Args:
        data: Observation matrix.
        q: Default threshold probability.
        mode: Tail mode for all sites.
        per_site_q: Threshold probabilities overriding ``q`` per site id.
        threads: Worker threads.

    Returns:
        Models in column order.

    Raises:
        ConfigError: Listing every site with too few excesses.
    """
    per_site_q = per_site_q or {}
    unknown = sorted(set(per_site_q) - set(data.site_ids))
    if unknown:
        raise ConfigError(f"per_site_q names unknown sites: {unknown}")

    def _fit(j: int) -> MarginalModel | str:
        site_id = data.site_ids[j]
        try:
            return fit_marginal_model(
                site_id, data.values[:, j], per_site_q.get(site_id, q), mode
            )
        except ValueError as exc:
            return str(exc)

    logger.info(
        f"Fitting {mode} margins at q={q} for {len(data.site_ids)} sites "
        f"with {threads} thread(s)."
    )
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(_fit, range(len(data.site_ids))))

    problems = [r for r in results if isinstance(r, str)]
    if problems:
        msg = "Marginal fit failed for some sites:\n  " + "\n  ".join(problems)
        logger.error(msg)
        raise ConfigError(msg)

    return [r for r in results if isinstance(r, MarginalModel)]


def standardize(
    data: DataMatrix, margins: list[MarginalModel]
) -> StandardizedMatrix:
    """Transforms every column to the standard-Pareto scale."""
    if tuple(m.site_id for m in margins) != data.site_ids:
        raise ValueError("Margins do not match the data columns.")
    columns = [
        np.asarray(to_standard_pareto(m, data.values[:, j]))
        for j, m in enumerate(margins)
    ]
    values = np.column_stack(columns)
    return StandardizedMatrix(values=values, margins=tuple(margins), time=data.time)
