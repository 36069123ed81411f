"""Simulation of simple, generalized and r-Pareto processes.

Every episode is stored as ``Z = R * Y`` with a Pareto radius ``R = r(Z)``
and an angular vector ``Y`` normalised so that ``r(Y) = 1``.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from loguru import logger

from pareto_pipe.errors import ConfigError, RejectionLimitError
from pareto_pipe.io.geometry import SiteSet
from pareto_pipe.models.gaussfield import (
    CholFactor,
    factor,
    sample_anchored_increments,
)
from pareto_pipe.models.margins import StandardizedMatrix
from pareto_pipe.models.variogram import (
    AnchoredSigma,
    VariogramModel,
    anchored_sigma_from_gamma,
    gamma_matrix,
)
from pareto_pipe.ops.risk_functionals import (
    MeanRisk,
    RiskFunctional,
    SiteRisk,
)
from pareto_pipe.rng import stream

#: Default budget of base draws per accepted rejection sample.
DEFAULT_MAX_ITERS = 10**6

#: Slack on R >= 1 for radii recomputed in floating point.
RADIUS_TOL = 1e-12


class Origin(str, Enum):
    """Where an episode comes from."""

    PARAMETRIC = "parametric"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class ParetoEpisode:
    """One extreme episode ``Z = R * Y``.

    Attributes:
        R: Risk of the episode, >= 1.
        Y: Angular vector with unit risk.
        origin: Simulated or extracted from data.
        time_index: Row of the source data for empirical episodes.
        Z: ``R * Y``, computed on construction.
    """

    R: float
    Y: np.ndarray
    origin: Origin = Origin.PARAMETRIC
    time_index: int | None = None
    Z: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.R >= 1.0 - RADIUS_TOL:
            raise ValueError(f"Episode radius must be >= 1, got {self.R}.")
        y = np.array(self.Y, dtype=float)
        y.setflags(write=False)
        z = self.R * y
        z.setflags(write=False)
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "Y", y)
        object.__setattr__(self, "Z", z)

    @classmethod
    def from_field(
        cls,
        z: np.ndarray,
        risk: RiskFunctional,
        origin: Origin = Origin.PARAMETRIC,
        time_index: int | None = None,
    ) -> ParetoEpisode:
        """Splits a field into radius ``r(z)`` and angle ``z / r(z)``."""
        radius = float(risk(z))
        return cls(radius, z / radius, origin, time_index)


@dataclass(frozen=True)
class GevMarginalMap:
    """Per-site location, scale and shape of a generalized Pareto process.

    Attributes:
        mu: Locations, shape ``(D,)``.
        sigma: Scales, all > 0.
        xi: Shapes; 0 selects the logarithmic branch.
    """

    mu: np.ndarray
    sigma: np.ndarray
    xi: np.ndarray

    def __post_init__(self) -> None:
        arrays = [np.atleast_1d(np.asarray(a, dtype=float)) for a in
                  (self.mu, self.sigma, self.xi)]
        size = max(a.size for a in arrays)
        try:
            mu, sigma, xi = (np.broadcast_to(a, (size,)).copy() for a in arrays)
        except ValueError as exc:
            raise ValueError(
                "mu, sigma and xi must have equal length or be scalars."
            ) from exc
        if np.any(sigma <= 0):
            raise ValueError("GEV scales must be > 0.")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "xi", xi)

    @classmethod
    def constant(
        cls, n_sites: int, mu: float, sigma: float, xi: float
    ) -> GevMarginalMap:
        """Same parameters at every site."""
        return cls(np.full(n_sites, mu), np.full(n_sites, sigma), np.full(n_sites, xi))


@dataclass
class AcceptanceStats:
    """Running counts of a rejection sampler."""

    attempts: int = 0
    accepted: int = 0

    @property
    def rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else float("nan")

    def merge(self, other: AcceptanceStats) -> None:
        self.attempts += other.attempts
        self.accepted += other.accepted


################################################################################
# Brown-Resnick field with cached factors
################################################################################


@dataclass(frozen=True)
class AnchoredFactor:
    """Factorized anchored covariance and derived quantities.

    Attributes:
        sigma: The anchored covariance.
        chol: Its Cholesky factor.
        precision: Inverse of ``chol.lower @ chol.lower.T``; NaN when an
            increment has zero variance.
        logdet: ``log |Sigma|``, ``-inf`` in the degenerate case.
    """

    sigma: AnchoredSigma
    chol: CholFactor
    precision: np.ndarray
    logdet: float


class BrownResnickField:
    """Brown-Resnick spectral model of a variogram on a site set.

    The semivariogram matrix is computed once; anchored covariances and
    their factors are computed on first use and cached. Instances are safe
    to share across threads.
    """

    def __init__(self, model: VariogramModel, sites: SiteSet) -> None:
        self.model = model
        self.sites = sites
        self.gamma = gamma_matrix(model, sites)
        self.gamma.setflags(write=False)
        self._factors: dict[int, AnchoredFactor] = {}
        self._lock = threading.Lock()

    @property
    def n_sites(self) -> int:
        return self.sites.n_sites

    def anchored(self, anchor: int) -> AnchoredFactor:
        """Factorized covariance of the increments relative to ``anchor``."""
        with self._lock:
            cached = self._factors.get(anchor)
            if cached is not None:
                return cached
            sigma = anchored_sigma_from_gamma(self.gamma, anchor)
            chol = factor(sigma)
            lower = chol.lower
            diag = np.diag(lower)
            if np.all(diag > 0):
                eye = np.eye(lower.shape[0])
                inv_lower = np.linalg.solve(lower, eye)
                precision = inv_lower.T @ inv_lower
                logdet = 2.0 * float(np.sum(np.log(diag)))
            else:
                precision = np.full_like(lower, np.nan)
                logdet = -np.inf
            entry = AnchoredFactor(sigma, chol, precision, logdet)
            self._factors[anchor] = entry
            return entry

    def __repr__(self) -> str:
        return f"BrownResnickField({self.model!r}, D={self.n_sites})"


################################################################################
# Samplers
################################################################################


def risk_eval(risk: RiskFunctional, z: np.ndarray) -> float | np.ndarray:
    """Risk of a field (or of each row of a stack of fields)."""
    out = risk(np.asarray(z, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def sample_pareto_radius(
    rng: np.random.Generator,
    alpha: float = 1.0,
    size: int | None = None,
) -> float | np.ndarray:
    """Pareto radius ``U ** (-1 / alpha)`` with ``U`` uniform on (0, 1].

    Args:
        rng: Random generator.
        alpha: Tail index, > 0.
        size: Number of draws, ``None`` for a scalar.

    Returns:
        Radius (or radii) >= 1 with survival ``r ** -alpha``.
    """
    if not alpha > 0:
        raise ValueError(f"Tail index must be > 0, got {alpha}.")
    u = 1.0 - rng.random(size)
    out = u ** (-1.0 / alpha)
    return float(out) if size is None else out


def sample_site_spectral(
    brf: BrownResnickField,
    anchor: int,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Log-Gaussian spectral vector conditioned on site ``anchor``.

    ``Y[anchor] = 1`` and ``Y[i] = exp(W_i - gamma(s_i, s_anchor))`` with
    ``W`` the anchored Gaussian increments, so that ``E[Y[i]] = 1``.

    Returns:
        Array of shape ``(D,)`` or ``(size, D)``.
    """
    n_sites = brf.n_sites
    shape = (n_sites,) if size is None else (size, n_sites)
    y = np.ones(shape)
    if n_sites == 1:
        return y
    entry = brf.anchored(anchor)
    others = np.array(entry.sigma.others)
    w = sample_anchored_increments(entry.chol, rng, size)
    y[..., others] = np.exp(w - brf.gamma[others, anchor])
    return y


def sample_simple_pareto_site(
    brf: BrownResnickField, anchor: int, rng: np.random.Generator
) -> ParetoEpisode:
    """Episode of the Pareto process conditioned on an exceedance at ``anchor``."""
    y = sample_site_spectral(brf, anchor, rng)
    radius = sample_pareto_radius(rng)
    return ParetoEpisode(radius, y)


def mixture_weights(risk: RiskFunctional, brf: BrownResnickField) -> np.ndarray:
    """Probabilities of the conditioning site in the linear-risk mixture.

    Site ``k`` is chosen proportionally to ``pi_k`` times the mean of the
    spectral process at ``s_k``. With standardized margins these means are
    all one, so the result is ``pi`` renormalised.
    """
    pi = risk.linear_weights(brf.n_sites)
    site_means = np.ones(brf.n_sites)
    weights = pi * site_means
    return weights / weights.sum()


def sample_mixture_site(
    brf: BrownResnickField,
    risk: RiskFunctional,
    rng: np.random.Generator,
    weights: np.ndarray | None = None,
) -> int:
    """Index of the conditioning site of one linear-risk episode."""
    if weights is None:
        weights = mixture_weights(risk, brf)
    return int(rng.choice(brf.n_sites, p=weights))


def sample_linear_risk(
    brf: BrownResnickField,
    risk: RiskFunctional,
    rng: np.random.Generator,
    weights: np.ndarray | None = None,
) -> ParetoEpisode:
    """Episode of the r-Pareto process for a linear risk functional.

    Draws a conditioning site from the mixture weights, a site spectral
    vector there, renormalises it to unit risk and attaches a fresh Pareto
    radius.

    Args:
        brf: Spectral model.
        risk: A linear functional (``site``, ``mean``, ``weighted_sum``).
        rng: Random generator.
        weights: Precomputed :func:`mixture_weights`.
    """
    if not risk.LINEAR:
        raise ValueError(
            f"Mixture sampling needs a linear risk, got '{risk.type_name}'."
        )
    if brf.n_sites == 1:
        return sample_simple_pareto_site(brf, 0, rng)
    tau = sample_mixture_site(brf, risk, rng, weights)
    y_tau = sample_site_spectral(brf, tau, rng)
    y = y_tau / risk_eval(risk, y_tau)
    radius = sample_pareto_radius(rng)
    return ParetoEpisode(radius, y)


def sample_rejection(
    brf: BrownResnickField,
    target: RiskFunctional,
    rng: np.random.Generator,
    max_iters: int = DEFAULT_MAX_ITERS,
    stats: AcceptanceStats | None = None,
) -> ParetoEpisode:
    """Episode for ``target`` by rejection from mean-risk episodes.

    Draws mean-risk fields ``Z`` until ``target(Z) >= M`` with ``M`` the
    dominating constant of ``target`` over the mean, and returns ``Z / M``.

    Args:
        brf: Spectral model.
        target: Risk functional of the episodes.
        rng: Random generator.
        max_iters: Base draws allowed for this sample.
        stats: Counters updated in place.

    Raises:
        RejectionLimitError: If no draw is accepted within ``max_iters``.
    """
    base = MeanRisk()
    weights = mixture_weights(base, brf)
    bound = target.dominating_constant(brf.n_sites)
    local = AcceptanceStats()
    try:
        for _ in range(max_iters):
            local.attempts += 1
            z = sample_linear_risk(brf, base, rng, weights).Z
            if risk_eval(target, z) >= bound:
                local.accepted += 1
                return ParetoEpisode.from_field(z / bound, target)
    finally:
        if stats is not None:
            stats.merge(local)

    msg = (
        f"Rejection sampling for '{target.type_name}' accepted nothing in "
        f"{max_iters} draws (acceptance rate 0/{local.attempts}, M={bound:g})."
    )
    logger.error(msg)
    raise RejectionLimitError(msg)


def sample_episode(
    brf: BrownResnickField,
    risk: RiskFunctional,
    rng: np.random.Generator,
    max_iters: int = DEFAULT_MAX_ITERS,
    stats: AcceptanceStats | None = None,
) -> ParetoEpisode:
    """Draws one episode with the sampler suited to ``risk``."""
    if isinstance(risk, SiteRisk):
        return sample_simple_pareto_site(brf, risk.params.index, rng)
    if risk.LINEAR:
        return sample_linear_risk(brf, risk, rng)
    return sample_rejection(brf, risk, rng, max_iters, stats)


def simulate_ensemble(
    brf: BrownResnickField,
    risk: RiskFunctional,
    n_episodes: int,
    seed: int,
    threads: int = 1,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> tuple[list[ParetoEpisode], AcceptanceStats]:
    """Draws ``n_episodes`` episodes, episode ``k`` from stream ``(seed, k)``.

    Returns:
        The episodes in order and the pooled acceptance counts (zero
        attempts unless the rejection sampler was used).

    Raises:
        ConfigError: If the risk does not fit the site set.
    """
    try:
        risk.validate_dimension(brf.n_sites)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if n_episodes < 1:
        raise ConfigError(f"Ensemble size must be >= 1, got {n_episodes}.")

    if not risk.LINEAR:
        # factors of every anchor, built before the workers start
        for anchor in range(brf.n_sites):
            brf.anchored(anchor)

    def _draw(k: int) -> tuple[ParetoEpisode, AcceptanceStats]:
        local = AcceptanceStats()
        episode = sample_episode(brf, risk, stream(seed, k), max_iters, local)
        return episode, local

    logger.info(
        f"Simulating {n_episodes} '{risk.type_name}' episodes on "
        f"{brf.n_sites} sites with {threads} thread(s)."
    )
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(_draw, range(n_episodes)))

    stats = AcceptanceStats()
    for _, local in results:
        stats.merge(local)
    if stats.attempts:
        logger.info(
            f"Rejection acceptance rate for '{risk.type_name}': "
            f"{stats.accepted}/{stats.attempts} = {stats.rate:.4g}"
        )
    return [episode for episode, _ in results], stats


################################################################################
# Generalized processes, data episodes and lifting
################################################################################


def generalized_transform(
    episode: ParetoEpisode | np.ndarray, gev_map: GevMarginalMap
) -> np.ndarray:
    """Marginal transform ``mu + sigma * (Z ** xi - 1) / xi`` per site.

    ``xi = 0`` uses ``mu + sigma * log(Z)``. No truncation of small values
    is applied.
    """
    z = episode.Z if isinstance(episode, ParetoEpisode) else np.asarray(episode)
    if z.shape[-1] != gev_map.mu.size:
        raise ValueError(
            f"Map defined on {gev_map.mu.size} sites, field has {z.shape[-1]}."
        )
    log_z = np.log(z)
    xi = gev_map.xi
    is_zero = xi == 0
    safe_xi = np.where(is_zero, 1.0, xi)
    power = np.where(is_zero, log_z, np.expm1(xi * log_z) / safe_xi)
    return gev_map.mu + gev_map.sigma * power


def extract_episodes(
    data: StandardizedMatrix | np.ndarray,
    risk: RiskFunctional,
    u: float,
) -> list[ParetoEpisode]:
    """Rows whose risk exceeds ``u``, rescaled as ``Z = X / u``.

    Rows with missing cells are skipped. The row index is kept as
    ``time_index``.

    Args:
        data: Standardized matrix (or bare ``(n, D)`` array).
        risk: Risk functional defining exceedances.
        u: Risk threshold, > 0.

    Returns:
        Episodes in row order; empty if nothing exceeds ``u``.
    """
    if not u > 0:
        raise ValueError(f"Risk threshold must be > 0, got {u}.")
    values = (
        data.values
        if isinstance(data, StandardizedMatrix)
        else np.asarray(data, dtype=float)
    )
    risk.validate_dimension(values.shape[1])

    complete = ~np.any(np.isnan(values), axis=1)
    if not np.all(complete):
        logger.warning(
            f"Skipping {int((~complete).sum())} row(s) with missing values."
        )
    rows = np.flatnonzero(complete)
    risks = risk(values[rows])
    hits = rows[risks > u]

    episodes = [
        ParetoEpisode.from_field(values[i] / u, risk, Origin.EMPIRICAL, int(i))
        for i in hits
    ]
    logger.info(
        f"Extracted {len(episodes)} '{risk.type_name}' exceedances above "
        f"u={u:.6g} from {rows.size} complete rows."
    )
    return episodes


def lift_resample(
    episodes: list[ParetoEpisode],
    n_episodes: int,
    rng: np.random.Generator,
    alpha: float = 1.0,
) -> list[ParetoEpisode]:
    """Pairs fresh Pareto radii with resampled empirical angular vectors.

    Raises:
        ValueError: If ``episodes`` is empty or ``n_episodes`` negative.
    """
    if not episodes:
        raise ValueError("Cannot lift an empty episode list.")
    if n_episodes < 0:
        raise ValueError(f"Number of lifted episodes must be >= 0, got {n_episodes}.")
    if n_episodes == 0:
        return []
    picks = rng.integers(0, len(episodes), size=n_episodes)
    radii = np.atleast_1d(sample_pareto_radius(rng, alpha, n_episodes))
    return [
        ParetoEpisode(
            float(r),
            episodes[i].Y,
            Origin.EMPIRICAL,
            episodes[i].time_index,
        )
        for i, r in zip(picks, radii, strict=True)
    ]


################################################################################
# Summaries
################################################################################


def areal_extremal_coefficient(
    brf: BrownResnickField,
    risk: RiskFunctional,
    n_draws: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the exponent measure of ``{r >= 1}``.

    With unit-mean spectral processes this equals ``E[r(Y)]`` for ``Y`` the
    angular vector of a mean-risk episode.

    Returns:
        The estimate and its standard error.
    """
    base = MeanRisk()
    weights = mixture_weights(base, brf)
    values = np.array(
        [
            risk_eval(risk, sample_linear_risk(brf, base, rng, weights).Y)
            for _ in range(n_draws)
        ]
    )
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(n_draws))


def joint_survival(
    episodes: list[ParetoEpisode], thresholds: np.ndarray
) -> float:
    """``P(Z > u)`` componentwise, averaged over the angular vectors.

    Uses ``P(R Y > u | Y) = min(1, min_i Y_i / u_i)`` for a unit Pareto
    radius, which holds when ``{z > u}`` lies inside the risk region.
    """
    if not episodes:
        raise ValueError("No episodes given.")
    u = np.asarray(thresholds, dtype=float)
    y = np.stack([e.Y for e in episodes])
    return float(np.minimum(1.0, (y / u).min(axis=1)).mean())
