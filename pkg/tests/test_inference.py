import numpy as np
import pytest
from scipy.stats import multivariate_normal, norm

from pareto_pipe.errors import NumericalError, UnsupportedRiskForMLEError
from pareto_pipe.io.geometry import SiteSet
from pareto_pipe.models import inference
from pareto_pipe.models.inference import (
    FitResult,
    br_log_intensity,
    br_log_intensity_derivatives,
    fit,
    gradient_score,
    rpareto_loglik,
    smooth_risk,
)
from pareto_pipe.models.rpareto import (
    BrownResnickField,
    ParetoEpisode,
    simulate_ensemble,
)
from pareto_pipe.models.variogram import VariogramModel
from pareto_pipe.ops.risk_functionals import (
    LpNormRisk,
    MaxRisk,
    MeanRisk,
    MinRisk,
    SiteRisk,
)
from pareto_pipe.ops.weight_functions import MarginalWeights, RiskWeights
from pareto_pipe.rng import stream


def bivariate_exponent(z1, z2, gamma):
    """Exponent function V of the bivariate Brown-Resnick model."""
    a = np.sqrt(2.0 * gamma)
    log_ratio = np.log(z2 / z1)
    return norm.cdf(a / 2 + log_ratio / a) / z1 + norm.cdf(
        a / 2 - log_ratio / a
    ) / z2


@pytest.fixture
def pair_field(pair_sites, power_model):
    return BrownResnickField(power_model, pair_sites)


@pytest.fixture
def points():
    return stream(12).uniform(0.5, 6.0, size=(10, 9))


###############################################################################
# intensity


@pytest.mark.parametrize("z", [(1.0, 1.0), (2.0, 0.7), (0.4, 5.0)])
def test_intensity_is_mixed_derivative_of_exponent(pair_field, z):
    """For two sites the intensity is -d2V / dz1 dz2."""
    z1, z2 = z
    h = 1e-4

    def v(a, b):
        return bivariate_exponent(a, b, gamma=1.0)

    mixed = (
        v(z1 + h, z2 + h)
        - v(z1 + h, z2 - h)
        - v(z1 - h, z2 + h)
        + v(z1 - h, z2 - h)
    ) / (4 * h * h)

    log_l = br_log_intensity(np.array([z1, z2]), pair_field)

    assert np.exp(log_l) == pytest.approx(-mixed, rel=1e-4)


def test_intensity_homogeneity(grid_field, points):
    """log l(t z) = log l(z) - (D + 1) log t."""
    t = 3.7
    np.testing.assert_allclose(
        br_log_intensity(t * points, grid_field),
        br_log_intensity(points, grid_field) - 10 * np.log(t),
        rtol=1e-10,
    )


def test_intensity_independent_of_anchor(grid_field, points):
    reference = br_log_intensity(points, grid_field, anchor=0)
    for anchor in (3, 8):
        np.testing.assert_allclose(
            br_log_intensity(points, grid_field, anchor=anchor),
            reference,
            rtol=1e-9,
        )


def test_intensity_rejects_nonpositive_components(grid_field):
    z = np.ones(9)
    z[2] = 0.0
    with pytest.raises(ValueError, match="finite and > 0"):
        br_log_intensity(z, grid_field)


def test_derivatives_match_finite_differences(grid_field, points):
    z = points[:2]
    step = 1e-5

    grad, hess = br_log_intensity_derivatives(z, grid_field)

    for j in range(9):
        e = np.zeros(9)
        e[j] = step
        up = br_log_intensity(z + e, grid_field)
        mid = br_log_intensity(z, grid_field)
        down = br_log_intensity(z - e, grid_field)
        np.testing.assert_allclose(
            grad[:, j], (up - down) / (2 * step), rtol=1e-6, atol=1e-7
        )
        np.testing.assert_allclose(
            hess[:, j], (up - 2 * mid + down) / step**2, rtol=1e-3, atol=1e-4
        )


###############################################################################
# objectives


def test_loglik_sums_over_episodes(grid_field, points):
    """Duplicating the episodes doubles the log-likelihood."""
    single = rpareto_loglik(points, grid_field, MeanRisk())
    doubled = np.vstack([points, points])
    double = rpareto_loglik(doubled, grid_field, MeanRisk())

    assert double == pytest.approx(2 * single)


def test_loglik_needs_unit_normaliser(grid_field, points):
    with pytest.raises(UnsupportedRiskForMLEError, match="gradient score"):
        rpareto_loglik(points, grid_field, MaxRisk())


def test_gradient_score_sums_over_episodes(grid_field, points):
    weights = RiskWeights(u_w=1.0)
    single = gradient_score(points, grid_field, MeanRisk(), weights)
    double = gradient_score(
        np.vstack([points, points]), grid_field, MeanRisk(), weights
    )

    assert double == pytest.approx(2 * single)


def test_gradient_score_with_zero_weights_is_zero(grid_field, points):
    score = gradient_score(
        points, grid_field, SiteRisk(index=0), MarginalWeights(u_w=100.0)
    )
    assert score == 0.0


def test_gradient_score_replaces_max_by_lp_norm(grid_field, points):
    """The maximum has no gradient; its l_10 stand-in is used instead."""
    weights = RiskWeights(u_w=1.0)
    via_max = gradient_score(points, grid_field, MaxRisk(), weights)
    via_lp = gradient_score(points, grid_field, LpNormRisk(p=10.0), weights)

    assert via_max == pytest.approx(via_lp)


def test_smooth_risk():
    mean = MeanRisk()
    assert smooth_risk(mean) is mean
    assert isinstance(smooth_risk(MaxRisk()), LpNormRisk)
    with pytest.raises(ValueError, match="not"):
        smooth_risk(MinRisk())


###############################################################################
# fitting


@pytest.fixture
def site_episodes(grid_sites):
    brf = BrownResnickField(
        VariogramModel(family="power", beta=1.5, alpha=1.0), grid_sites
    )
    episodes, _ = simulate_ensemble(brf, SiteRisk(index=4), 300, 17)
    return episodes


def test_site_loglik_matches_log_gaussian_density(grid_field, site_episodes):
    """Under site risk Z is a Pareto radius times a log-Gaussian angle.

    Changing variables to ``(R, W)`` gives the episode density
    ``r**-2 * phi(w) / prod(z_i)``, which the likelihood must reproduce.
    """
    anchor = 4
    others = [j for j in range(9) if j != anchor]
    gamma = grid_field.gamma
    g_a = gamma[others, anchor]
    cov = g_a[:, None] + g_a[None, :] - gamma[np.ix_(others, others)]
    z = np.stack([e.Z for e in site_episodes[:50]])
    w = np.log(z[:, others] / z[:, [anchor]]) + g_a

    log_density = (
        -2.0 * np.log(z[:, anchor])
        - np.log(z[:, others]).sum(axis=1)
        + multivariate_normal(np.zeros(8), cov).logpdf(w)
    )

    assert rpareto_loglik(
        z, grid_field, SiteRisk(index=anchor)
    ) == pytest.approx(log_density.sum(), rel=1e-9)


def test_fit_result_fields(grid_sites, site_episodes):
    result = fit(
        site_episodes,
        grid_sites,
        init=(1.0, 1.0),
        objective="loglik",
        risk=SiteRisk(index=4),
        u=1.0,
    )

    assert isinstance(result, FitResult)
    assert result.n_exceedances == 300
    assert result.risk == "site"
    assert result.converged
    assert 0 < result.alpha < 2
    assert result.trace
    assert np.all(np.diff(result.trace) <= 1e-12)
    assert result.variogram().beta == result.beta


def test_fit_iteration_cap(grid_sites, site_episodes):
    result = fit(
        site_episodes,
        grid_sites,
        init=(1.0, 1.0),
        objective="loglik",
        risk=SiteRisk(index=4),
        max_iters=3,
    )

    assert not result.converged
    assert result.n_iter <= 3


def test_fit_rejects_invalid_start(grid_sites, site_episodes):
    with pytest.raises(ValueError, match="Initial values"):
        fit(site_episodes, grid_sites, init=(1.0, 2.5))


def test_fit_reports_weight_kink_at_start(grid_sites, site_episodes):
    """An episode sitting on the weight threshold fails the fit loudly
    instead of leaving the starting values in place."""
    pinned = ParetoEpisode(1.0, site_episodes[0].Y)
    assert pinned.Z[4] == 1.0

    with pytest.raises(ValueError, match="not differentiable"):
        fit(
            [pinned, *site_episodes[1:100]],
            grid_sites,
            init=(1.3, 0.7),
            objective="gradscore",
            risk=SiteRisk(index=4),
        )


def test_fit_without_finite_objective_raises(
    monkeypatch, grid_sites, site_episodes
):
    monkeypatch.setattr(inference, "gradient_score", lambda *args: np.nan)

    with pytest.raises(NumericalError, match="not finite at the starting"):
        fit(site_episodes, grid_sites, init=(1.0, 1.0))


def test_fit_loglik_rejects_max_risk(grid_sites, site_episodes):
    with pytest.raises(UnsupportedRiskForMLEError):
        fit(
            site_episodes,
            grid_sites,
            init=(1.0, 1.0),
            objective="loglik",
            risk=MaxRisk(),
        )


def test_fit_result_consistency_checks():
    base = {
        "family": "power",
        "beta": 1.0,
        "alpha": 1.0,
        "objective": "loglik",
        "objective_value": 0.0,
        "n_iter": 10,
        "max_iters": 10,
        "converged": True,
        "n_exceedances": 5,
        "u": 1.0,
        "risk": "site",
    }
    with pytest.raises(ValueError, match="iteration cap"):
        FitResult(**base)
    with pytest.raises(ValueError, match="Power shape"):
        FitResult(**{**base, "converged": False, "alpha": 2.5})


@pytest.mark.slow
def test_loglik_recovers_parameters(grid_sites, site_episodes):
    result = fit(
        site_episodes,
        grid_sites,
        init=(1.0, 1.0),
        objective="loglik",
        risk=SiteRisk(index=4),
    )

    assert result.beta == pytest.approx(1.5, rel=0.25)
    assert result.alpha == pytest.approx(1.0, abs=0.25)


@pytest.mark.slow
def test_gradient_score_recovers_parameters_for_mean_risk():
    sites = SiteSet.grid(4, 4, 1.0)
    brf = BrownResnickField(
        VariogramModel(family="power", beta=2.0, alpha=1.2), sites
    )
    episodes, _ = simulate_ensemble(brf, MeanRisk(), 2000, 23, threads=4)

    result = fit(
        episodes,
        sites,
        init=(1.0, 1.0),
        objective="gradscore",
        risk=MeanRisk(),
        weights=RiskWeights(u_w=1.0),
    )

    assert result.converged
    assert result.beta == pytest.approx(2.0, rel=0.3)
    assert result.alpha == pytest.approx(1.2, abs=0.3)


@pytest.mark.slow
def test_score_and_likelihood_fits_agree_on_site_episodes():
    """500 site episodes on a 5 x 5 grid from Power(1, 1.5).

    The score fit lands near the truth and the likelihood fit agrees with
    it within 10%.
    """
    sites = SiteSet.grid(5, 5, 1.0)
    brf = BrownResnickField(
        VariogramModel(family="power", beta=1.0, alpha=1.5), sites
    )
    risk = SiteRisk(index=12)
    episodes, _ = simulate_ensemble(brf, risk, 500, 31, threads=4)

    score, loglik = (
        fit(episodes, sites, init=(1.0, 1.0), objective=name, risk=risk)
        for name in ("gradscore", "loglik")
    )

    assert score.converged and loglik.converged
    assert 0.85 <= score.beta <= 1.15
    assert 1.35 <= score.alpha <= 1.65
    assert loglik.beta == pytest.approx(score.beta, rel=0.1)
    assert loglik.alpha == pytest.approx(score.alpha, rel=0.1)
