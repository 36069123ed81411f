import numpy as np
import pytest
from scipy.stats import chisquare, kstest, pareto

from pareto_pipe.errors import ConfigError, RejectionLimitError
from pareto_pipe.models.rpareto import (
    AcceptanceStats,
    BrownResnickField,
    GevMarginalMap,
    Origin,
    ParetoEpisode,
    areal_extremal_coefficient,
    extract_episodes,
    generalized_transform,
    joint_survival,
    lift_resample,
    mixture_weights,
    risk_eval,
    sample_linear_risk,
    sample_mixture_site,
    sample_pareto_radius,
    sample_rejection,
    sample_simple_pareto_site,
    sample_site_spectral,
    simulate_ensemble,
)
from pareto_pipe.models.variogram import (
    VariogramModel,
    extremal_coefficient_pair,
    theoretical_chi,
)
from pareto_pipe.ops.risk_functionals import (
    MaxRisk,
    MeanRisk,
    MinRisk,
    OrderStatRisk,
    SiteRisk,
    WeightedSumRisk,
)
from pareto_pipe.rng import stream


@pytest.fixture
def pair_field(pair_sites, power_model):
    return BrownResnickField(power_model, pair_sites)


###############################################################################
# episodes


def test_episode_is_radius_times_angle():
    episode = ParetoEpisode(2.0, np.array([0.5, 1.5]))

    np.testing.assert_allclose(episode.Z, [1.0, 3.0])
    assert episode.origin is Origin.PARAMETRIC
    with pytest.raises(ValueError):
        episode.Z[0] = 4.0


def test_episode_radius_below_one_rejected():
    with pytest.raises(ValueError, match="radius must be >= 1"):
        ParetoEpisode(0.9, np.ones(2))


def test_from_field_normalises_angle():
    episode = ParetoEpisode.from_field(np.array([2.0, 6.0]), MaxRisk())

    assert episode.R == 6.0
    np.testing.assert_allclose(episode.Y, [1.0 / 3.0, 1.0])


def test_pareto_radius_law():
    """log R is standard exponential."""
    radii = sample_pareto_radius(stream(1), size=20_000)

    assert radii.min() >= 1.0
    assert kstest(radii, pareto(b=1.0).cdf).pvalue > 0.01


def test_pareto_radius_needs_positive_index():
    with pytest.raises(ValueError, match="Tail index"):
        sample_pareto_radius(stream(1), alpha=0.0)


###############################################################################
# samplers


def test_site_spectral_vector_has_unit_mean(pair_field):
    """Y at the anchor is 1 and E[Y] = 1 elsewhere."""
    y = sample_site_spectral(pair_field, 0, stream(8), size=50_000)

    np.testing.assert_array_equal(y[:, 0], 1.0)
    assert y[:, 1].mean() == pytest.approx(1.0, abs=0.06)


def test_mixture_weights_follow_linear_weights(grid_field):
    weights = mixture_weights(
        WeightedSumRisk(weights=[0.5] + [0.0] * 7 + [0.5]), grid_field
    )
    assert weights[0] == weights[8] == 0.5
    assert weights.sum() == pytest.approx(1.0)


def test_linear_risk_angles_have_unit_risk(grid_field):
    risk = MeanRisk()
    rng = stream(3)

    episodes = [sample_linear_risk(grid_field, risk, rng) for _ in range(50)]

    for episode in episodes:
        assert risk(episode.Y) == pytest.approx(1.0)
        assert episode.R >= 1.0


def test_nonlinear_risk_rejected_by_mixture_sampler(grid_field):
    with pytest.raises(ValueError, match="needs a linear risk"):
        sample_linear_risk(grid_field, MaxRisk(), stream(0))


def test_rejection_counts_and_unit_risk(grid_field):
    stats = AcceptanceStats()
    rng = stream(5)

    episodes = [
        sample_rejection(grid_field, MaxRisk(), rng, stats=stats)
        for _ in range(20)
    ]

    assert stats.accepted == 20
    assert stats.attempts >= 20
    assert 0 < stats.rate <= 1
    for episode in episodes:
        assert episode.Y.max() == pytest.approx(1.0)


def test_rejection_gives_up_after_max_iters(pair_sites):
    """With an enormous variogram the minimum never reaches the bound."""
    brf = BrownResnickField(
        VariogramModel(family="power", beta=0.01, alpha=1.9), pair_sites
    )
    stats = AcceptanceStats()

    with pytest.raises(RejectionLimitError, match="accepted nothing in 50"):
        sample_rejection(brf, MinRisk(), stream(0), max_iters=50, stats=stats)
    assert stats.attempts == 50
    assert stats.accepted == 0


###############################################################################
# ensembles


def test_ensemble_independent_of_thread_count(grid_field):
    """Episode k always comes from stream (seed, k)."""
    serial, stats_serial = simulate_ensemble(grid_field, MaxRisk(), 40, 99)
    pooled, stats_pooled = simulate_ensemble(
        grid_field, MaxRisk(), 40, 99, threads=4
    )

    for a, b in zip(serial, pooled, strict=True):
        np.testing.assert_array_equal(a.Z, b.Z)
    assert stats_serial == stats_pooled


def test_ensemble_depends_on_seed(grid_field):
    a, _ = simulate_ensemble(grid_field, MeanRisk(), 5, 1)
    b, _ = simulate_ensemble(grid_field, MeanRisk(), 5, 2)
    assert not np.array_equal(a[0].Z, b[0].Z)


def test_linear_ensemble_has_no_rejection_stats(grid_field):
    _, stats = simulate_ensemble(grid_field, SiteRisk(index=4), 10, 0)
    assert stats.attempts == 0


def test_ensemble_rejects_bad_dimension(grid_field):
    with pytest.raises(ConfigError, match="out of range"):
        simulate_ensemble(grid_field, SiteRisk(index=20), 10, 0)


def test_ensemble_rejects_empty_size(grid_field):
    with pytest.raises(ConfigError, match=">= 1"):
        simulate_ensemble(grid_field, MeanRisk(), 0, 0)


def test_site_episodes_match_pair_chi(pair_field, power_model):
    """P(Z_b > 1) for episodes conditioned on site a equals chi(h)."""
    episodes, _ = simulate_ensemble(pair_field, SiteRisk(index=0), 5000, 7)

    estimate = joint_survival(episodes, np.array([1.0, 1.0]))

    assert estimate == pytest.approx(
        theoretical_chi(power_model, 1.0), abs=0.03
    )


def test_max_episodes_joint_exceedance(pair_field, power_model):
    """P(min Z > 1 | max Z > 1) = (2 - theta) / theta for a pair."""
    episodes, stats = simulate_ensemble(pair_field, MaxRisk(), 4000, 11)
    theta = extremal_coefficient_pair(power_model, 1.0)

    estimate = joint_survival(episodes, np.array([1.0, 1.0]))

    assert estimate == pytest.approx((2.0 - theta) / theta, abs=0.03)
    assert stats.rate == pytest.approx(theta / 2.0, abs=0.03)


@pytest.mark.slow
def test_order_stat_radii_are_standard_pareto(grid_field):
    risk = OrderStatRisk(k=3)

    episodes, _ = simulate_ensemble(grid_field, risk, 3000, 21, threads=4)
    radii = np.array([e.R for e in episodes])

    assert kstest(radii, pareto(b=1.0).cdf).pvalue > 0.01
    np.testing.assert_allclose(
        risk(np.stack([e.Y for e in episodes])), 1.0, rtol=1e-12
    )


###############################################################################
# laws of the process


def site_fields(brf, anchor, n, seed):
    """``n`` fields conditioned on site ``anchor``, drawn in one block."""
    rng = stream(seed)
    y = sample_site_spectral(brf, anchor, rng, size=n)
    radii = sample_pareto_radius(rng, size=n)
    return radii[:, None] * y


@pytest.mark.parametrize("u", [2.0, 5.0])
def test_site_episodes_are_threshold_stable(grid_field, u):
    """Given Z(s0) > u, Z / u has the law of Z.

    Compared at a neighbour of the conditioning site on 99 quantile levels;
    each level must fall inside a 4 sigma band.
    """
    z = site_fields(grid_field, 4, 100_000, 41)
    above = z[z[:, 4] > u] / u
    levels = np.arange(1, 100) / 100

    quantiles = np.quantile(above[:, 5], levels)
    reached = np.searchsorted(np.sort(z[:, 5]), quantiles, side="right")
    band = 4 * np.sqrt(
        levels * (1 - levels) * (1 / len(above) + 1 / len(z))
    )

    assert len(above) > 100_000 / u * 0.95
    np.testing.assert_array_less(np.abs(reached / len(z) - levels), band)


@pytest.mark.parametrize("u", [2.0, 5.0])
def test_site_law_is_homogeneous(grid_field, u):
    """P(Z in uA) = P(Z in A) / u within 3 standard errors."""
    n = 100_000
    z = site_fields(grid_field, 4, n, 43)

    events = {
        "anchor above 2": lambda f: f[:, 4] > 2.0,
        "anchor above 2, neighbour above 1": lambda f: (f[:, 4] > 2.0)
        & (f[:, 5] > 1.0),
    }
    for name, event in events.items():
        p = event(z).mean()
        p_u = event(z / u).mean()
        se = np.sqrt(p_u * (1 - p_u) / n) + np.sqrt(p * (1 - p) / n) / u
        assert abs(p_u - p / u) <= 3 * se, name


def test_mean_risk_conditioning_site_is_uniform(grid_field):
    """Every site is equally likely to condition a mean-risk episode."""
    risk = MeanRisk()
    weights = mixture_weights(risk, grid_field)
    rng = stream(47)

    draws = [
        sample_mixture_site(grid_field, risk, rng, weights)
        for _ in range(10_000)
    ]

    counts = np.bincount(draws, minlength=9)
    assert counts.sum() == 10_000
    assert chisquare(counts).pvalue > 0.01


def test_linear_episode_is_conditioned_on_drawn_site(grid_field):
    """The episode angle is the spectral vector at the drawn site, rescaled."""
    risk = MeanRisk()

    episode = sample_linear_risk(grid_field, risk, stream(48))

    rng = stream(48)
    site = sample_mixture_site(grid_field, risk, rng)
    y_site = sample_site_spectral(grid_field, site, rng)
    np.testing.assert_allclose(episode.Y, y_site / y_site.mean(), rtol=1e-12)


###############################################################################
# summaries


def test_areal_coefficient_of_mean_is_one(grid_field):
    estimate, se = areal_extremal_coefficient(
        grid_field, MeanRisk(), 200, stream(2)
    )
    assert estimate == pytest.approx(1.0)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_areal_coefficient_of_max_on_pair(pair_field, power_model):
    estimate, se = areal_extremal_coefficient(
        pair_field, MaxRisk(), 5000, stream(4)
    )
    expected = extremal_coefficient_pair(power_model, 1.0)

    assert abs(estimate - expected) < 4 * se + 1e-3


def test_joint_survival_of_empty_list_raises():
    with pytest.raises(ValueError, match="No episodes"):
        joint_survival([], np.ones(2))


###############################################################################
# generalized transform, extraction and lifting


def test_generalized_transform_branches():
    gev_map = GevMarginalMap(
        mu=np.array([1.0, 1.0]),
        sigma=np.array([2.0, 2.0]),
        xi=np.array([0.0, 0.5]),
    )

    out = generalized_transform(np.array([np.e, 4.0]), gev_map)

    np.testing.assert_allclose(out, [3.0, 1.0 + 2.0 * (2.0 - 1.0) / 0.5])


def test_generalized_transform_of_unit_field_is_location():
    gev_map = GevMarginalMap.constant(3, mu=5.0, sigma=1.0, xi=-0.2)
    np.testing.assert_allclose(generalized_transform(np.ones(3), gev_map), 5.0)


def test_gev_map_rejects_bad_scale_and_lengths():
    with pytest.raises(ValueError, match="scales must be > 0"):
        GevMarginalMap(0.0, -1.0, 0.0)
    with pytest.raises(ValueError, match="equal length"):
        GevMarginalMap(np.zeros(2), np.ones(3), 0.0)


def test_extract_episodes_scales_by_threshold():
    values = np.array(
        [[1.0, 1.0], [4.0, 8.0], [np.nan, 50.0], [3.0, 1.0], [2.0, 2.0]]
    )

    episodes = extract_episodes(values, MeanRisk(), u=2.0)

    assert [e.time_index for e in episodes] == [1]
    np.testing.assert_allclose(episodes[0].Z, [2.0, 4.0])
    assert episodes[0].R == pytest.approx(3.0)
    assert episodes[0].origin is Origin.EMPIRICAL


def test_extract_episodes_threshold_must_be_positive():
    with pytest.raises(ValueError, match="must be > 0"):
        extract_episodes(np.ones((2, 2)), MeanRisk(), u=0.0)


def test_lift_reuses_empirical_angles():
    source = [
        ParetoEpisode(1.5, np.array([1.0, 0.5]), Origin.EMPIRICAL, 3),
        ParetoEpisode(2.0, np.array([0.2, 1.0]), Origin.EMPIRICAL, 8),
    ]

    lifted = lift_resample(source, 100, stream(0))

    assert len(lifted) == 100
    for episode in lifted:
        match = source[0] if episode.time_index == 3 else source[1]
        np.testing.assert_array_equal(episode.Y, match.Y)
        assert episode.R >= 1.0


def test_lift_edge_cases():
    source = [ParetoEpisode(1.0, np.ones(2))]
    assert lift_resample(source, 0, stream(0)) == []
    with pytest.raises(ValueError, match="empty episode list"):
        lift_resample([], 5, stream(0))


###############################################################################
# small helpers


def test_site_episode_is_pinned_at_anchor(grid_field):
    """The anchor carries the radius; the spectral value there is one."""
    episode = sample_simple_pareto_site(grid_field, 4, stream(2))

    assert episode.R >= 1.0
    assert episode.Z[4] == pytest.approx(episode.R)
    assert episode.Y[4] == pytest.approx(1.0)


def test_risk_eval_scalar_and_stack():
    fields = np.array([[1.0, 3.0], [2.0, 2.0]])

    single = risk_eval(MaxRisk(), fields[0])
    stacked = risk_eval(MeanRisk(), fields)

    assert isinstance(single, float) and single == 3.0
    np.testing.assert_allclose(stacked, [2.0, 2.0])
