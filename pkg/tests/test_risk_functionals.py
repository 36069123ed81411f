import numpy as np
import pytest

from pareto_pipe.ops import REGISTRY, build_op
from pareto_pipe.ops.risk_functionals import (
    GeometricMeanRisk,
    LpNormRisk,
    MaxRisk,
    MeanRisk,
    MinRisk,
    OrderStatRisk,
    SiteRisk,
    WeightedSumRisk,
)
from pareto_pipe.rng import stream

Z = np.array([[1.0, 4.0, 2.0], [3.0, 3.0, 3.0]])


def test_all_functionals_registered():
    assert set(REGISTRY["risk_functional"]) == {
        "site",
        "weighted_sum",
        "mean",
        "max",
        "min",
        "order_stat",
        "lp_norm",
        "geometric_mean",
    }


@pytest.mark.parametrize(
    ("risk", "expected"),
    [
        (SiteRisk(index=1), [4.0, 3.0]),
        (MeanRisk(), [7.0 / 3.0, 3.0]),
        (MaxRisk(), [4.0, 3.0]),
        (MinRisk(), [1.0, 3.0]),
        (OrderStatRisk(k=2), [2.0, 3.0]),
        (LpNormRisk(p=1.0), [7.0, 9.0]),
        (GeometricMeanRisk(), [2.0, 3.0]),
        (WeightedSumRisk(weights=[0.5, 0.0, 0.5]), [1.5, 3.0]),
    ],
)
def test_evaluate(risk, expected):
    np.testing.assert_allclose(risk(Z), expected)


@pytest.mark.parametrize("name", sorted(REGISTRY["risk_functional"]))
def test_homogeneous_of_order_one(name):
    """r(t z) = t r(z) for every registered functional."""
    cfg = {"weights": [0.2, 0.3, 0.5]} if name == "weighted_sum" else {}
    risk = build_op("risk_functional", name, **cfg)
    z = stream(2).uniform(0.5, 5.0, size=(20, 3))

    np.testing.assert_allclose(risk(3.5 * z), 3.5 * risk(z), rtol=1e-12)


@pytest.mark.parametrize("name", sorted(REGISTRY["risk_functional"]))
def test_dominated_by_mean(name):
    """r(z) <= M mean(z) on the positive orthant."""
    cfg = {"weights": [0.2, 0.3, 0.5]} if name == "weighted_sum" else {}
    risk = build_op("risk_functional", name, **cfg)
    z = stream(4).exponential(size=(500, 3))

    bound = risk.dominating_constant(3) * z.mean(axis=1)

    assert np.all(risk(z) <= bound * (1 + 1e-12))


@pytest.mark.parametrize(
    "risk",
    [
        SiteRisk(index=2),
        MeanRisk(),
        LpNormRisk(p=3.0),
        GeometricMeanRisk(),
        WeightedSumRisk(weights=[0.25, 0.25, 0.5]),
    ],
)
def test_gradient_matches_finite_differences(risk):
    z = np.array([[1.2, 0.7, 2.5]])
    step = 1e-6

    numeric = np.array(
        [
            (risk(z + step * e) - risk(z - step * e))[0] / (2 * step)
            for e in np.eye(3)
        ]
    )

    np.testing.assert_allclose(risk.gradient(z)[0], numeric, rtol=1e-6)


def test_linear_weights():
    np.testing.assert_allclose(SiteRisk(index=1).linear_weights(3), [0, 1, 0])
    np.testing.assert_allclose(MeanRisk().linear_weights(4), [0.25] * 4)
    np.testing.assert_allclose(
        WeightedSumRisk(weights=[0.25, 0.75]).linear_weights(2), [0.25, 0.75]
    )


def test_capability_flags():
    assert SiteRisk.LINEAR and SiteRisk.THETA_ONE
    assert MeanRisk.LINEAR and MeanRisk.THETA_ONE
    assert not MaxRisk.LINEAR and not MaxRisk.DIFFERENTIABLE
    assert LpNormRisk.DIFFERENTIABLE and not LpNormRisk.THETA_ONE


def test_nonlinear_functional_has_no_linear_weights():
    with pytest.raises(ValueError, match="is not linear"):
        MaxRisk().linear_weights(3)


def test_max_is_not_differentiable():
    with pytest.raises(ValueError, match="not differentiable"):
        MaxRisk().gradient(Z)


def test_site_index_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        SiteRisk(index=3).validate_dimension(3)


def test_order_stat_rank_above_dimension():
    with pytest.raises(ValueError, match="exceeds 3 sites"):
        OrderStatRisk(k=4).validate_dimension(3)


def test_weighted_sum_length_must_match():
    with pytest.raises(ValueError, match="2 weights for 3 sites"):
        WeightedSumRisk(weights=[0.5, 0.5]).validate_dimension(3)


def test_unknown_parameter_rejected():
    with pytest.raises(ValueError, match="Parameters for 'mean' are not correct"):
        build_op("risk_functional", "mean", index=1)


def test_unknown_functional_rejected():
    with pytest.raises(ValueError, match="Unknown risk_functional 'median'"):
        build_op("risk_functional", "median")


def test_lp_norm_large_p_close_to_max():
    z = np.array([[1.0, 5.0, 2.0]])
    assert LpNormRisk(p=50.0)(z)[0] == pytest.approx(5.0, rel=1e-3)


def test_weighted_sum_weights_must_sum_to_one():
    with pytest.raises(ValueError, match="must sum to 1"):
        WeightedSumRisk(weights=[1.0, 2.0])
