from pathlib import Path

import pytest
from pydantic import ValidationError


def base_cfg(**overrides):
    """Minimal valid run config; callers can override whole sections."""
    cfg = {
        "general": {
            "analysis_name": "A",
            "out_dir": "/work/results",
            "seed": 3,
        },
        "sites": {"grid": {"nx": 3, "ny": 2, "spacing": 1.0}},
        "vario": {"family": "power", "beta": 1.0, "alpha": 1.0},
        "risk": {"type": "max"},
    }
    # shallow updates only where provided
    for k, v in overrides.items():
        cfg[k] = v
    return cfg


def test_resolves_paths_and_defaults():
    """
    Derived paths come from out_dir and analysis_name; every optional section
    gets its defaults.
    """
    from pareto_pipe.config.config_schema import RunConfig

    model = RunConfig.model_validate(base_cfg())

    base = Path("/work/results") / "A"
    assert model.run_dir == base
    assert model.log_dir_path == base / "logs"
    assert model.margins.q == 0.95
    assert model.fit.objective == "gradscore"
    assert model.simulate.n_episodes == 1000
    assert model.diagnose.thresholds == [0.95, 0.98]


def test_explicit_log_dir_wins():
    from pareto_pipe.config.config_schema import RunConfig

    cfg = base_cfg()
    cfg["general"]["log_dir"] = "/var/log/pp"

    assert RunConfig.model_validate(cfg).log_dir_path == Path("/var/log/pp")


def test_risk_spec_builds_registered_functional():
    """The 'type' field selects the registered functional and its params."""
    from pareto_pipe.config.config_schema import RunConfig
    from pareto_pipe.ops.risk_functionals import OrderStatRisk

    cfg = base_cfg(risk={"type": "order_stat", "parameters": {"k": 2}})
    risk = RunConfig.model_validate(cfg).build_risk()

    assert isinstance(risk, OrderStatRisk)
    assert risk.params.k == 2


def test_unknown_risk_type_rejected():
    from pareto_pipe.config.config_schema import RunConfig

    with pytest.raises(ValidationError):
        RunConfig.model_validate(base_cfg(risk={"type": "median"}))


def test_risk_parameters_validated_at_load():
    from pareto_pipe.config.config_schema import RunConfig

    cfg = base_cfg(risk={"type": "site", "parameters": {"index": -1}})
    with pytest.raises(ValidationError):
        RunConfig.model_validate(cfg)


def test_missing_risk_defaults_to_first_site():
    from pareto_pipe.config.config_schema import RunConfig
    from pareto_pipe.ops.risk_functionals import SiteRisk

    cfg = base_cfg()
    del cfg["risk"]
    risk = RunConfig.model_validate(cfg).build_risk()

    assert isinstance(risk, SiteRisk)
    assert risk.params.index == 0


def test_weights_spec():
    from pareto_pipe.config.config_schema import RunConfig
    from pareto_pipe.ops.weight_functions import RiskWeights

    cfg = base_cfg(fit={"weights": {"type": "risk", "parameters": {"u_w": 2}}})
    weights = RunConfig.model_validate(cfg).fit.build_weights()

    assert isinstance(weights, RiskWeights)
    assert weights.params.u_w == 2.0


def test_sites_need_exactly_one_source():
    from pareto_pipe.config.config_schema import RunConfig

    with pytest.raises(ValidationError, match="exactly one"):
        RunConfig.model_validate(base_cfg(sites={}))


def test_missing_input_file_rejected(tmp_path):
    from pareto_pipe.config.config_schema import RunConfig

    cfg = base_cfg(data={"path": str(tmp_path / "absent.csv")})
    with pytest.raises(ValidationError, match="do not exist"):
        RunConfig.model_validate(cfg)


def test_power_shape_bound_in_vario():
    from pareto_pipe.config.config_schema import RunConfig

    cfg = base_cfg(vario={"family": "power", "beta": 1.0, "alpha": 2.0})
    with pytest.raises(ValidationError, match=r"\(0, 2\)"):
        RunConfig.model_validate(cfg)


@pytest.mark.parametrize(
    ("section", "payload"),
    [
        ("margins", {"q": 1.0}),
        ("margins", {"per_site_q": {"s0": 1.5}}),
        ("diagnose", {"thresholds": []}),
        ("general", {"seed": -1}),
        ("general", {"threads": 0}),
        ("simulate", {"n_episodes": 0}),
        ("fit", {"objective": "mle"}),
        ("lift", {"alpha": 0}),
    ],
)
def test_invalid_values_rejected(section, payload):
    from pareto_pipe.config.config_schema import RunConfig

    with pytest.raises(ValidationError):
        RunConfig.model_validate(base_cfg(**{section: payload}))


def test_unknown_keys_rejected():
    from pareto_pipe.config.config_schema import RunConfig

    with pytest.raises(ValidationError):
        RunConfig.model_validate(base_cfg(extra_section={}))


###############################################################################
# config hash


def test_hash_ignores_run_location_and_threads():
    """Worker count, output folder and log location do not change the
    outputs."""
    from pareto_pipe.config.config_schema import RunConfig

    a = base_cfg()
    b = base_cfg()
    b["general"] = {
        **a["general"],
        "threads": 8,
        "out_dir": "/elsewhere",
        "log_dir": "/tmp/logs",
    }

    hash_a = RunConfig.model_validate(a).config_hash()
    hash_b = RunConfig.model_validate(b).config_hash()

    assert hash_a == hash_b
    assert len(hash_a) == 16


def test_hash_changes_with_seed():
    from pareto_pipe.config.config_schema import RunConfig

    a = base_cfg()
    b = base_cfg()
    b["general"] = {**a["general"], "seed": 4}

    assert (
        RunConfig.model_validate(a).config_hash()
        != RunConfig.model_validate(b).config_hash()
    )
