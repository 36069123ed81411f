from pathlib import Path

import pytest
import yaml

import pareto_pipe.config.config_loaders as config_loaders
from pareto_pipe.config import CURRENT_SCHEMA_VERSION
from pareto_pipe.errors import ConfigError


@pytest.fixture
def config_dir(tmp_path):
    """
    Creates a config folder with a site file, a data file and a YAML config
    that references both by relative path.
    """
    (tmp_path / "sites.csv").write_text("id,x,y\na,0,0\nb,1,0\n")
    (tmp_path / "data.csv").write_text("a,b\n1,2\n")
    settings = {
        "general": {"analysis_name": "demo", "out_dir": str(tmp_path / "out")},
        "sites": {"path": "sites.csv"},
        "data": {"path": "data.csv"},
        "risk": {"type": "mean"},
    }
    (tmp_path / "config.yaml").write_text(yaml.safe_dump(settings))
    return tmp_path


def test_relative_paths_resolved_against_config_folder(config_dir):
    """
    Input paths in the YAML are relative to the file, not to the working
    directory, so a config can be run from anywhere.
    """
    config = config_loaders.load_config(config_dir / "config.yaml")

    assert Path(config.sites.path) == config_dir / "sites.csv"
    assert Path(config.data.path) == config_dir / "data.csv"


def test_overrides_replace_file_values(config_dir):
    """
    Dotted overrides (as produced by the command-line flags) win over the
    file; None values leave the file value in place.
    """
    config = config_loaders.load_config(
        config_dir / "config.yaml",
        {"general.seed": 42, "general.threads": None, "fit.u": 2.5},
    )

    assert config.general.seed == 42
    assert config.general.threads == 1
    assert config.fit.u == 2.5


def test_risk_override_replaces_section(config_dir):
    config = config_loaders.load_config(
        config_dir / "config.yaml", {"risk": {"type": "max"}}
    )
    assert config.build_risk().type_name == "max"


def test_no_config_file_gives_defaults():
    config = config_loaders.load_config(None)
    assert config.sites is None
    assert config.general.analysis_name == "run"


def test_missing_config_file_raises(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        config_loaders.load_config(tmp_path / "nope.yaml")


def test_non_mapping_config_raises(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- a\n- b\n")
    with pytest.raises(ConfigError, match="not a YAML mapping"):
        config_loaders.load_config(path)


def test_validation_error_is_readable(config_dir):
    """
    Pydantic errors are condensed into one line per offending field,
    prefixed by its dotted location.
    """
    with pytest.raises(ConfigError) as ei:
        config_loaders.load_config(
            config_dir / "config.yaml", {"margins.q": 1.5}
        )

    message = str(ei.value)
    assert f"schema v{CURRENT_SCHEMA_VERSION}" in message
    assert "margins.q" in message


def test_newer_schema_version_rejected(config_dir):
    path = config_dir / "config.yaml"
    settings = yaml.safe_load(path.read_text())
    settings["schema_version"] = CURRENT_SCHEMA_VERSION + 1
    path.write_text(yaml.safe_dump(settings))

    with pytest.raises(ConfigError, match="not supported"):
        config_loaders.load_config(path)


def test_dotted_helpers():
    settings = {"a": {"b": 1}}

    config_loaders.set_dotted(settings, "a.c.d", 5)

    assert config_loaders.get_dotted(settings, "a.c.d") == 5
    assert config_loaders.get_dotted(settings, "a.b") == 1
    assert config_loaders.get_dotted(settings, "x.y") is None


def test_prepare_directories(config_dir):
    config = config_loaders.load_config(config_dir / "config.yaml")

    config_loaders.prepare_directories(config)

    assert config.run_dir.is_dir()
    assert config.log_dir_path.is_dir()
