from pareto_pipe.config.config_loaders import load_config
from pareto_pipe.config.config_schema import CURRENT_SCHEMA_VERSION, RunConfig

__all__ = ["CURRENT_SCHEMA_VERSION", "RunConfig", "load_config"]
