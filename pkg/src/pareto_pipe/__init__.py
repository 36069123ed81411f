try:
    from ._version import __version__
except ImportError:  # _version.py is generated at build time by setuptools_scm
    __version__ = "0.0.0+unknown"

from pareto_pipe.config.config_loaders import load_config
from pareto_pipe.datasets import make_example_data
from pareto_pipe.io.geometry import SiteSet, load_sites
from pareto_pipe.io.tables import DataMatrix, load_data
from pareto_pipe.models.inference import FitResult, fit
from pareto_pipe.models.rpareto import BrownResnickField, ParetoEpisode
from pareto_pipe.models.variogram import VariogramModel
from pareto_pipe.stages.dependence_fit.controller import (
    DependenceFitController,
)
from pareto_pipe.stages.diagnostics.controller import DiagnosticsController
from pareto_pipe.stages.lifting.controller import LiftingController
from pareto_pipe.stages.margin_transform.controller import (
    MarginTransformController,
)
from pareto_pipe.stages.simulation.controller import SimulationController

from . import ops

__all__ = [
    "__version__",
    "ops",
    "load_config",
    "make_example_data",
    "SiteSet",
    "load_sites",
    "DataMatrix",
    "load_data",
    "VariogramModel",
    "BrownResnickField",
    "ParetoEpisode",
    "FitResult",
    "fit",
    "SimulationController",
    "MarginTransformController",
    "DependenceFitController",
    "DiagnosticsController",
    "LiftingController",
]
