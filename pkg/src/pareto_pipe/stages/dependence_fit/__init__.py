from pareto_pipe.stages.dependence_fit.controller import (
    DependenceFitController,
)

__all__ = ["DependenceFitController"]
