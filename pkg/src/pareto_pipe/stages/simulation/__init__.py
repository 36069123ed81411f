from pareto_pipe.stages.simulation.controller import (
    SimulationController,
    SimulationResult,
)

__all__ = ["SimulationController", "SimulationResult"]
