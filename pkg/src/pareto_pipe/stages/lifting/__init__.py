from pareto_pipe.stages.lifting.controller import LiftingController

__all__ = ["LiftingController"]
