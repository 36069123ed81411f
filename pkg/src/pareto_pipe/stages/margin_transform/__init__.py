from pareto_pipe.stages.margin_transform.controller import (
    MarginTransformController,
)

__all__ = ["MarginTransformController"]
