from pareto_pipe.stages.diagnostics.controller import (
    DiagnosticsController,
    DiagnosticsResult,
)

__all__ = ["DiagnosticsController", "DiagnosticsResult"]
