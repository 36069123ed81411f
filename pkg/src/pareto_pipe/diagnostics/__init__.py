from pareto_pipe.diagnostics.extremogram import (
    chi_comparison,
    empirical_extremogram,
    pairwise_chi,
)
from pareto_pipe.diagnostics.pot_stability import (
    PotStabilityReport,
    pot_stability_report,
)

__all__ = [
    "PotStabilityReport",
    "chi_comparison",
    "empirical_extremogram",
    "pairwise_chi",
    "pot_stability_report",
]
