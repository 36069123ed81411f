from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from pareto_pipe.io.filesystem import ProvenanceHeader  # noqa: E402
from pareto_pipe.models.variogram import (  # noqa: E402
    VariogramModel,
    theoretical_chi,
)

# fixed ids inside the SVG so reruns are byte-identical
matplotlib.rcParams["svg.hashsalt"] = "pareto_pipe"


def plot_extremogram(
    table: pd.DataFrame,
    path: str | Path,
    header: ProvenanceHeader,
    model: VariogramModel | None = None,
) -> Path:
    """Scatter of the binned extremogram with the model curve on top.

    Args:
        table: Extremogram rows for one or more ``margp`` levels.
        path: SVG output path.
        header: Provenance header, stored as the SVG description.
        model: Fitted variogram, drawn as ``chi(h)`` when given.

    Returns:
        The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    levels = sorted(table["margp"].unique()) if not table.empty else []
    shades = np.linspace(0.35, 0.9, max(len(levels), 1))
    for level, shade in zip(levels, shades, strict=False):
        rows = table[table["margp"] == level]
        ax.scatter(
            rows["h"],
            rows["chi"],
            color=plt.cm.Blues(shade),
            s=18,
            label=f"empirical, q={level:g}",
        )
    if model is not None:
        h_max = float(table["h"].max()) if not table.empty else 1.0
        h = np.linspace(0.0, h_max, 200)
        ax.plot(h, theoretical_chi(model, h), color="black", label="model")
    ax.set_xlabel("distance h")
    ax.set_ylabel("chi")
    ax.set_ylim(0.0, 1.05)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(
        path,
        format="svg",
        metadata={"Date": None, "Description": header.line().strip()},
    )
    plt.close(fig)
    return path
