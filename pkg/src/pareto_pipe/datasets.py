"""Synthetic example data for the pareto_pipe quickstart.

:func:`make_example_data` writes a dataset shaped like a wave-height
hindcast: 100 sites scattered over a 100 km square, 1895 daily observations
per site, heavy-ish right tails and Brown-Resnick extremal dependence. The
data are generated locally from a seed, so the example needs no download and
is identical on every machine.

Every row is a mean-risk r-Pareto episode pushed through a generalized
marginal map, floored at a small positive height. A few cells are blanked to
exercise the missing-value handling.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import yaml
from loguru import logger

from pareto_pipe.io.filesystem import ProvenanceHeader
from pareto_pipe.io.geometry import SiteSet, save_sites
from pareto_pipe.io.tables import DataMatrix, save_data
from pareto_pipe.models.rpareto import (
    BrownResnickField,
    GevMarginalMap,
    generalized_transform,
    simulate_ensemble,
)
from pareto_pipe.models.variogram import VariogramModel
from pareto_pipe.ops.risk_functionals import MeanRisk
from pareto_pipe.rng import stream

#: Size of the example dataset.
EXAMPLE_N_SITES = 100
EXAMPLE_N_ROWS = 1895

#: Side of the square the sites are scattered over, in km.
EXAMPLE_EXTENT_KM = 100.0

#: Dependence model the example data are drawn from.
EXAMPLE_VARIOGRAM = VariogramModel(family="power", beta=15.0, alpha=1.2)

#: Smallest height written, in m.
HEIGHT_FLOOR = 0.05

#: Share of cells left missing.
MISSING_SHARE = 0.001


def _example_header(params: dict[str, Any]) -> ProvenanceHeader:
    canonical = json.dumps(params, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
    return ProvenanceHeader(digest, params["seed"])


def example_config(analysis_name: str = "example") -> dict[str, Any]:
    """Run configuration matching the files written by make_example_data."""
    return {
        "schema_version": 1,
        "general": {
            "analysis_name": analysis_name,
            "out_dir": "results",
            "seed": 20240101,
            "threads": 1,
        },
        "sites": {"path": "sites.csv"},
        "data": {"path": "data.csv"},
        "vario": EXAMPLE_VARIOGRAM.model_dump(),
        "risk": {"type": "mean"},
        "margins": {"q": 0.95, "mode": "gpd"},
        "simulate": {"n_episodes": 1000},
        "fit": {
            "objective": "gradscore",
            "u_quantile": 0.95,
            "init_beta": 10.0,
            "init_alpha": 1.0,
            "weights": {"type": "risk", "parameters": {"u_w": 1.0}},
        },
        "diagnose": {"thresholds": [0.95, 0.98], "n_bins": 15},
        "lift": {"n_episodes": 1000},
    }


def make_example_data(
    out_dir: str | Path,
    seed: int = 0,
    n_sites: int = EXAMPLE_N_SITES,
    n_rows: int = EXAMPLE_N_ROWS,
    threads: int = 1,
) -> Path:
    """Writes ``sites.csv``, ``data.csv`` and ``config.yaml`` to ``out_dir``.

    Args:
        out_dir: Destination folder, created if needed.
        seed: Seed of the site layout, the episodes and the missing cells.
        n_sites: Number of sites.
        n_rows: Number of daily observations.
        threads: Worker threads of the simulation.

    Returns:
        Path to the written ``config.yaml``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = {"seed": seed, "n_sites": n_sites, "n_rows": n_rows}
    header = _example_header(params)

    layout = stream(seed, 0)
    coords = np.round(
        layout.uniform(0.0, EXAMPLE_EXTENT_KM, size=(n_sites, 2)), 3
    )
    sites = SiteSet(tuple(f"P{k:03d}" for k in range(n_sites)), coords)

    # episode k uses stream (seed + 1, k); stream (seed, .) is the layout
    brf = BrownResnickField(EXAMPLE_VARIOGRAM, sites)
    episodes, _ = simulate_ensemble(
        brf, MeanRisk(), n_rows, seed + 1, threads=threads
    )
    gev_map = GevMarginalMap(
        mu=np.round(layout.uniform(1.5, 3.0, n_sites), 3),
        sigma=np.round(layout.uniform(0.4, 0.8, n_sites), 3),
        xi=np.round(layout.uniform(-0.1, 0.1, n_sites), 3),
    )
    heights = generalized_transform(
        np.stack([e.Z for e in episodes]), gev_map
    )
    heights = np.maximum(heights, HEIGHT_FLOOR)

    holes = layout.random(heights.shape) < MISSING_SHARE
    heights[holes] = np.nan

    time = pd.date_range("1994-01-01", periods=n_rows, freq="D")
    data = DataMatrix(heights, sites.ids, tuple(time.strftime("%Y-%m-%d")))

    save_sites(sites, out_dir / "sites.csv", header)
    save_data(data, out_dir / "data.csv", header)
    config_path = out_dir / "config.yaml"
    with open(config_path, "w", encoding="utf-8") as fh:
        fh.write(header.line())
        yaml.safe_dump(example_config(), fh, sort_keys=False)

    logger.success(
        f"Example data written to {out_dir}: {n_sites} sites, {n_rows} rows, "
        f"{int(holes.sum())} missing cells."
    )
    return config_path
