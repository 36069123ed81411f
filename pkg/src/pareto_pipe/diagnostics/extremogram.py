from __future__ import annotations

import numpy as np
import pandas as pd
from loguru import logger
from scipy.stats import rankdata

from pareto_pipe.io.geometry import SiteSet, pairwise_distances
from pareto_pipe.io.tables import DataMatrix
from pareto_pipe.models.variogram import VariogramModel, theoretical_chi

#: Columns of an extremogram table.
EXTREMOGRAM_COLUMNS = ["h", "h_center", "chi", "margp", "n_pairs"]

#: Columns of a model comparison table.
COMPARISON_COLUMNS = [
    "h",
    "h_center",
    "chi",
    "chi_model",
    "margp",
    "n_pairs",
]

#: Exceedances per site below which a warning is logged.
MIN_SITE_EXCEEDANCES = 20

#: Type alias: a frame with :data:`EXTREMOGRAM_COLUMNS`.
ExtremogramTable = pd.DataFrame


def exceedance_indicators(values: np.ndarray, margp: float) -> np.ndarray:
    """Rank-based exceedances of each column's ``margp`` quantile.

    An observation exceeds when its plotting position ``rank / (n + 1)`` is
    above ``margp``; ties share their average rank.
    """
    n = values.shape[0]
    levels = rankdata(values, method="average", axis=0) / (n + 1.0)
    return levels > margp


def pairwise_chi(data: DataMatrix | np.ndarray, margp: float) -> np.ndarray:
    """Symmetrized empirical tail dependence of every site pair.

    ``chi[i, j]`` averages ``P(X_i exceeds | X_j exceeds)`` and
    ``P(X_j exceeds | X_i exceeds)``; the diagonal is 1. Pairs involving a
    site without exceedances are ``NaN``.

    Args:
        data: Observation matrix; rows with missing cells are dropped.
        margp: Marginal quantile level in (0, 1).

    Returns:
        ``(D, D)`` matrix.
    """
    if not 0 < margp < 1:
        raise ValueError(f"margp must lie in (0, 1), got {margp}.")
    if isinstance(data, DataMatrix):
        values = data.values
    else:
        values = np.asarray(data, dtype=float)
    complete = ~np.any(np.isnan(values), axis=1)
    if not np.all(complete):
        logger.warning(
            f"Extremogram ignores {int((~complete).sum())} incomplete row(s)."
        )
    values = values[complete]

    exceed = exceedance_indicators(values, margp).astype(float)
    joint = exceed.T @ exceed
    counts = np.diag(joint).copy()
    low = counts < MIN_SITE_EXCEEDANCES
    if np.any(low):
        logger.warning(
            f"{int(low.sum())} site(s) have fewer than "
            f"{MIN_SITE_EXCEEDANCES} exceedances at margp={margp}."
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        chi = 0.5 * (joint / counts[None, :] + joint / counts[:, None])
    chi[counts == 0, :] = np.nan
    chi[:, counts == 0] = np.nan
    np.fill_diagonal(chi, 1.0)
    return chi


def empirical_extremogram(
    data: DataMatrix | np.ndarray,
    sites: SiteSet,
    margp: float,
    n_bins: int = 15,
) -> ExtremogramTable:
    """Binned empirical extremogram.

    Site pairs are grouped into ``n_bins`` equal-width distance bins; each
    nonempty bin reports the mean pair distance ``h``, the bin midpoint
    ``h_center``, the mean ``chi`` and the number of pairs.

    Args:
        data: Observation matrix, raw or standardized.
        sites: Site set of the columns.
        margp: Marginal quantile level.
        n_bins: Number of distance bins.

    Returns:
        Extremogram table sorted by distance.
    """
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}.")
    chi = pairwise_chi(data, margp)
    dist = pairwise_distances(sites)
    iu, ju = np.triu_indices(sites.n_sites, k=1)
    pair_h = dist[iu, ju]
    pair_chi = chi[iu, ju]

    skipped = np.isnan(pair_chi)
    if np.any(skipped):
        logger.warning(
            f"Skipping {int(skipped.sum())} pair(s) involving sites without "
            f"exceedances."
        )
    pair_h, pair_chi = pair_h[~skipped], pair_chi[~skipped]
    if pair_h.size == 0:
        return pd.DataFrame(columns=EXTREMOGRAM_COLUMNS)

    edges = np.linspace(0.0, pair_h.max(), n_bins + 1)
    which = np.searchsorted(edges, pair_h, side="right") - 1
    which = np.clip(which, 0, n_bins - 1)
    df = (
        pd.DataFrame({"bin": which, "h": pair_h, "chi": pair_chi})
        .groupby("bin", sort=True)
        .agg(h=("h", "mean"), chi=("chi", "mean"), n_pairs=("chi", "size"))
        .reset_index()
    )
    bins = df["bin"].to_numpy()
    df["h_center"] = 0.5 * (edges[bins] + edges[bins + 1])
    df["margp"] = margp
    logger.info(
        f"Extremogram at margp={margp}: {pair_h.size} pairs in {len(df)} bins."
    )
    return df[EXTREMOGRAM_COLUMNS]


def chi_comparison(
    model: VariogramModel, table: ExtremogramTable
) -> pd.DataFrame:
    """Adds the model tail dependence at each bin midpoint."""
    if table.empty:
        return pd.DataFrame(columns=COMPARISON_COLUMNS)
    out = table.copy()
    out["chi_model"] = theoretical_chi(
        model, out["h_center"].to_numpy(dtype=float)
    )
    return out[COMPARISON_COLUMNS]
