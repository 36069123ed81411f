"""Reading and writing of the pipeline's model artifacts.

Every file starts with the provenance comment line of the run that wrote it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from loguru import logger

from pareto_pipe.errors import DataFormatError
from pareto_pipe.io.filesystem import (
    ProvenanceHeader,
    parse_numeric,
    read_csv_text,
    read_yaml,
    write_csv,
    write_yaml,
)
from pareto_pipe.io.geometry import SiteSet
from pareto_pipe.models.inference import FitResult
from pareto_pipe.models.margins import MarginalModel
from pareto_pipe.models.rpareto import Origin, ParetoEpisode

EPISODE_COLUMNS = ["episode", "R", "time_index"]
MARGIN_COLUMNS = ["id", "q", "u", "sigma", "xi"]
BODY_COLUMNS = ["id", "value"]


def sidecar_path(path: str | Path) -> Path:
    """``episodes.csv`` -> ``episodes.meta.yaml``."""
    path = Path(path)
    return path.with_name(f"{path.stem}.meta.yaml")


def body_path(path: str | Path) -> Path:
    """``margins.csv`` -> ``margins_body.csv``."""
    path = Path(path)
    return path.with_name(f"{path.stem}_body{path.suffix}")


####################################################################
# Episodes
####################################################################


def episodes_frame(
    episodes: list[ParetoEpisode], site_ids: tuple[str, ...]
) -> pd.DataFrame:
    """One row per episode: index, radius, source row and the angle ``Y``.

    ``Z`` is not stored; it is ``R * Y`` on reload.
    """
    y = (
        np.stack([e.Y for e in episodes])
        if episodes
        else np.empty((0, len(site_ids)))
    )
    df = pd.DataFrame(y, columns=list(site_ids))
    time_index = pd.array(
        [e.time_index for e in episodes], dtype="Int64"
    )
    df.insert(0, "time_index", time_index)
    df.insert(0, "R", [e.R for e in episodes])
    df.insert(0, "episode", np.arange(len(episodes)))
    return df


def save_episodes(
    episodes: list[ParetoEpisode],
    sites: SiteSet,
    path: str | Path,
    header: ProvenanceHeader,
    metadata: dict[str, Any] | None = None,
) -> Path:
    """Writes episodes and their YAML sidecar.

    Args:
        episodes: Episodes to write.
        sites: Site set of the fields.
        path: CSV path; the sidecar goes next to it.
        header: Provenance header.
        metadata: Extra sidecar entries (risk, variogram, acceptance...).
    """
    write_csv(episodes_frame(episodes, sites.ids), path, header)
    meta = {
        "n_episodes": len(episodes),
        "n_sites": sites.n_sites,
        "origin": (
            episodes[0].origin.value if episodes else Origin.PARAMETRIC.value
        ),
        **(metadata or {}),
    }
    write_yaml(meta, sidecar_path(path), header)
    return Path(path)


def load_episodes(path: str | Path, sites: SiteSet) -> list[ParetoEpisode]:
    """Reads episodes written by :func:`save_episodes`.

    Raises:
        DataFormatError: If the columns do not match ``sites`` or a cell is
            not numeric.
        ValueError: If the file holds no episode.
    """
    df, lines = read_csv_text(path)
    expected = EPISODE_COLUMNS + list(sites.ids)
    if [str(c) for c in df.columns] != expected:
        msg = (
            f"{path}: expected columns {expected[:5]}... for "
            f"{sites.n_sites} sites, got {list(df.columns)[:5]}..."
        )
        logger.error(msg)
        raise DataFormatError(msg)
    if df.empty:
        msg = f"{path}: no episodes."
        logger.error(msg)
        raise ValueError(msg)

    numeric = parse_numeric(
        df, ["R", *sites.ids], lines, path, allow_missing=False
    )
    time_index = parse_numeric(
        df, ["time_index"], lines, path, allow_missing=True
    )["time_index"]

    origin = Origin.PARAMETRIC
    meta_file = sidecar_path(path)
    if meta_file.is_file():
        origin = Origin(read_yaml(meta_file).get("origin", origin.value))

    y = numeric[list(sites.ids)].to_numpy()
    radii = numeric["R"].to_numpy()
    episodes = [
        ParetoEpisode(
            float(radii[k]),
            y[k],
            origin,
            None if np.isnan(time_index.iloc[k]) else int(time_index.iloc[k]),
        )
        for k in range(len(df))
    ]
    logger.info(f"Loaded {len(episodes)} episodes from {path}")
    return episodes


def save_fields(
    fields: np.ndarray,
    sites: SiteSet,
    path: str | Path,
    header: ProvenanceHeader,
) -> Path:
    """Writes a stack of fields (e.g. generalized episodes), one per row."""
    df = pd.DataFrame(np.atleast_2d(fields), columns=list(sites.ids))
    df.insert(0, "episode", np.arange(len(df)))
    return write_csv(df, path, header)


####################################################################
# Margins
####################################################################


def save_margins(
    margins: list[MarginalModel], path: str | Path, header: ProvenanceHeader
) -> Path:
    """Writes the per-site parameters and, beside them, the site samples.

    The samples are needed to rebuild the empirical body of each margin.
    """
    params = pd.DataFrame(
        [
            {"id": m.site_id, "q": m.q, "u": m.u, "sigma": m.sigma, "xi": m.xi}
            for m in margins
        ],
        columns=MARGIN_COLUMNS,
    )
    body = pd.DataFrame(
        {
            "id": np.concatenate(
                [np.repeat(m.site_id, m.n) for m in margins]
            ),
            "value": np.concatenate([m.sample for m in margins]),
        }
    )
    write_csv(params, path, header)
    write_csv(body, body_path(path), header)
    return Path(path)


def load_margins(path: str | Path) -> list[MarginalModel]:
    """Reads margins written by :func:`save_margins`, in file order."""
    df, lines = read_csv_text(path)
    if [str(c) for c in df.columns] != MARGIN_COLUMNS:
        raise DataFormatError(f"{path}: expected columns {MARGIN_COLUMNS}.")
    params = parse_numeric(
        df, ["q", "u", "sigma", "xi"], lines, path, allow_missing=True
    )

    body_df, body_lines = read_csv_text(body_path(path))
    if [str(c) for c in body_df.columns] != BODY_COLUMNS:
        raise DataFormatError(
            f"{body_path(path)}: expected columns {BODY_COLUMNS}."
        )
    values = parse_numeric(
        body_df, ["value"], body_lines, body_path(path), allow_missing=False
    )["value"]
    samples = {
        site_id: group.to_numpy()
        for site_id, group in values.groupby(body_df["id"].str.strip())
    }

    margins = []
    for k, site_id in enumerate(df["id"].str.strip()):
        if site_id not in samples:
            raise DataFormatError(f"{body_path(path)}: no sample for {site_id}.")
        sigma, xi = params["sigma"].iloc[k], params["xi"].iloc[k]
        margins.append(
            MarginalModel(
                site_id=site_id,
                q=float(params["q"].iloc[k]),
                u=float(params["u"].iloc[k]),
                sigma=None if np.isnan(sigma) else float(sigma),
                xi=None if np.isnan(xi) else float(xi),
                sample=samples[site_id],
            )
        )
    return margins


####################################################################
# Fit results
####################################################################


def save_fit_result(
    result: FitResult, path: str | Path, header: ProvenanceHeader
) -> tuple[Path, Path]:
    """Writes the fit as YAML (with the trace) and as a one-row CSV."""
    path = Path(path)
    yaml_path = path.with_suffix(".yaml")
    csv_path = path.with_suffix(".csv")
    write_yaml(result.model_dump(mode="json"), yaml_path, header)
    row = pd.DataFrame([result.model_dump(mode="json", exclude={"trace"})])
    write_csv(row, csv_path, header)
    return yaml_path, csv_path


def load_fit_result(path: str | Path) -> FitResult:
    """Reads a fit written by :func:`save_fit_result` (YAML file)."""
    return FitResult.model_validate(read_yaml(Path(path).with_suffix(".yaml")))
