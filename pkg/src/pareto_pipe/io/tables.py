from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from pareto_pipe.errors import DataFormatError
from pareto_pipe.io.filesystem import (
    ProvenanceHeader,
    parse_numeric,
    read_csv_text,
    write_csv,
)
from pareto_pipe.io.geometry import SiteSet

TIME_COLUMN = "time"


@dataclass(frozen=True)
class DataMatrix:
    """Observation matrix, one row per time replicate, one column per site.

    Attributes:
        values: ``(n, D)`` float matrix, ``NaN`` marks a missing cell.
        site_ids: Column site ids, in site-set order.
        time: Optional row labels.
    """

    values: np.ndarray
    site_ids: tuple[str, ...]
    time: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1:
            raise DataFormatError(
                f"Data must be a matrix with at least one row, got shape "
                f"{values.shape}."
            )
        if values.shape[1] != len(self.site_ids):
            raise DataFormatError(
                f"{values.shape[1]} columns for {len(self.site_ids)} site ids."
            )
        if self.time is not None and len(self.time) != values.shape[0]:
            raise DataFormatError("Time labels do not match the row count.")
        empty = np.all(np.isnan(values), axis=0)
        if np.any(empty):
            bad = [self.site_ids[j] for j in np.flatnonzero(empty)]
            msg = f"Columns without any observation: {bad}"
            logger.error(msg)
            raise DataFormatError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "site_ids", tuple(self.site_ids))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def complete_rows(self) -> np.ndarray:
        """Indices of the rows without missing cells."""
        return np.flatnonzero(~np.any(np.isnan(self.values), axis=1))


def load_data(path: str | Path, sites: SiteSet) -> DataMatrix:
    """Reads an observation table and aligns it with ``sites``.

    The header holds the site ids, optionally preceded by a time column
    (named ``time`` or left blank). ``NA`` marks a missing cell.

    Args:
        path: CSV file.
        sites: Site set giving the column order.

    Returns:
        The data matrix, columns in site-set order.

    Raises:
        DataFormatError: On unknown or missing site columns, non-numeric
            cells (with their line number), or an entirely missing column.
    """
    df, lines = read_csv_text(path)
    columns = [str(c) for c in df.columns]

    time: tuple[str, ...] | None = None
    first = columns[0]
    if first == TIME_COLUMN or first == "" or first.startswith("Unnamed: 0"):
        time = tuple(df[df.columns[0]].str.strip())
        columns = columns[1:]
        df = df.iloc[:, 1:]
        df.columns = columns

    unknown = [c for c in columns if c not in sites.ids]
    if unknown:
        msg = f"{path}: unknown site column(s) {unknown}."
        logger.error(msg)
        raise DataFormatError(msg)
    missing = [s for s in sites.ids if s not in columns]
    if missing:
        msg = f"{path}: no column for site(s) {missing}."
        logger.error(msg)
        raise DataFormatError(msg)

    numeric = parse_numeric(df, list(sites.ids), lines, path, allow_missing=True)
    data = DataMatrix(numeric.to_numpy(), sites.ids, time)

    n_missing = int(np.isnan(data.values).sum())
    if n_missing:
        logger.warning(f"{path}: {n_missing} missing cell(s).")
    logger.info(
        f"Loaded {data.n_rows} rows x {len(sites.ids)} sites from {path}"
    )
    return data


def data_frame(data: DataMatrix) -> pd.DataFrame:
    """The matrix as a frame, time column first when present."""
    df = pd.DataFrame(data.values, columns=list(data.site_ids))
    if data.time is not None:
        df.insert(0, TIME_COLUMN, list(data.time))
    return df


def save_data(
    data: DataMatrix, path: str | Path, header: ProvenanceHeader
) -> Path:
    """Writes a data matrix in the format read by :func:`load_data`."""
    return write_csv(data_frame(data), path, header)
