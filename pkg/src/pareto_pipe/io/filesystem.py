from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import yaml
from loguru import logger

from pareto_pipe.errors import DataFormatError

#: Sentinel used for missing cells in every CSV read or written.
MISSING_SENTINEL = "NA"

#: Float format giving lossless round trips of float64 values.
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class ProvenanceHeader:
    """Comment line written at the top of every output file.

    Attributes:
        config_hash: Short hash of the effective run configuration.
        seed: Master seed of the run.
    """

    config_hash: str
    seed: int

    def line(self) -> str:
        """Returns the header as a ``#`` comment line (with newline)."""
        return f"# pareto_pipe config_hash={self.config_hash} seed={self.seed}\n"


def data_line_numbers(path: str | Path) -> list[int]:
    """Returns the 1-based file line of the header and of every data row.

    Blank lines and ``#`` comment lines are skipped, exactly like
    ``pandas.read_csv(comment="#", skip_blank_lines=True)`` does, so that
    row ``k`` of the parsed frame lives on line ``numbers[k + 1]``.

    Args:
        path: Path to a text file.

    Returns:
        Line numbers, header first.
    """
    text = Path(path).read_text(encoding="utf-8")
    return [
        i + 1
        for i, line in enumerate(text.splitlines())
        if line.strip() and not line.lstrip().startswith("#")
    ]


def read_csv_text(path: str | Path) -> tuple[pd.DataFrame, list[int]]:
    """Reads a CSV file with every cell kept as a string.

    Args:
        path: Path to the CSV file.

    Returns:
        The frame of string cells and the line number of each row.

    Raises:
        FileNotFoundError: If the file does not exist.
        DataFormatError: If the file cannot be tokenized (ragged rows etc.).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"File '{path}' does not exist.")

    try:
        df = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            comment="#",
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except pd.errors.ParserError as exc:
        msg = f"Could not parse '{path}': {exc}"
        logger.error(msg)
        raise DataFormatError(msg) from exc
    except pd.errors.EmptyDataError as exc:
        msg = f"File '{path}' is empty."
        logger.error(msg)
        raise DataFormatError(msg) from exc

    lines = data_line_numbers(path)
    return df, lines[1:]


def parse_numeric(
    df: pd.DataFrame,
    columns: list[str],
    lines: list[int],
    path: str | Path,
    allow_missing: bool,
) -> pd.DataFrame:
    """Converts string columns to float, reporting the first bad cell.

    Args:
        df: Frame of string cells (from :func:`read_csv_text`).
        columns: Columns to convert.
        lines: File line of each row.
        path: File the frame came from, for messages.
        allow_missing: Whether the ``NA`` sentinel is accepted.

    Returns:
        A float frame with ``NaN`` for missing cells.

    Raises:
        DataFormatError: On a non-numeric cell (or a missing cell when not
            allowed), with its line number.
    """
    out = {}
    for col in columns:
        raw = df[col].str.strip()
        values = pd.to_numeric(raw, errors="coerce")
        missing = raw == MISSING_SENTINEL
        bad = values.isna() & ~missing
        if not allow_missing:
            bad |= missing
        if bad.any():
            row = int(bad.to_numpy().nonzero()[0][0])
            msg = (
                f"{path}: line {lines[row]}: column '{col}' has "
                f"non-numeric value {df[col].iloc[row]!r}."
            )
            logger.error(msg)
            raise DataFormatError(msg)
        # float() rounds correctly; pandas' fast parser can be 1 ulp off
        out[col] = np.asarray(raw.where(~missing), dtype=float)
    return pd.DataFrame(out, index=df.index)


def write_csv(
    df: pd.DataFrame, path: str | Path, header: ProvenanceHeader
) -> Path:
    """Writes a frame behind the provenance comment line.

    Args:
        df: Frame to write.
        path: Output path; parent directories are created.
        header: Provenance header.

    Returns:
        The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header.line())
        df.to_csv(
            fh,
            index=False,
            float_format=FLOAT_FORMAT,
            na_rep=MISSING_SENTINEL,
            lineterminator="\n",
        )
    logger.debug(f"Wrote {len(df)} rows to {path}")
    return path


def write_yaml(
    payload: dict[str, Any], path: str | Path, header: ProvenanceHeader
) -> Path:
    """Writes a mapping as YAML behind the provenance comment line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header.line())
        yaml.safe_dump(payload, fh, sort_keys=True)
    return path


def read_yaml(path: str | Path) -> dict[str, Any]:
    """Reads a YAML mapping.

    Raises:
        FileNotFoundError: If the file does not exist.
        DataFormatError: If the file does not hold a mapping.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"File '{path}' does not exist.")
    with open(path, encoding="utf-8") as fh:
        payload = yaml.safe_load(fh)
    if not isinstance(payload, dict):
        raise DataFormatError(f"'{path}' does not contain a YAML mapping.")
    return payload
