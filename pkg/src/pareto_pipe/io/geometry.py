from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from scipy.spatial.distance import pdist, squareform

from pareto_pipe.errors import DataFormatError, DuplicateSiteIdError
from pareto_pipe.io.filesystem import (
    ProvenanceHeader,
    parse_numeric,
    read_csv_text,
    write_csv,
)

#: Mean Earth radius in km used by the equirectangular projection.
EARTH_RADIUS_KM = 6371.0088

SITE_COLUMNS = ["id", "x", "y"]


@dataclass(frozen=True, eq=False)
class SiteSet:
    """Observation locations and their planar coordinates.

    Attributes:
        ids: Site identifiers, unique.
        coords: ``(D, 2)`` array of planar coordinates (e.g. km).
    """

    ids: tuple[str, ...]
    coords: np.ndarray

    def __post_init__(self) -> None:
        coords = np.array(self.coords, dtype=float)
        ids = tuple(str(i) for i in self.ids)

        if len(ids) < 1:
            raise ValueError("A site set needs at least one site.")
        if coords.shape != (len(ids), 2):
            raise ValueError(
                f"Expected coordinates of shape ({len(ids)}, 2), "
                f"got {coords.shape}."
            )
        if not np.all(np.isfinite(coords)):
            raise ValueError("Site coordinates must be finite.")

        seen: set[str] = set()
        for site_id in ids:
            if site_id in seen:
                msg = f"Duplicate site id '{site_id}'."
                logger.error(msg)
                raise DuplicateSiteIdError(msg)
            seen.add(site_id)

        coords.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "coords", coords)

    @property
    def n_sites(self) -> int:
        return len(self.ids)

    def index(self, site_id: str) -> int:
        """Returns the position of ``site_id``."""
        try:
            return self.ids.index(site_id)
        except ValueError as exc:
            raise KeyError(f"Unknown site id '{site_id}'.") from exc

    @classmethod
    def grid(cls, nx: int, ny: int, spacing: float = 1.0) -> SiteSet:
        """Builds a regular ``nx`` by ``ny`` grid, x varying fastest.

        Site ``k`` sits at ``(spacing * (k % nx), spacing * (k // nx))``
        and is named ``s{k}``.
        """
        if nx < 1 or ny < 1 or spacing <= 0:
            raise ValueError(
                f"Invalid grid nx={nx}, ny={ny}, spacing={spacing}."
            )
        xs, ys = np.meshgrid(np.arange(nx), np.arange(ny))
        coords = spacing * np.column_stack([xs.ravel(), ys.ravel()])
        return cls(tuple(f"s{k}" for k in range(nx * ny)), coords)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SiteSet):
            return NotImplemented
        return self.ids == other.ids and np.array_equal(
            self.coords, other.coords
        )

    def __hash__(self) -> int:
        return hash((self.ids, self.coords.tobytes()))

    def __repr__(self) -> str:
        return f"SiteSet(D={self.n_sites})"


def project_lonlat(lonlat: np.ndarray) -> np.ndarray:
    """Equirectangular projection of lon/lat degrees to km.

    The reference parallel is the mean latitude of the points.

    Args:
        lonlat: ``(D, 2)`` array of longitude, latitude in degrees.

    Returns:
        ``(D, 2)`` array of planar coordinates in km.
    """
    lonlat = np.asarray(lonlat, dtype=float)
    lon = np.radians(lonlat[:, 0])
    lat = np.radians(lonlat[:, 1])
    lat0 = lat.mean()
    return EARTH_RADIUS_KM * np.column_stack([lon * np.cos(lat0), lat])


def load_sites(path: str | Path, lonlat: bool = False) -> SiteSet:
    """Reads a site file with header ``id,x,y``.

    Args:
        path: CSV file, rows kept in file order.
        lonlat: If True, ``x``/``y`` are longitude/latitude in degrees and
            are projected to km.

    Returns:
        The site set.

    Raises:
        DataFormatError: On a wrong header or a malformed row (with its line
            number).
        DuplicateSiteIdError: If an id appears twice.
    """
    df, lines = read_csv_text(path)
    if list(df.columns) != SITE_COLUMNS:
        msg = (
            f"{path}: expected header {','.join(SITE_COLUMNS)}, "
            f"got {','.join(map(str, df.columns))}."
        )
        logger.error(msg)
        raise DataFormatError(msg)

    ids = df["id"].str.strip()
    empty = ids == ""
    if empty.any():
        row = int(empty.to_numpy().nonzero()[0][0])
        msg = f"{path}: line {lines[row]}: empty site id."
        logger.error(msg)
        raise DataFormatError(msg)

    coords = parse_numeric(df, ["x", "y"], lines, path, allow_missing=False)
    xy = coords.to_numpy()
    if lonlat:
        xy = project_lonlat(xy)
        logger.info(f"Projected {len(xy)} lon/lat sites to km.")

    sites = SiteSet(tuple(ids), xy)
    logger.info(f"Loaded {sites.n_sites} sites from {path}")
    return sites


def save_sites(
    sites: SiteSet, path: str | Path, header: ProvenanceHeader
) -> Path:
    """Writes a site set as ``id,x,y``."""
    df = pd.DataFrame(
        {"id": sites.ids, "x": sites.coords[:, 0], "y": sites.coords[:, 1]}
    )
    return write_csv(df, path, header)


def pairwise_distances(sites: SiteSet) -> np.ndarray:
    """Euclidean distance matrix of the sites.

    Returns:
        Symmetric ``(D, D)`` matrix with zero diagonal.
    """
    return squareform(pdist(sites.coords))
