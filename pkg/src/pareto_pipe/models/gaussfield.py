from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.linalg import LinAlgError, cholesky

from pareto_pipe.errors import NotPSDError
from pareto_pipe.models.variogram import AnchoredSigma

#: Jitter ladder, relative to the mean diagonal of the matrix.
JITTER_START = 1e-12
JITTER_MAX = 1e-6


@dataclass(frozen=True)
class CholFactor:
    """Lower Cholesky factor of an anchored increment covariance.

    Attributes:
        lower: ``(m, m)`` lower-triangular matrix with
            ``lower @ lower.T == matrix + jitter * I`` on the nondegenerate
            coordinates. Rows of zero-variance coordinates are zero.
        jitter: Absolute diagonal jitter that was added (0 if none).
    """

    lower: np.ndarray
    jitter: float = 0.0

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def _cholesky_with_jitter(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky factor of ``matrix``, adding a growing jitter on failure."""
    try:
        return cholesky(matrix, lower=True), 0.0
    except LinAlgError:
        pass

    scale = max(float(np.trace(matrix)) / matrix.shape[0], 1e-300)
    eps = JITTER_START
    eye = np.eye(matrix.shape[0])
    while eps <= JITTER_MAX * (1 + 1e-9):
        jitter = eps * scale
        try:
            lower = cholesky(matrix + jitter * eye, lower=True)
        except LinAlgError:
            eps *= 10
            continue
        logger.debug(f"Cholesky succeeded with jitter {jitter:.3g}")
        return lower, jitter

    msg = (
        f"Matrix of size {matrix.shape[0]} is not positive semidefinite "
        f"even with a relative jitter of {JITTER_MAX:g}."
    )
    logger.error(msg)
    raise NotPSDError(msg)


def factor(sigma: AnchoredSigma | np.ndarray) -> CholFactor:
    """Factors an anchored covariance matrix.

    Coordinates with exactly zero variance (sites collocated with the
    anchor) are kept out of the factorization and get zero rows, so their
    increments are exactly zero.

    Args:
        sigma: The anchored covariance, or a bare symmetric matrix.

    Returns:
        The Cholesky factor and the applied jitter.

    Raises:
        ValueError: If the matrix is not square and symmetric.
        NotPSDError: If factorization fails at the maximal jitter.
    """
    matrix = np.asarray(
        sigma.matrix if isinstance(sigma, AnchoredSigma) else sigma,
        dtype=float,
    )
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Expected a square matrix, got {matrix.shape}.")
    tol = 1e-10 * max(1.0, float(np.abs(matrix).max(initial=0.0)))
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=tol):
        raise ValueError("Covariance matrix must be symmetric.")

    m = matrix.shape[0]
    lower = np.zeros((m, m))
    live = np.flatnonzero(np.diag(matrix) > 0)
    if live.size == 0:
        return CholFactor(lower=lower, jitter=0.0)

    sub, jitter = _cholesky_with_jitter(matrix[np.ix_(live, live)])
    lower[np.ix_(live, live)] = sub
    return CholFactor(lower=lower, jitter=jitter)


def sample_anchored_increments(
    chol: CholFactor,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Draws ``W = L N`` with ``N`` standard normal.

    Args:
        chol: Factor of the increment covariance.
        rng: Random generator.
        size: Number of vectors; ``None`` returns a single vector.

    Returns:
        Array of shape ``(m,)`` or ``(size, m)``.
    """
    if size is None:
        return chol.lower @ rng.standard_normal(chol.dim)
    return rng.standard_normal((size, chol.dim)) @ chol.lower.T
