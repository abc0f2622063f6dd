"""Dense linear-algebra primitives.

Matrices and vectors are plain float64 numpy arrays. The helpers here add
the shape checks, the power-iteration estimate of ``lambda_max(A^T A)`` that
defines the admissible parameter region, seeded Gaussian sampling, and the
plain-text matrix/vector formats used by the command line.
"""

import logging

import numpy as np

from .errors import ConvergenceError, DimensionError

__all__ = [
    "as_matrix",
    "as_vector",
    "matvec",
    "rmatvec",
    "spectral_norm_sq",
    "make_rng",
    "normal_sample",
    "read_matrix",
    "write_matrix",
    "read_vector",
    "write_vector",
]

logger = logging.getLogger(__name__)

# Decimal format that round-trips float64 exactly.
_FLOAT_FMT = "%.17g"


def as_matrix(A):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_vector(x, dim=None):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionError(f"expected vector of dim {dim}, got dim {x.shape[0]}")
    return x


def matvec(A, x):
    """Return ``A @ x`` after checking that ``A.cols == x.dim``."""
    A = np.asarray(A)
    x = np.asarray(x)
    if A.ndim != 2 or x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise DimensionError(
            f"matvec: matrix has {A.shape[-1]} cols but vector has dim {x.shape[0]}"
        )
    return A @ x


def rmatvec(A, z):
    """Return ``A.T @ z`` after checking that ``A.rows == z.dim``."""
    A = np.asarray(A)
    z = np.asarray(z)
    if A.ndim != 2 or z.ndim != 1 or A.shape[0] != z.shape[0]:
        raise DimensionError(
            f"rmatvec: matrix has {A.shape[0]} rows but vector has dim {z.shape[0]}"
        )
    return z @ A


def spectral_norm_sq(A, tol=1e-10, max_iter=5000):
    """Estimate ``lambda_max(A^T A)`` by power iteration on ``x -> A^T(A x)``.

    The iteration starts from the normalized all-ones vector so the result
    is deterministic. Should that start lie in the null space of ``A`` the
    iteration restarts from a fixed-seed Gaussian vector.

    Parameters
    ----------
    A : array_like, shape (m, n)
        Nonzero matrix.
    tol : float
        Stop once the relative change of the Rayleigh quotient drops below
        ``tol``.
    max_iter : int
        Iteration cap.

    Returns
    -------
    float
        The estimate of the largest eigenvalue of ``A^T A``.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` iterations pass without meeting ``tol``. The last
        estimate is attached as ``err.last``.
    """
    A = as_matrix(A)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    n = A.shape[1]

    x = np.ones(n) / np.sqrt(n)
    if np.linalg.norm(A @ x) == 0.0:
        x = np.random.default_rng(0).standard_normal(n)
        x /= np.linalg.norm(x)
        if np.linalg.norm(A @ x) == 0.0:
            raise ValueError("spectral_norm_sq requires a nonzero matrix")

    estimate = 0.0
    for it in range(max_iter):
        y = A.T @ (A @ x)
        new_estimate = float(x @ y)
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            raise ValueError("spectral_norm_sq requires a nonzero matrix")
        x = y / norm_y
        if it > 0 and abs(new_estimate - estimate) <= tol * abs(new_estimate):
            logger.debug("power iteration converged after %d steps", it + 1)
            return new_estimate
        estimate = new_estimate
    raise ConvergenceError(
        f"power iteration did not reach tol={tol:g} in {max_iter} iterations "
        f"(last estimate {estimate:.12g})",
        last=estimate,
    )


def make_rng(seed):
    """Return the package's seeded generator.

    This is numpy's ``Generator`` on the PCG64 bit generator; Gaussian draws
    come from its ziggurat sampler. Streams are reproducible for a fixed
    seed and numpy version.
    """
    return np.random.Generator(np.random.PCG64(int(seed)))


def normal_sample(rng, n, mean=0.0, std=1.0):
    """Draw ``n`` independent ``N(mean, std**2)`` values from ``rng``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if std < 0:
        raise ValueError("std must be non-negative")
    if std == 0:
        return np.full(n, float(mean))
    return mean + std * rng.standard_normal(n)


def write_matrix(path, A):
    """Write ``A`` as a header line ``"m n"`` followed by one row per line."""
    A = as_matrix(A)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{A.shape[0]} {A.shape[1]}\n")
        np.savetxt(fh, A, fmt=_FLOAT_FMT, delimiter=" ")


def read_matrix(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: first line must be 'm n'")
        m, n = int(header[0]), int(header[1])
        values = np.array(fh.read().split(), dtype=np.float64)
    if values.size != m * n:
        raise DimensionError(f"{path}: header says {m}x{n} but found {values.size} values")
    return as_matrix(values.reshape(m, n))


def write_vector(path, x):
    """Write ``x`` as a header line ``"n"`` followed by one value per line."""
    x = as_vector(x)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{x.shape[0]}\n")
        np.savetxt(fh, x, fmt=_FLOAT_FMT)


def read_vector(path):
    with open(path, encoding="utf-8") as fh:
        n = int(fh.readline().strip())
        values = np.array(fh.read().split(), dtype=np.float64)
    if values.size != n:
        raise DimensionError(f"{path}: header says dim {n} but found {values.size} values")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: non-finite entries")
    return values
