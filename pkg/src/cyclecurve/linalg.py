"""Dense complex kernels: inner products, Gram-Schmidt, LU solves.

Vectors are 1-D complex ``numpy`` arrays, matrices 2-D ones. The inner
product is conjugate-linear in its first argument, so
``inner(w, r) * w`` is the component of ``r`` along a unit vector ``w``.
"""
from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import (
    ComplementExhausted,
    DegenerateCandidate,
    DimensionMismatch,
    NumericallySingular,
)

DEGENERATE_TOL = 1e-8
PIVOT_TOL = 1e-14
MAX_DRAWS = 8


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """``sum(conj(u) * v)``."""
    if u.shape != v.shape:
        raise DimensionMismatch(f"inner: shapes {u.shape} and {v.shape} differ")
    return complex(np.vdot(u, v))


def norm2(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def frobenius(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, "fro"))


def matmul(L: np.ndarray, R: np.ndarray) -> np.ndarray:
    if L.shape[-1] != R.shape[0]:
        raise DimensionMismatch(f"matmul: {L.shape} @ {R.shape}")
    return L @ R


def _as_columns(basis) -> list[np.ndarray]:
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        return [basis[:, j] for j in range(basis.shape[1])]
    return list(basis)


def mgs_project_orthonormal(candidate: np.ndarray, basis) -> np.ndarray:
    """Orthonormalize ``candidate`` against an orthonormal ``basis``.

    Modified Gram-Schmidt followed by one full reorthogonalization sweep.

    Raises
    ------
    DegenerateCandidate
        If what survives the projection is below ``1e-8`` of the input norm.
    """
    w = np.array(candidate, dtype=complex)
    cols = _as_columns(basis)
    scale = norm2(w)
    if scale == 0:
        raise DegenerateCandidate("candidate is the zero vector")
    w /= scale
    for _ in range(2):
        for q in cols:
            if q.shape != w.shape:
                raise DimensionMismatch(f"basis vector of shape {q.shape} vs candidate {w.shape}")
            w -= np.vdot(q, w) * q
    nrm = norm2(w)
    if nrm <= DEGENERATE_TOL:
        raise DegenerateCandidate(f"candidate lies in the span of the basis (residual {nrm:.3e})")
    return w / nrm


def random_unit_in_complement(basis, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Seeded random unit vector orthogonal to an orthonormal ``basis``.

    ``n`` is only needed when ``basis`` is empty.
    """
    cols = _as_columns(basis)
    if n is None:
        if not cols:
            raise DimensionMismatch("dimension unknown: pass n for an empty basis")
        n = cols[0].shape[0]
    if len(cols) >= n:
        raise ComplementExhausted(f"{len(cols)} basis vectors already span C^{n}")
    for _ in range(MAX_DRAWS):
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        try:
            return mgs_project_orthonormal(z, cols)
        except DegenerateCandidate:
            continue
    raise ComplementExhausted(f"no usable direction after {MAX_DRAWS} draws")


def _lu_factor(M):
    # exact zero pivots are reported through NumericallySingular instead
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        return scipy.linalg.lu_factor(M, check_finite=True)


def lu_solve(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``M X = B`` by LU with partial pivoting.

    Raises
    ------
    NumericallySingular
        If a pivot falls below ``1e-14 * ||M||_F``.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"lu_solve needs a square matrix, got {M.shape}")
    if B.shape[0] != M.shape[0]:
        raise DimensionMismatch(f"right-hand side has {B.shape[0]} rows, expected {M.shape[0]}")
    lu, piv = _lu_factor(M)
    pivots = np.abs(np.diag(lu))
    floor = PIVOT_TOL * frobenius(M)
    if pivots.min() <= floor:
        raise NumericallySingular(f"pivot {pivots.min():.3e} below {floor:.3e}")
    return scipy.linalg.lu_solve((lu, piv), B)


def smallest_pivot(M: np.ndarray) -> float:
    """Smallest |U_ii| of the partially pivoted LU factorization."""
    lu, _ = _lu_factor(M)
    return float(np.abs(np.diag(lu)).min())


def gram_pivot(vectors: Sequence[np.ndarray]) -> float:
    """Independence proxy: smallest LU pivot of the Gram matrix of the normalized vectors."""
    V = np.column_stack([v / norm2(v) for v in vectors])
    return smallest_pivot(V.conj().T @ V)
