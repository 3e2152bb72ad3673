"""Restarted GMRES with per-step residual bookkeeping.

This is the verification oracle for constructed problems, so it records every
inner residual norm (from the Givens recurrence) and recomputes the true
residual ``b - A x`` at the end of each cycle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ZeroResidual

# h_{j+1,j} below this fraction of ||A v_j|| counts as an invariant subspace
BREAKDOWN_TOL = 1e-12


@dataclass
class ArnoldiResult:
    V: np.ndarray
    H: np.ndarray
    breakdown: bool = False

    @property
    def steps(self) -> int:
        return self.H.shape[1]


@dataclass
class CycleRecord:
    m: int
    inner_norms: list[float]
    end_residual: np.ndarray
    end_norm: float
    estimated_norm: float
    breakdown: bool = False


@dataclass
class ConvergenceHistory:
    cycles: list[CycleRecord] = field(default_factory=list)
    x_final: np.ndarray | None = None
    initial_norm: float = 0.0
    stopped_at: int | None = None

    @property
    def end_norms(self) -> list[float]:
        return [c.end_norm for c in self.cycles]

    @property
    def residuals(self) -> list[np.ndarray]:
        return [c.end_residual for c in self.cycles]


def arnoldi(A: np.ndarray, r: np.ndarray, m: int) -> ArnoldiResult:
    """Orthonormal basis of ``K_{m+1}(A, r)`` and the ``(m+1) x m`` Hessenberg matrix.

    Modified Gram-Schmidt with one reorthogonalization pass. On a happy
    breakdown at step ``j`` the result is truncated: ``V`` has ``j`` columns
    and ``H`` is ``(j+1) x j`` with a zero last row, so that
    ``A V[:, :j] = V H[:j]`` still holds.
    """
    beta = float(np.linalg.norm(r))
    if beta == 0:
        raise ZeroResidual("Arnoldi started from the zero vector")
    n = r.shape[0]
    V = np.zeros((n, m + 1), dtype=complex)
    H = np.zeros((m + 1, m), dtype=complex)
    V[:, 0] = r / beta
    for j in range(m):
        w = A @ V[:, j]
        scale = float(np.linalg.norm(w))
        for _ in range(2):
            for i in range(j + 1):
                h = np.vdot(V[:, i], w)
                H[i, j] += h
                w -= h * V[:, i]
        h_next = float(np.linalg.norm(w))
        if h_next <= BREAKDOWN_TOL * scale:
            H[j + 1, j] = 0
            return ArnoldiResult(V[:, : j + 1], H[: j + 2, : j + 1], True)
        H[j + 1, j] = h_next
        V[:, j + 1] = w / h_next
    return ArnoldiResult(V, H, False)


def _givens(a: complex, b: complex) -> tuple[float, complex]:
    """``(c, s)`` with ``[[c, s], [-conj(s), c]] @ [a, b] = [rho, 0]``."""
    rho = np.hypot(abs(a), abs(b))
    if rho == 0:
        return 1.0, 0j
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    return abs(a) / rho, (a / abs(a)) * np.conj(b) / rho


def gmres_cycle(A: np.ndarray, x: np.ndarray, b: np.ndarray, m: int) -> tuple[np.ndarray, CycleRecord]:
    """One GMRES(m) cycle from ``x``.

    The Hessenberg least-squares problem is triangularized column by column
    with Givens rotations; ``inner_norms[j-1]`` is the recurrence residual
    after step ``j``.
    """
    if m < 1:
        raise ValueError(f"restart must be at least 1, got {m}")
    r = b - A @ x
    beta = float(np.linalg.norm(r))
    arn = arnoldi(A, r, m)
    k = arn.steps
    R = arn.H.copy()
    g = np.zeros(k + 1, dtype=complex)
    g[0] = beta
    rotations = []
    inner = []
    for j in range(k):
        for i, (c, s) in enumerate(rotations):
            hi, hn = R[i, j], R[i + 1, j]
            R[i, j] = c * hi + s * hn
            R[i + 1, j] = -np.conj(s) * hi + c * hn
        c, s = _givens(R[j, j], R[j + 1, j])
        rotations.append((c, s))
        R[j, j] = c * R[j, j] + s * R[j + 1, j]
        R[j + 1, j] = 0
        g[j + 1] = -np.conj(s) * g[j]
        g[j] = c * g[j]
        inner.append(float(abs(g[j + 1])))
    y = scipy.linalg.solve_triangular(R[:k, :k], g[:k])
    x_new = x + arn.V[:, :k] @ y
    r_new = b - A @ x_new
    record = CycleRecord(
        m=m,
        inner_norms=inner,
        end_residual=r_new,
        end_norm=float(np.linalg.norm(r_new)),
        estimated_norm=inner[-1],
        breakdown=arn.breakdown,
    )
    return x_new, record


def restarted_gmres(
    A: np.ndarray,
    b: np.ndarray,
    x0: np.ndarray | None,
    schedule: int | Sequence[int],
    cycles: int,
    abstol: float | None = None,
) -> ConvergenceHistory:
    """Run ``cycles`` GMRES cycles with restarts taken cyclically from ``schedule``.

    Stops early once the true residual norm drops to ``abstol``
    (default ``1e-14 * ||b||``), recording the stop cycle.
    """
    restarts = [schedule] if isinstance(schedule, (int, np.integer)) else list(schedule)
    x = np.zeros_like(b, dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    if abstol is None:
        abstol = 1e-14 * float(np.linalg.norm(b))
    hist = ConvergenceHistory(initial_norm=float(np.linalg.norm(b - A @ x)))
    if hist.initial_norm <= abstol:
        hist.stopped_at = 0
        hist.x_final = x
        return hist
    for k in range(1, cycles + 1):
        m = int(restarts[(k - 1) % len(restarts)])
        try:
            x, rec = gmres_cycle(A, x, b, m)
        except ZeroResidual:
            hist.stopped_at = k - 1
            break
        hist.cycles.append(rec)
        if rec.end_norm <= abstol:
            hist.stopped_at = k
            break
    hist.x_final = x
    return hist
