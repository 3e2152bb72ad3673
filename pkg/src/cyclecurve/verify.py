"""Certificate checks for constructed problems.

A problem is accepted when restarted GMRES reproduces the prescribed curve,
the residual stays flat inside each cycle, the basis representation has the
expected block structure, its companion polynomials vanish at the prescribed
eigenvalues, and the similarity identity ``A S = S [A]_S`` holds. The spectrum
is certified by that conjunction, never by an eigensolver.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg
from .constructor import (
    TAIL_GAMMA,
    WIDE_RANGE,
    ConstructedProblem,
    OperatorAssembly,
    companion_template,
    expected_couplings,
    similarity_residual,
)
from .errors import CycleCurveError
from .gmres import ConvergenceHistory, restarted_gmres
from .model import NONCONVERGENT, STAGNATING, STANDARD, ZEROTAIL, MonicPolynomial, partition_spectrum


@dataclass(frozen=True)
class Tolerances:
    curve: float = 1e-8        # times f(0)
    inner: float = 1e-8        # times f(0)
    similarity: float = 1e-10
    spectrum: float = 1e-10
    termination: float = 1e-8  # times f(0)


@dataclass
class VerificationReport:
    prescribed: list[float]
    observed: list[float]
    curve_errors: list[float]
    curve_thresholds: list[float]
    inner_stagnation_errors: list[float]
    similarity_residual: float
    spectrum_residuals: list[float]
    structure_ok: bool
    cond_estimate: float
    independence: float
    termination: dict
    wide_range: bool
    stopped_at: int | None
    checks: dict = field(default_factory=dict)
    passed: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _expected_template(assembly: OperatorAssembly) -> np.ndarray:
    couplings = expected_couplings(
        assembly.blockpolys, assembly.tail_kind, assembly.gamma, assembly.coupling_scales
    )
    return companion_template(assembly.blockpolys, couplings)


def check_structure(assembly: OperatorAssembly) -> bool:
    """``[A]_S`` equals its companion template entry for entry.

    The template is rebuilt from the block polynomials and the tail kind, so
    a stray nonzero anywhere, a wrong coupling or a last column that differs
    from the polynomial's alphas all make this false.
    """
    B = assembly.opInS
    if B.shape != (assembly.n, assembly.n):
        return False
    if sum(p.degree for p in assembly.blockpolys) != assembly.n:
        return False
    if assembly.tail_kind == TAIL_GAMMA and (assembly.gamma is None or assembly.gamma == -1):
        return False
    return bool(np.array_equal(B, _expected_template(assembly)))


def block_polynomials_from_matrix(assembly: OperatorAssembly) -> list[MonicPolynomial]:
    """Read each block's polynomial off the last column of its companion block."""
    B = assembly.opInS
    polys = []
    for start, d in zip(assembly.block_starts(), assembly.block_sizes):
        alphas = np.array(B[start : start + d, start + d - 1])
        polys.append(MonicPolynomial(alphas))
    return polys


def spectrum_residuals(problem: ConstructedProblem) -> list[float]:
    """``|p_k(lambda)| / prod(1 + |mu|)`` for every prescribed eigenvalue."""
    assembly = problem.assembly
    blocks = len(assembly.block_sizes) - 1
    try:
        parts = partition_spectrum(problem.spectrum, problem.schedule, blocks)
    except CycleCurveError:
        return [float("inf")] * problem.spectrum.n
    if [len(p) for p in parts] != list(assembly.block_sizes):
        return [float("inf")] * problem.spectrum.n
    out = []
    for poly, part in zip(block_polynomials_from_matrix(assembly), parts):
        scale = float(np.prod([1.0 + abs(mu) for mu in part]))
        out.extend(abs(poly(lam)) / scale for lam in part)
    return out


def _inner_errors(problem: ConstructedProblem, hist: ConvergenceHistory) -> list[float]:
    curve = problem.curve
    errs = []
    for k in range(1, curve.q + 1):
        if k > len(hist.cycles):
            break
        rec = hist.cycles[k - 1]
        stagnant = curve.kind == STAGNATING and k > curve.s
        steps = rec.inner_norms if stagnant else rec.inner_norms[: rec.m - 1]
        target = curve[k - 1]
        errs.append(max((abs(v - target) for v in steps), default=0.0))
    return errs


def _termination(problem: ConstructedProblem, hist: ConvergenceHistory, tol: Tolerances) -> dict:
    q = problem.q
    f0 = problem.curve[0]
    m_next = problem.schedule.restart_at(q + 1)
    fits = problem.assembly.block_sizes[-1] <= m_next
    observed = hist.cycles[q].end_norm if len(hist.cycles) > q else None
    out = {"observed": observed, "restart": m_next, "tail_fits": fits, "expect": None, "ok": None}
    if problem.curve.kind == ZEROTAIL or observed is None:
        return out
    if problem.curve.kind == STAGNATING:
        out["expect"] = "stagnant"
        out["ok"] = abs(observed - problem.curve[q]) <= tol.curve * f0
    elif problem.variant.kind == NONCONVERGENT:
        out["expect"] = "nonzero"
        out["ok"] = observed > tol.termination * f0
    elif problem.variant.kind == STANDARD and fits:
        out["expect"] = "zero"
        out["ok"] = observed <= tol.termination * f0
    return out


def verify_problem(
    problem: ConstructedProblem, tolerances: Tolerances | None = None
) -> tuple[VerificationReport, ConvergenceHistory]:
    """Run GMRES for ``q`` cycles plus one probe cycle and check every certificate.

    Failures are reported through ``passed`` and ``checks``; nothing is raised.
    The GMRES history is returned alongside the report.
    """
    tol = tolerances or Tolerances()
    curve = problem.curve
    q, f0 = curve.q, curve[0]
    restarts = [problem.schedule.restart_at(k) for k in range(1, q + 2)]
    hist = restarted_gmres(problem.A, problem.b, problem.x0, restarts, q + 1)

    observed = []
    last = hist.initial_norm
    for k in range(1, q + 1):
        if k <= len(hist.cycles):
            last = hist.cycles[k - 1].end_norm
        elif hist.stopped_at is None:
            last = float("nan")
        observed.append(last)
    prescribed = list(curve.values[1:])
    wide = curve.kind != ZEROTAIL and curve.dynamic_range > WIDE_RANGE
    thresholds = [tol.curve * (fk if wide else f0) for fk in prescribed]
    curve_errors = [abs(o - p) for o, p in zip(observed, prescribed)]
    inner = _inner_errors(problem, hist)

    S, B = problem.assembly.matS, problem.assembly.opInS
    sim = similarity_residual(problem.A, S, B)
    spec = spectrum_residuals(problem)
    structure = check_structure(problem.assembly)
    try:
        Sinv = linalg.lu_solve(S, np.eye(S.shape[0], dtype=complex))
        cond = float(np.linalg.norm(S, 1) * np.linalg.norm(Sinv, 1))
    except CycleCurveError:
        cond = float("inf")
    n_sbar = problem.n - problem.assembly.t
    independence = linalg.gram_pivot([S[:, j] for j in range(n_sbar)])
    term = _termination(problem, hist, tol)

    checks = {
        "curve": all(e <= t for e, t in zip(curve_errors, thresholds)),
        "inner_stagnation": len(inner) == q and all(e <= tol.inner * f0 for e in inner),
        "similarity": sim <= tol.similarity,
        "spectrum": all(r <= tol.spectrum for r in spec),
        "structure": structure,
        "termination": term["ok"] is not False,
    }
    return VerificationReport(
        prescribed=prescribed,
        observed=observed,
        curve_errors=curve_errors,
        curve_thresholds=thresholds,
        inner_stagnation_errors=inner,
        similarity_residual=sim,
        spectrum_residuals=spec,
        structure_ok=structure,
        cond_estimate=cond,
        independence=independence,
        termination=term,
        wide_range=wide,
        stopped_at=hist.stopped_at,
        checks=checks,
        passed=all(checks.values()),
    ), hist
