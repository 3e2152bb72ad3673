"""Build a matrix on which GMRES(m) follows a prescribed cycle-convergence curve.

The pipeline has three stages:

1. :func:`build_scaffold` (and its stagnation / zero-tail siblings) chooses the
   residuals ``r_k`` and the orthonormal Krylov residual bases ``W^(k)`` so that
   each cycle keeps the residual flat for ``m_k - 1`` steps and then cuts it to
   ``f(k)`` on the last step.
2. :func:`assemble_operator` completes the independent set to a basis ``S``
   and writes the operator in that basis: a block lower triangular matrix with
   companion blocks carrying the prescribed eigenvalues.
3. :func:`similarity_transform` maps it back to the canonical basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .errors import (
    CurveNotDecreasing,
    GammaForbidden,
    NumericallySingular,
    SizeMismatch,
    ValidationError,
    VariantMismatch,
)
from .model import (
    DECREASING,
    NONCONVERGENT,
    STAGNATING,
    STAGNATION,
    STANDARD,
    ZEROTAIL,
    ConvergenceCurve,
    MonicPolynomial,
    RestartSchedule,
    SpectrumSpec,
    VariantConfig,
    partition_spectrum,
    poly_from_roots,
    validate_curve,
)

# what occupies the last slot of the independent set
TAIL_RESIDUAL = "residual"      # r_q
TAIL_STAGNATION = "stagnation"  # w_m^(s+1) + r_s
TAIL_GAMMA = "gamma"            # r_q + gamma r_{q-1}
TAIL_FRESH = "fresh"            # unit z replacing r_q = 0

R0_MODES = ("e1", "random")

SIMILARITY_TOL = 1e-10
# beyond this f(0)/f(q) ratio the curve is checked relative to f(k)
WIDE_RANGE = 1e12


@dataclass(frozen=True)
class KrylovScaffold:
    """Residuals, Krylov residual bases and the independent set they span.

    ``residuals`` holds ``r_0..r_c`` and ``wsets`` the full orthonormal sets
    ``W^(1)..W^(c)``, where ``c`` is the number of chained cycles (``q``, or
    ``s + 1`` for a stagnating curve). ``span_basis`` is an orthonormal basis
    of ``span(sbar)``, kept so the completion vectors can be drawn from the
    complement.
    """

    residuals: tuple[np.ndarray, ...]
    wsets: tuple[tuple[np.ndarray, ...], ...]
    angles: tuple[float, ...]
    sbar: tuple[np.ndarray, ...]
    tailvector: np.ndarray
    tail_kind: str
    block_sizes: tuple[int, ...]
    span_basis: tuple[np.ndarray, ...]
    gamma: complex | None = None

    @property
    def n(self) -> int:
        return self.tailvector.shape[0]

    @property
    def cycles(self) -> int:
        return len(self.block_sizes)

    def independence(self) -> float:
        return linalg.gram_pivot(self.sbar)


@dataclass(frozen=True)
class OperatorAssembly:
    matS: np.ndarray
    opInS: np.ndarray
    blockpolys: tuple[MonicPolynomial, ...]
    t: int
    block_sizes: tuple[int, ...]
    couplings: tuple[complex, ...]
    tail_kind: str
    gamma: complex | None = None
    coupling_scales: tuple[float, ...] = ()

    @property
    def n(self) -> int:
        return self.matS.shape[0]

    def block_starts(self) -> list[int]:
        return [int(x) for x in np.concatenate(([0], np.cumsum(self.block_sizes)[:-1]))]


@dataclass(frozen=True)
class ConstructedProblem:
    A: np.ndarray
    b: np.ndarray
    x0: np.ndarray
    r0: np.ndarray
    assembly: OperatorAssembly
    scaffold: KrylovScaffold | None
    curve: ConvergenceCurve
    schedule: RestartSchedule
    spectrum: SpectrumSpec
    variant: VariantConfig
    seed: int
    r0_mode: str = "e1"
    unit_residuals: bool = False

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.curve.q


def _check_r0(curve: ConvergenceCurve, schedule: RestartSchedule, r0: np.ndarray) -> None:
    if r0.shape != (schedule.n,):
        raise SizeMismatch(f"r0 has shape {r0.shape}, expected ({schedule.n},)")
    if schedule.q < curve.q:
        raise SizeMismatch(f"schedule covers {schedule.q} cycles, curve needs {curve.q}")
    if not math.isclose(linalg.norm2(r0), curve[0], rel_tol=1e-12):
        raise ValidationError(f"||r0|| = {linalg.norm2(r0)} differs from f(0) = {curve[0]}")


def _chain(values, schedule, r0, rng, upto):
    """Strictly decreasing cycles ``1..upto``; the last one may end at zero."""
    n = r0.shape[0]
    residuals = [np.array(r0, dtype=complex)]
    span = [residuals[0] / values[0]]
    sbar = [residuals[0]]
    wsets, angles = [], []
    for k in range(1, upto + 1):
        m = schedule[k - 1]
        prev, fp, fk = residuals[-1], values[k - 1], values[k]
        W = []
        for _ in range(m - 1):
            w = linalg.random_unit_in_complement(span, rng, n)
            W.append(w)
            span.append(w)
        sbar.extend(W)
        cos = math.sqrt((fp - fk) * (fp + fk)) / fp
        sin = fk / fp
        if fk == 0:
            W.append(prev / fp)
            r = np.zeros(n, dtype=complex)
        else:
            y = linalg.random_unit_in_complement(span, rng, n)
            span.append(y)
            W.append(prev / fp * cos + y * sin)
            # closed form of prev - <w, prev> w; avoids cancellation when fk << fp
            r = sin * (prev * sin - fp * cos * y)
        wsets.append(tuple(W))
        angles.append(math.acos(min(cos, 1.0)))
        residuals.append(r)
        if k < upto:
            sbar.append(r)
    return residuals, wsets, angles, sbar, span


def build_scaffold(
    curve: ConvergenceCurve,
    schedule: RestartSchedule,
    r0: np.ndarray,
    rng: np.random.Generator,
    gamma: complex | None = None,
) -> KrylovScaffold:
    """Scaffold for a strictly decreasing positive curve.

    With ``gamma`` the final slot holds ``r_q + gamma * r_{q-1}`` instead of
    ``r_q``, which breaks the exact convergence at cycle ``q + 1``.
    """
    if curve.kind != DECREASING:
        raise CurveNotDecreasing(f"build_scaffold needs a strictly decreasing curve, got {curve.kind}")
    _check_r0(curve, schedule, r0)
    q = curve.q
    residuals, wsets, angles, sbar, span = _chain(curve.values, schedule, r0, rng, q)
    if gamma is None:
        tail, kind = residuals[q], TAIL_RESIDUAL
    else:
        gamma = complex(gamma)
        if gamma == -1:
            raise GammaForbidden("gamma = -1")
        tail, kind = residuals[q] + gamma * residuals[q - 1], TAIL_GAMMA
    sbar.append(tail)
    return KrylovScaffold(
        tuple(residuals), tuple(wsets), tuple(angles), tuple(sbar), tail, kind,
        tuple(schedule.cycles[:q]), tuple(span), gamma,
    )


def build_scaffold_stagnation(
    curve: ConvergenceCurve, schedule: RestartSchedule, r0: np.ndarray, rng: np.random.Generator
) -> KrylovScaffold:
    """Decrease through cycle ``s``, then make cycle ``s + 1`` see nothing of ``r_s``.

    The whole of ``W^(s+1)`` is drawn orthogonal to everything so far, so the
    cycle cannot reduce the residual. ``w_m^(s+1) + r_s`` takes the slot a new
    residual would have occupied.
    """
    if curve.kind != STAGNATING:
        raise VariantMismatch(f"stagnation scaffold needs a stagnating curve, got {curve.kind}")
    _check_r0(curve, schedule, r0)
    s = curve.s
    n = r0.shape[0]
    residuals, wsets, angles, sbar, span = _chain(curve.values, schedule, r0, rng, s)
    r_s = residuals[s]
    sbar.append(r_s)
    W = []
    for _ in range(schedule[s]):
        w = linalg.random_unit_in_complement(span, rng, n)
        W.append(w)
        span.append(w)
    sbar.extend(W[:-1])
    tail = W[-1] + r_s
    sbar.append(tail)
    wsets.append(tuple(W))
    angles.append(math.pi / 2)
    residuals.append(r_s.copy())
    return KrylovScaffold(
        tuple(residuals), tuple(wsets), tuple(angles), tuple(sbar), tail, TAIL_STAGNATION,
        tuple(schedule.cycles[: s + 1]), tuple(span),
    )


def build_scaffold_zerotail(
    curve: ConvergenceCurve, schedule: RestartSchedule, r0: np.ndarray, rng: np.random.Generator
) -> KrylovScaffold:
    """Scaffold for a curve ending in ``f(q) = 0``.

    Cycle ``q`` uses ``cos psi = 1``: the last basis vector is ``r_{q-1}``
    itself and ``r_q = 0``. A fresh complement vector fills the final slot.
    """
    if curve.kind != ZEROTAIL:
        raise VariantMismatch(f"zero-tail scaffold needs f(q) = 0, got {curve.kind}")
    _check_r0(curve, schedule, r0)
    q = curve.q
    n = r0.shape[0]
    residuals, wsets, angles, sbar, span = _chain(curve.values, schedule, r0, rng, q)
    z = linalg.random_unit_in_complement(span, rng, n)
    span.append(z)
    sbar.append(z)
    return KrylovScaffold(
        tuple(residuals), tuple(wsets), tuple(angles), tuple(sbar), z, TAIL_FRESH,
        tuple(schedule.cycles[:q]), tuple(span),
    )


def coupling_for(alpha0: complex, tail_kind: str, last: bool, gamma: complex | None = None) -> complex:
    """Entry linking one companion block to the next one in the basis representation."""
    if not last or tail_kind in (TAIL_RESIDUAL, TAIL_STAGNATION):
        return -alpha0
    if tail_kind == TAIL_GAMMA:
        return -alpha0 / (1 + gamma)
    # r_q = 0: the coefficient multiplies a zero vector
    return 0j


def expected_couplings(
    blockpolys: Sequence[MonicPolynomial],
    tail_kind: str,
    gamma: complex | None = None,
    scales: Sequence[float] | None = None,
) -> tuple[complex, ...]:
    c = len(blockpolys) - 1
    if scales is None or len(scales) == 0:
        scales = [1.0] * c
    return tuple(
        coupling_for(p.alphas[0], tail_kind, k == c - 1, gamma) * scales[k]
        for k, p in enumerate(blockpolys[:-1])
    )


def lead_norm_ratios(sbar_columns: Sequence[np.ndarray], block_sizes: Sequence[int]) -> tuple[float, ...]:
    """``||u_{k+1}|| / ||u_k||`` for the leading vectors of consecutive blocks."""
    starts = np.concatenate(([0], np.cumsum(block_sizes)))
    norms = [linalg.norm2(sbar_columns[int(i)]) for i in starts[: len(block_sizes) + 1]]
    return tuple(norms[k + 1] / norms[k] for k in range(len(block_sizes)))


def companion_template(
    blockpolys: Sequence[MonicPolynomial], couplings: Sequence[complex]
) -> np.ndarray:
    """Block lower triangular matrix with companion diagonal blocks and single couplings."""
    sizes = [p.degree for p in blockpolys]
    n = sum(sizes)
    B = np.zeros((n, n), dtype=complex)
    start = 0
    for k, p in enumerate(blockpolys):
        d = p.degree
        for i in range(d - 1):
            B[start + i + 1, start + i] = 1.0
        B[start : start + d, start + d - 1] = p.alphas
        if k < len(couplings):
            B[start + d, start + d - 1] = couplings[k]
        start += d
    return B


def assemble_operator(
    scaffold: KrylovScaffold,
    partition: Sequence[Sequence[complex]],
    variant: VariantConfig,
    rng: np.random.Generator,
    unit_residuals: bool = False,
) -> OperatorAssembly:
    """Complete the scaffold to a basis and write the operator in it.

    With ``unit_residuals`` every basis column is normalized and the
    couplings are rescaled by the ratio of the leading-vector norms. The
    Krylov spaces and the spectrum are unchanged, but the operator no longer
    has to stretch ``r_{k-1}`` (norm ``f(k-1)``) into a unit vector, which
    keeps ``||A||`` bounded for curves spanning many orders of magnitude.
    """
    n = scaffold.n
    c = scaffold.cycles
    if len(partition) != c + 1:
        raise SizeMismatch(f"expected {c + 1} eigenvalue blocks, got {len(partition)}")
    for k, (part, m) in enumerate(zip(partition, scaffold.block_sizes), start=1):
        if len(part) != m:
            raise SizeMismatch(f"block {k} has {len(part)} eigenvalues, restart is {m}")
    t = n - len(scaffold.sbar)
    if len(partition[-1]) != t + 1:
        raise SizeMismatch(f"final block has {len(partition[-1])} eigenvalues, expected {t + 1}")
    gamma = None
    if scaffold.tail_kind == TAIL_GAMMA:
        if variant.kind != NONCONVERGENT:
            raise VariantMismatch("gamma-modified scaffold needs the nonconvergent variant")
        gamma = complex(variant.gamma)
        if gamma == -1:
            raise GammaForbidden("gamma = -1")
        if scaffold.gamma is not None and scaffold.gamma != gamma:
            raise VariantMismatch(f"scaffold built with gamma {scaffold.gamma}, variant has {gamma}")

    span = list(scaffold.span_basis)
    completion = []
    for _ in range(t):
        v = linalg.random_unit_in_complement(span, rng, n)
        completion.append(v)
        span.append(v)
    polys = tuple(poly_from_roots(part) for part in partition)
    if unit_residuals:
        scales = lead_norm_ratios(scaffold.sbar, scaffold.block_sizes)
        columns = [v / linalg.norm2(v) for v in scaffold.sbar]
    else:
        scales = (1.0,) * c
        columns = list(scaffold.sbar)
    S = np.column_stack(columns + completion)
    couplings = expected_couplings(polys, scaffold.tail_kind, gamma, scales)
    return OperatorAssembly(
        S, companion_template(polys, couplings), polys, t,
        tuple(p.degree for p in polys), couplings, scaffold.tail_kind, gamma, scales,
    )


def similarity_residual(A: np.ndarray, S: np.ndarray, B: np.ndarray) -> float:
    """``||A S - S B||_F / (||A||_F ||S||_F)``."""
    return linalg.frobenius(A @ S - S @ B) / (linalg.frobenius(A) * linalg.frobenius(S))


def similarity_transform(assembly: OperatorAssembly) -> np.ndarray:
    """``A = S [A]_S S^{-1}`` via the transposed system ``S^T A^T = (S [A]_S)^T``."""
    S, B = assembly.matS, assembly.opInS
    A = linalg.lu_solve(S.T, (S @ B).T).T
    res = similarity_residual(A, S, B)
    if not res <= SIMILARITY_TOL:
        raise NumericallySingular(f"similarity residual {res:.3e} exceeds {SIMILARITY_TOL:.0e}")
    return A


def _coerce_inputs(n, schedule, curve, spectrum, variant):
    if not isinstance(curve, ConvergenceCurve):
        curve = validate_curve(curve)
    if not isinstance(schedule, RestartSchedule):
        schedule = RestartSchedule.build(schedule, curve.q, n)
    if schedule.n != n:
        raise SizeMismatch(f"schedule built for n = {schedule.n}, problem has n = {n}")
    if schedule.q != curve.q:
        raise SizeMismatch(f"schedule has {schedule.q} cycles, curve has q = {curve.q}")
    if not isinstance(spectrum, SpectrumSpec):
        spectrum = SpectrumSpec.of(spectrum)
    if spectrum.n != n:
        raise SizeMismatch(f"spectrum has {spectrum.n} eigenvalues, expected n = {n}")
    if isinstance(variant, str):
        variant = VariantConfig(variant)
    allowed = {STANDARD: (DECREASING, ZEROTAIL), STAGNATION: (STAGNATING,), NONCONVERGENT: (DECREASING,)}
    if curve.kind not in allowed[variant.kind]:
        raise VariantMismatch(f"variant {variant.kind!r} cannot realize a {curve.kind} curve")
    return schedule, curve, spectrum, variant


def construct_problem(
    n: int,
    schedule,
    curve,
    spectrum,
    variant: VariantConfig | str = STANDARD,
    seed: int = 0,
    r0_mode: str = "e1",
    unit_residuals: bool = False,
) -> ConstructedProblem:
    """Matrix ``A``, right-hand side ``b`` and ``x0 = 0`` realizing ``curve`` under ``schedule``.

    ``schedule`` may be an int (fixed restart) or a list of per-cycle restarts,
    ``curve`` a list of norms and ``spectrum`` a list of complex numbers; all
    are validated. ``unit_residuals`` selects the normalized basis (see
    :func:`assemble_operator`). The whole pipeline draws from one generator seeded with
    ``seed``, so equal inputs give bitwise equal output.
    """
    schedule, curve, spectrum, variant = _coerce_inputs(n, schedule, curve, spectrum, variant)
    if r0_mode not in R0_MODES:
        raise ValidationError(f"r0_mode must be one of {R0_MODES}, got {r0_mode!r}")
    rng = np.random.default_rng(seed)
    if r0_mode == "e1":
        r0 = np.zeros(n, dtype=complex)
        r0[0] = curve[0]
    else:
        r0 = curve[0] * linalg.random_unit_in_complement([], rng, n)

    if curve.kind == STAGNATING:
        scaffold = build_scaffold_stagnation(curve, schedule, r0, rng)
    elif curve.kind == ZEROTAIL:
        scaffold = build_scaffold_zerotail(curve, schedule, r0, rng)
    else:
        gamma = variant.gamma if variant.kind == NONCONVERGENT else None
        scaffold = build_scaffold(curve, schedule, r0, rng, gamma=gamma)

    partition = partition_spectrum(spectrum, schedule, scaffold.cycles)
    assembly = assemble_operator(scaffold, partition, variant, rng, unit_residuals)
    A = similarity_transform(assembly)
    return ConstructedProblem(
        A=A, b=r0.copy(), x0=np.zeros(n, dtype=complex), r0=r0, assembly=assembly,
        scaffold=scaffold, curve=curve, schedule=schedule, spectrum=spectrum,
        variant=variant, seed=int(seed), r0_mode=r0_mode, unit_residuals=unit_residuals,
    )
