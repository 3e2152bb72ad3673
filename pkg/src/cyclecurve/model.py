"""Value types for convergence curves, restart schedules and spectra.

Everything here is immutable and validated on construction. The helpers
:func:`validate_curve`, :func:`partition_spectrum` and :func:`poly_from_roots`
are the entry points used by the constructor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    GammaForbidden,
    NonAdmissible,
    SizeMismatch,
    ValidationError,
    ZeroRoot,
)

DECREASING = "decreasing"
STAGNATING = "stagnating"
ZEROTAIL = "zerotail"

STANDARD = "standard"
STAGNATION = "stagnation"
NONCONVERGENT = "nonconvergent"
VARIANTS = (STANDARD, STAGNATION, NONCONVERGENT)

# eigenvalues below this fraction of the largest modulus count as zero
ZERO_MODULUS_FLOOR = 1e-14


@dataclass(frozen=True)
class ConvergenceCurve:
    """Prescribed residual norms ``f(0), ..., f(q)`` at the end of each cycle.

    ``kind`` is one of ``"decreasing"``, ``"stagnating"`` or ``"zerotail"``;
    ``s`` is the last strictly decreasing index of a stagnating curve.
    """

    values: tuple[float, ...]
    kind: str
    s: int | None = None

    @property
    def q(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    @property
    def dynamic_range(self) -> float:
        last = self.values[-1]
        return math.inf if last == 0 else self.values[0] / last


def validate_curve(values: Sequence[float]) -> ConvergenceCurve:
    """Classify ``values`` as an admissible cycle-convergence curve.

    Restarted GMRES either decreases strictly every cycle, or decreases
    strictly up to cycle ``s`` and then stays flat forever. A final value of
    exactly zero is allowed (exact convergence at the last cycle).

    Raises
    ------
    NonAdmissible
        For any other shape; the message names the offending index.
    """
    vals = tuple(float(v) for v in values)
    if len(vals) < 2:
        raise NonAdmissible("curve needs at least f(0) and f(1)")
    for i, v in enumerate(vals):
        if not math.isfinite(v):
            raise NonAdmissible(f"f({i}) = {v} is not finite")
        if v < 0:
            raise NonAdmissible(f"f({i}) = {v} is negative")
    if vals[0] <= 0:
        raise NonAdmissible("f(0) must be positive")

    q = len(vals) - 1
    s = None
    for i in range(q):
        a, b = vals[i], vals[i + 1]
        if b > a:
            raise NonAdmissible(f"increase at index {i + 1}: f({i + 1}) = {b} > f({i}) = {a}")
        if s is None:
            if b == a:
                if a == 0:
                    raise NonAdmissible(f"stagnation at zero at index {i + 1}")
                if i == 0:
                    raise NonAdmissible("stagnation must start after at least one decrease (s > 0)")
                s = i
            elif b == 0 and i + 1 < q:
                raise NonAdmissible(f"zero residual at index {i + 1} before the final cycle")
        elif b != a:
            raise NonAdmissible(
                f"decrease at index {i + 1} after stagnation began at index {s}"
            )

    if s is not None:
        return ConvergenceCurve(vals, STAGNATING, s)
    if vals[-1] == 0:
        return ConvergenceCurve(vals, ZEROTAIL)
    return ConvergenceCurve(vals, DECREASING)


@dataclass(frozen=True)
class RestartSchedule:
    """Krylov dimensions ``m_1, ..., m_q`` for matrix order ``n``."""

    cycles: tuple[int, ...]
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise SizeMismatch(f"matrix order n = {self.n} must be at least 2")
        if not self.cycles:
            raise SizeMismatch("restart schedule is empty")
        for k, m in enumerate(self.cycles, start=1):
            if not 1 <= m <= self.n - 1:
                raise SizeMismatch(f"restart m_{k} = {m} outside [1, n-1] for n = {self.n}")
        if sum(self.cycles) >= self.n:
            raise SizeMismatch(
                f"schedule exceeds order: sum of restarts {sum(self.cycles)} >= n = {self.n}"
            )

    @classmethod
    def build(cls, restart: int | Sequence[int], q: int, n: int) -> "RestartSchedule":
        """Uniform schedule from an int, or a variable one from a list of length ``q``."""
        if isinstance(restart, (int, np.integer)):
            return cls(tuple([int(restart)] * q), n)
        cycles = tuple(int(m) for m in restart)
        if len(cycles) != q:
            raise SizeMismatch(f"schedule has {len(cycles)} entries but the curve has q = {q} cycles")
        return cls(cycles, n)

    @property
    def q(self) -> int:
        return len(self.cycles)

    def __getitem__(self, k: int) -> int:
        return self.cycles[k]

    @property
    def uniform(self) -> bool:
        return len(set(self.cycles)) == 1

    def restart_at(self, k: int) -> int:
        """Restart for 1-based cycle ``k``, extending the schedule cyclically."""
        return self.cycles[(k - 1) % len(self.cycles)]


@dataclass(frozen=True)
class SpectrumSpec:
    eigenvalues: tuple[complex, ...]

    def __post_init__(self):
        if not self.eigenvalues:
            raise ValidationError("spectrum is empty")
        mods = [abs(z) for z in self.eigenvalues]
        if not all(math.isfinite(z.real) and math.isfinite(z.imag) for z in self.eigenvalues):
            raise ValidationError("spectrum has non-finite entries")
        floor = ZERO_MODULUS_FLOOR * max(mods)
        for i, a in enumerate(mods):
            if a == 0 or a < floor:
                raise ZeroRoot(f"eigenvalue {i} has modulus {a} below the zero floor")

    @classmethod
    def of(cls, values: Sequence[complex]) -> "SpectrumSpec":
        return cls(tuple(complex(v) for v in values))

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class MonicPolynomial:
    """``p(x) = x^d - sum_j alphas[j] x^j``, the sign convention of the companion blocks."""

    alphas: np.ndarray
    roots: tuple[complex, ...] = field(default=())

    @property
    def degree(self) -> int:
        return len(self.alphas)

    def coefficients(self) -> np.ndarray:
        """Standard monic coefficients, highest degree first (numpy.polyval order)."""
        return np.concatenate(([1.0 + 0j], -self.alphas[::-1]))

    def __call__(self, x: complex) -> complex:
        acc = 1.0 + 0j
        for a in self.alphas[::-1]:
            acc = acc * x - a
        return acc

    def root_scale(self, roots: Sequence[complex] | None = None) -> float:
        roots = self.roots if roots is None else roots
        return float(np.prod([1.0 + abs(r) for r in roots]))


def poly_from_roots(roots: Sequence[complex]) -> MonicPolynomial:
    """Multiply out the linear factors ``(x - r)`` one at a time."""
    roots = tuple(complex(r) for r in roots)
    if not roots:
        raise ValidationError("polynomial needs at least one root")
    for i, r in enumerate(roots):
        if r == 0:
            raise ZeroRoot(f"root {i} is zero")
    # c[j] is the coefficient of x^j
    c = np.zeros(len(roots) + 1, dtype=complex)
    c[0] = 1.0
    for d, r in enumerate(roots, start=1):
        c[1 : d + 1], c[0] = c[0:d] - r * c[1 : d + 1], -r * c[0]
    alphas = -c[:-1]
    alphas.setflags(write=False)
    return MonicPolynomial(alphas, roots)


def partition_spectrum(
    spec: SpectrumSpec, schedule: RestartSchedule, blocks: int
) -> list[tuple[complex, ...]]:
    """Split the eigenvalues into consecutive runs of sizes ``m_1..m_blocks`` plus a remainder."""
    if spec.n != schedule.n:
        raise SizeMismatch(f"spectrum has {spec.n} eigenvalues, expected n = {schedule.n}")
    if not 1 <= blocks <= schedule.q:
        raise SizeMismatch(f"block count {blocks} outside [1, {schedule.q}]")
    sizes = list(schedule.cycles[:blocks])
    if sum(sizes) >= spec.n:
        raise SizeMismatch(f"schedule exceeds order: {sum(sizes)} >= n = {spec.n}")
    sizes.append(spec.n - sum(sizes))
    parts, start = [], 0
    for size in sizes:
        parts.append(spec.eigenvalues[start : start + size])
        start += size
    return parts


@dataclass(frozen=True)
class VariantConfig:
    kind: str = STANDARD
    gamma: complex = 1.0 + 0j

    def __post_init__(self):
        if self.kind not in VARIANTS:
            raise ValidationError(f"unknown variant {self.kind!r}; expected one of {VARIANTS}")
        if self.kind == NONCONVERGENT and complex(self.gamma) == -1:
            raise GammaForbidden("gamma = -1 makes the modified basis degenerate")
