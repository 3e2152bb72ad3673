"""Problem directories on disk.

Matrices are stored in Matrix Market array format ("matrix array complex
general", column-major, 17 significant digits) through :mod:`scipy.io`;
vectors are ``n x 1`` arrays. ``problem.json`` carries the configuration
echo and the scaffold metadata needed to rebuild the basis representation.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.io

from .constructor import (
    ConstructedProblem,
    OperatorAssembly,
    construct_problem,
    expected_couplings,
)
from .errors import CycleCurveError
from .model import (
    RestartSchedule,
    SpectrumSpec,
    VariantConfig,
    partition_spectrum,
    poly_from_roots,
    validate_curve,
)

DIGITS = 17
FILES = ("A.mtx", "b.mtx", "basisS.mtx", "opInS.mtx", "problem.json")


class ProblemFileError(Exception):
    """A problem directory is missing files or holds malformed data."""


def write_matrix(path, M: np.ndarray, comment: str = "") -> None:
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    scipy.io.mmwrite(str(path), M, comment=comment, field="complex", precision=DIGITS)


def read_matrix(path) -> np.ndarray:
    """Dense complex array from a Matrix Market file."""
    path = Path(path)
    if not path.is_file():
        raise ProblemFileError(f"{path.name}: file not found")
    try:
        M = scipy.io.mmread(str(path))
    except (ValueError, OSError, IndexError) as exc:
        raise ProblemFileError(f"{path.name}: {exc}") from exc
    if hasattr(M, "toarray"):
        M = M.toarray()
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise ProblemFileError(f"{path.name}: non-finite entries")
    return M


def read_vector(path) -> np.ndarray:
    M = read_matrix(path)
    if M.ndim != 2 or M.shape[1] != 1:
        raise ProblemFileError(f"{Path(path).name}: expected an n x 1 array, got {M.shape}")
    return M[:, 0]


def _pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def problem_metadata(problem: ConstructedProblem) -> dict:
    asm = problem.assembly
    meta = {
        "n": problem.n,
        "restart": list(problem.schedule.cycles),
        "curve": list(problem.curve.values),
        "curve_kind": problem.curve.kind,
        "spectrum": [_pair(z) for z in problem.spectrum.eigenvalues],
        "variant": problem.variant.kind,
        "gamma": _pair(problem.variant.gamma),
        "seed": problem.seed,
        "r0_mode": problem.r0_mode,
        "unit_residuals": problem.unit_residuals,
        "assembly": {
            "block_sizes": list(asm.block_sizes),
            "t": asm.t,
            "tail_kind": asm.tail_kind,
            "coupling_scales": list(asm.coupling_scales),
            "couplings": [_pair(c) for c in asm.couplings],
        },
    }
    if problem.scaffold is not None:
        meta["scaffold"] = {
            "cycles": problem.scaffold.cycles,
            "angles": list(problem.scaffold.angles),
            "independence": problem.scaffold.independence(),
        }
    return meta


def save_problem(problem: ConstructedProblem, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "A.mtx", problem.A)
    write_matrix(out / "b.mtx", problem.b)
    write_matrix(out / "basisS.mtx", problem.assembly.matS)
    write_matrix(out / "opInS.mtx", problem.assembly.opInS)
    with open(out / "problem.json", "w") as fh:
        json.dump(problem_metadata(problem), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [out / name for name in FILES]


def _complex_list(pairs, field) -> list[complex]:
    try:
        return [complex(float(re), float(im)) for re, im in pairs]
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f"problem.json: field {field!r} must be a list of [re, im] pairs") from exc


def load_problem(directory) -> ConstructedProblem:
    """Rebuild a :class:`ConstructedProblem` from a problem directory.

    ``A.mtx``, ``b.mtx`` and ``problem.json`` are required. The block
    polynomials are recomputed from the spectrum partition. When
    ``basisS.mtx`` and ``opInS.mtx`` are absent the basis representation is
    regenerated from the configuration echo (construction is deterministic),
    which allows verifying an externally supplied ``A``.

    Raises
    ------
    ProblemFileError
        For missing or malformed files. Validation errors of the echoed
        configuration surface as :class:`ProblemFileError` as well.
    """
    d = Path(directory)
    if not d.is_dir():
        raise ProblemFileError(f"{d}: not a directory")
    try:
        with open(d / "problem.json") as fh:
            meta = json.load(fh)
    except FileNotFoundError as exc:
        raise ProblemFileError("problem.json: file not found") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProblemFileError(f"problem.json: {exc}") from exc
    A = read_matrix(d / "A.mtx")
    b = read_vector(d / "b.mtx")
    try:
        n = int(meta["n"])
        curve = validate_curve(meta["curve"])
        schedule = RestartSchedule.build(meta["restart"], curve.q, n)
        spectrum = SpectrumSpec.of(_complex_list(meta["spectrum"], "spectrum"))
        gamma = complex(*meta.get("gamma", [1.0, 0.0]))
        variant = VariantConfig(meta["variant"], gamma)
        seed = int(meta["seed"])
        r0_mode = meta.get("r0_mode", "e1")
        unit = bool(meta.get("unit_residuals", False))
        info = meta["assembly"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFileError(f"problem.json: {exc}") from exc
    except CycleCurveError as exc:
        raise ProblemFileError(f"problem.json: {exc}") from exc
    if A.shape != (n, n) or b.shape != (n,):
        raise ProblemFileError(f"A is {A.shape} and b has {b.shape[0]} entries, expected n = {n}")

    have_basis = (d / "basisS.mtx").exists() and (d / "opInS.mtx").exists()
    if not have_basis:
        try:
            ref = construct_problem(n, schedule, curve, spectrum, variant, seed, r0_mode, unit)
        except CycleCurveError as exc:
            raise ProblemFileError(f"cannot regenerate basis: {exc}") from exc
        return ConstructedProblem(
            A=A, b=b, x0=np.zeros(n, dtype=complex), r0=b.copy(), assembly=ref.assembly,
            scaffold=None, curve=curve, schedule=schedule, spectrum=spectrum,
            variant=variant, seed=seed, r0_mode=r0_mode, unit_residuals=unit,
        )

    S = read_matrix(d / "basisS.mtx")
    B = read_matrix(d / "opInS.mtx")
    if S.shape != (n, n) or B.shape != (n, n):
        raise ProblemFileError(f"basisS/opInS shapes {S.shape}, {B.shape}; expected {n} x {n}")
    try:
        sizes = [int(x) for x in info["block_sizes"]]
        tail_kind = str(info["tail_kind"])
        scales = tuple(float(x) for x in info.get("coupling_scales", [1.0] * (len(sizes) - 1)))
        parts = partition_spectrum(spectrum, schedule, len(sizes) - 1)
    except (KeyError, TypeError, ValueError, CycleCurveError) as exc:
        raise ProblemFileError(f"problem.json: assembly metadata: {exc}") from exc
    polys = tuple(poly_from_roots(p) for p in parts)
    asm_gamma = gamma if variant.kind == "nonconvergent" else None
    assembly = OperatorAssembly(
        S, B, polys, int(info.get("t", sizes[-1] - 1)), tuple(p.degree for p in polys),
        expected_couplings(polys, tail_kind, asm_gamma, scales), tail_kind, asm_gamma, scales,
    )
    return ConstructedProblem(
        A=A, b=b, x0=np.zeros(n, dtype=complex), r0=b.copy(), assembly=assembly,
        scaffold=None, curve=curve, schedule=schedule, spectrum=spectrum,
        variant=variant, seed=seed, r0_mode=r0_mode, unit_residuals=unit,
    )

