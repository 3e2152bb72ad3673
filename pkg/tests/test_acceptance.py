"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured quantity
and the pinned tolerance, then asserts. Run ``python tests/test_acceptance.py``
for just the summary lines, or ``pytest tests/test_acceptance.py -v``.

Parameters the criteria leave open (restart and size for the stagnation
instances, the curve for the termination pair, the base instance for the
negative controls) are fixed here; the tolerances are not adjustable.
"""
from __future__ import annotations

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import qr, solve_triangular

from cyclecurve import construct_problem, verify_problem
from cyclecurve.constructor import ConstructedProblem
from cyclecurve.gmres import gmres_cycle
from cyclecurve.model import SpectrumSpec, validate_curve

# pinned tolerances
CURVE_TOL = 1e-8        # times f(0)
SIMILARITY_TOL = 1e-10
SPECTRUM_TOL = 1e-10
TERMINATION_ZERO = 1e-8   # times f(0)
TERMINATION_NONZERO = 1e-4  # times f(0)
ORACLE_TOL = 1e-9
RUNTIME_LIMIT = 30.0

N_MAIN, M_MAIN, Q_MAIN, SEEDS_MAIN = 60, 5, 11, 50


def annulus(rng: np.random.Generator, n: int, inner=0.5, outer=2.0) -> list[complex]:
    """Uniform by area on ``inner <= |z| <= outer``."""
    radius = np.sqrt(rng.uniform(inner**2, outer**2, n))
    return list(radius * np.exp(2j * np.pi * rng.uniform(size=n)))


def main_instance(seed: int) -> ConstructedProblem:
    spectrum = annulus(np.random.default_rng(seed), N_MAIN)
    return construct_problem(N_MAIN, M_MAIN, np.logspace(0, -6, Q_MAIN + 1), spectrum, seed=seed)


_main_cache: dict = {}


def main_runs():
    """Construct and verify the 50 main instances once; returns (runs, seconds)."""
    if not _main_cache:
        t0 = time.perf_counter()
        runs = []
        for seed in range(SEEDS_MAIN):
            problem = main_instance(seed)
            report, hist = verify_problem(problem)
            runs.append((problem, report, hist))
        _main_cache["runs"] = runs
        _main_cache["seconds"] = time.perf_counter() - t0
    return _main_cache["runs"], _main_cache["seconds"]


def announce(capsys, number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


# --- 1 ----------------------------------------------------------------------

def check_curve_reproduction():
    runs, seconds = main_runs()
    worst = [max(r.curve_errors) / p.curve[0] for p, r, _ in runs]
    good = sum(w <= CURVE_TOL for w in worst)
    ok = good == len(runs) and seconds < RUNTIME_LIMIT
    detail = (f"{good}/{len(runs)} instances with max_k |‖r_k‖-f(k)| <= {CURVE_TOL:g} f(0); "
              f"worst {max(worst):.2e}; runtime {seconds:.1f}s (limit {RUNTIME_LIMIT:g}s)")
    return ok, detail


def test_curve_reproduction(capsys):
    ok, detail = check_curve_reproduction()
    announce(capsys, 1, ok, detail)
    assert ok, detail


# --- 2 ----------------------------------------------------------------------

def check_spectrum_prescription():
    runs, _ = main_runs()
    structure = all(r.structure_ok for _, r, _ in runs)
    sim = max(r.similarity_residual for _, r, _ in runs)
    spec = max(max(r.spectrum_residuals) for _, r, _ in runs)
    ok = structure and sim <= SIMILARITY_TOL and spec <= SPECTRUM_TOL
    detail = (f"structure {'ok' if structure else 'BROKEN'} on all; max similarity residual {sim:.2e} "
              f"(<= {SIMILARITY_TOL:g}); max normalized |p(λ)| {spec:.2e} (<= {SPECTRUM_TOL:g})")
    return ok, detail


def test_spectrum_prescription(capsys):
    ok, detail = check_spectrum_prescription()
    announce(capsys, 2, ok, detail)
    assert ok, detail


# --- 3 ----------------------------------------------------------------------

def check_intra_cycle_stagnation():
    runs, _ = main_runs()
    worst = 0.0
    for problem, _, hist in runs:
        f = problem.curve
        for k, rec in enumerate(hist.cycles[: f.q], start=1):
            steps = rec.inner_norms[: rec.m - 1]
            if steps:
                worst = max(worst, max(abs(v - f[k - 1]) for v in steps) / f[0])
    ok = worst <= CURVE_TOL
    return ok, f"max over instances/cycles/steps 1..m-1 of |inner - f(k-1)| = {worst:.2e} f(0) (<= {CURVE_TOL:g})"


def test_intra_cycle_stagnation(capsys):
    ok, detail = check_intra_cycle_stagnation()
    announce(capsys, 3, ok, detail)
    assert ok, detail


# --- 4 ----------------------------------------------------------------------

STAG_M, STAG_S, STAG_Q = 5, 3, 7
STAG_N = STAG_M * STAG_Q + 1  # smallest order the schedule admits
STAG_CURVE = [1.0, 0.5, 0.25, 0.125] + [0.125] * (STAG_Q - STAG_S)
STAG_SEEDS = 20


def check_stagnation():
    worst_flat, worst_step = 0.0, 0.0
    for seed in range(STAG_SEEDS):
        spectrum = annulus(np.random.default_rng(1000 + seed), STAG_N)
        problem = construct_problem(STAG_N, STAG_M, STAG_CURVE, spectrum, "stagnation", seed=seed)
        report, hist = verify_problem(problem)
        f0, fs = STAG_CURVE[0], STAG_CURVE[STAG_S]
        norms = [rec.end_norm for rec in hist.cycles]
        worst_flat = max(worst_flat, max(abs(norms[k - 1] - fs) for k in range(STAG_S + 1, STAG_Q + 1)) / f0)
        step = np.linalg.norm(hist.cycles[STAG_S].end_residual - hist.cycles[STAG_S - 1].end_residual)
        worst_step = max(worst_step, step / f0)
    ok = worst_flat <= CURVE_TOL and worst_step <= CURVE_TOL
    detail = (f"n={STAG_N}, m={STAG_M}, s={STAG_S}, q={STAG_Q}, {STAG_SEEDS} seeds: "
              f"max_k>s |‖r_k‖-f(s)| = {worst_flat:.2e} f(0), max ‖r_4-r_3‖ = {worst_step:.2e} f(0) "
              f"(<= {CURVE_TOL:g})")
    return ok, detail


def test_stagnation(capsys):
    ok, detail = check_stagnation()
    announce(capsys, 4, ok, detail)
    assert ok, detail


# --- 5 ----------------------------------------------------------------------

VAR_SCHEDULE = [2, 5, 3, 1, 4]
VAR_N = 20
VAR_SEEDS = 20


def check_variable_restart():
    worst = 0.0
    curve = np.logspace(0, -2, len(VAR_SCHEDULE) + 1)
    for seed in range(VAR_SEEDS):
        spectrum = annulus(np.random.default_rng(2000 + seed), VAR_N)
        report, _ = verify_problem(construct_problem(VAR_N, VAR_SCHEDULE, curve, spectrum, seed=seed))
        worst = max(worst, max(report.curve_errors) / curve[0])
    ok = worst <= CURVE_TOL
    return ok, f"schedule {VAR_SCHEDULE}, n={VAR_N}, {VAR_SEEDS} seeds: max curve error {worst:.2e} f(0) (<= {CURVE_TOL:g})"


def test_variable_restart(capsys):
    ok, detail = check_variable_restart()
    announce(capsys, 5, ok, detail)
    assert ok, detail


# --- 6 ----------------------------------------------------------------------

TERM_SEEDS = 20
# f(q) = 0.1 keeps ‖r_{q+1}‖ of the nonconvergent twin well above 1e-4 f(0)
TERM_CURVE = np.logspace(0, -1, Q_MAIN + 1)


def check_termination():
    zero_worst, nonzero_best = 0.0, np.inf
    for seed in range(TERM_SEEDS):
        spectrum = annulus(np.random.default_rng(3000 + seed), N_MAIN)
        std = construct_problem(N_MAIN, M_MAIN, TERM_CURVE, spectrum, "standard", seed=seed)
        assert std.assembly.t + 1 <= M_MAIN
        non = construct_problem(N_MAIN, M_MAIN, TERM_CURVE, spectrum, "nonconvergent", seed=seed)
        r_std, _ = verify_problem(std)
        r_non, _ = verify_problem(non)
        zero_worst = max(zero_worst, r_std.termination["observed"] / TERM_CURVE[0])
        nonzero_best = min(nonzero_best, r_non.termination["observed"] / TERM_CURVE[0])
    ok = zero_worst <= TERMINATION_ZERO and nonzero_best >= TERMINATION_NONZERO
    detail = (f"n={N_MAIN}, m={M_MAIN}, q={Q_MAIN} (t+1 = {N_MAIN - M_MAIN * Q_MAIN}), {TERM_SEEDS} seeds: "
              f"standard max ‖r_q+1‖ = {zero_worst:.2e} f(0) (<= {TERMINATION_ZERO:g}); "
              f"nonconvergent min ‖r_q+1‖ = {nonzero_best:.2e} f(0) (>= {TERMINATION_NONZERO:g})")
    return ok, detail


def test_termination_vs_nonconvergence(capsys):
    ok, detail = check_termination()
    announce(capsys, 6, ok, detail)
    assert ok, detail


# --- 7 ----------------------------------------------------------------------

def brute_force_end_norm(A, b, m):
    """min ‖b - K c‖ over the explicit Krylov image K = [A b, ..., A^m b], via dense QR."""
    cols, v = [], b
    for _ in range(m):
        v = A @ v
        cols.append(v)
    K = np.column_stack(cols)
    Q, R = qr(K, mode="economic")
    c = solve_triangular(R, Q.conj().T @ b)
    return float(np.linalg.norm(b - K @ c))


def check_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 11))
        m = int(rng.integers(1, n))
        A = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(n)
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        _, rec = gmres_cycle(A, np.zeros(n, dtype=complex), b, m)
        ref = brute_force_end_norm(A, b, m)
        worst = max(worst, abs(rec.end_norm - ref) / max(ref, np.finfo(float).tiny))
    ok = worst <= ORACLE_TOL
    return ok, f"200 random systems, n <= 10: max relative end-norm gap to QR minimizer {worst:.2e} (<= {ORACLE_TOL:g})"


def test_solver_oracle(capsys):
    ok, detail = check_oracle()
    announce(capsys, 7, ok, detail)
    assert ok, detail


# --- 8 ----------------------------------------------------------------------

CONTROL = dict(n=12, schedule=3, curve=[1.0, 0.6, 0.3, 0.1], seed=5)


def control_instance() -> ConstructedProblem:
    spectrum = annulus(np.random.default_rng(8), CONTROL["n"])
    return construct_problem(CONTROL["n"], CONTROL["schedule"], CONTROL["curve"], spectrum, seed=CONTROL["seed"])


def _with(problem, **changes) -> ConstructedProblem:
    fields = dict(problem.__dict__)
    fields.update(changes)
    return ConstructedProblem(**fields)


def check_negative_controls():
    base = control_instance()
    base_report, _ = verify_problem(base)
    silent = []
    n = base.n
    scale = 1e-2 * np.linalg.norm(base.A)
    for i in range(n):
        for j in range(n):
            A = base.A.copy()
            A[i, j] += scale
            if verify_problem(_with(base, A=A))[0].passed:
                silent.append(f"A[{i},{j}]")
    for k in range(1, base.q + 1):
        vals = list(base.curve.values)
        vals[k] *= 1.01
        try:
            curve = validate_curve(vals)
        except ValueError:
            continue  # a non-admissible perturbation is rejected before verify
        if verify_problem(_with(base, curve=curve))[0].passed:
            silent.append(f"f({k})")
    for i in range(n):
        lam = list(base.spectrum.eigenvalues)
        lam[i] *= 1.01
        if verify_problem(_with(base, spectrum=SpectrumSpec.of(lam)))[0].passed:
            silent.append(f"λ[{i}]")
    ok = base_report.passed and not silent
    detail = (f"unperturbed base passes: {base_report.passed}; {n * n} A-entry, {base.q} f(k) and {n} λ "
              f"perturbations; silent passes: {silent or 'none'}")
    return ok, detail


def test_negative_controls(capsys):
    ok, detail = check_negative_controls()
    announce(capsys, 8, ok, detail)
    assert ok, detail


# --- 9 ----------------------------------------------------------------------

def _cli(*args):
    return subprocess.run([sys.executable, "-m", "cyclecurve", *args], capture_output=True, text=True)


def check_determinism(tmp: Path):
    rng = np.random.default_rng(9)
    config = {
        "n": 20, "restart": 4, "curve": list(np.logspace(0, -3, 5)),
        "spectrum": [[z.real, z.imag] for z in annulus(rng, 20)], "seed": 42,
    }
    cfg = tmp / "job.json"
    cfg.write_text(json.dumps(config))
    digests = []
    for run in ("a", "b"):
        out = tmp / run
        c1 = _cli("construct", "--config", str(cfg), "--out", str(out), "--quiet")
        c2 = _cli("verify", str(out), "--quiet")
        if c1.returncode != 0 or c2.returncode not in (0, 1):
            return False, f"CLI failed: {c1.stderr or c2.stderr}"
        digests.append({name: (out / name).read_bytes() for name in ("A.mtx", "b.mtx", "report.json")})
    same = [name for name in digests[0] if digests[0][name] == digests[1][name]]
    ok = len(same) == 3
    return ok, f"two runs of construct+verify, seed 42: byte-identical {same}"


def test_determinism(capsys, tmp_path):
    ok, detail = check_determinism(tmp_path)
    announce(capsys, 9, ok, detail)
    assert ok, detail


CHECKS = [
    (1, check_curve_reproduction), (2, check_spectrum_prescription), (3, check_intra_cycle_stagnation),
    (4, check_stagnation), (5, check_variable_restart), (6, check_termination),
    (7, check_oracle), (8, check_negative_controls),
]


if __name__ == "__main__":
    import tempfile

    results = []
    for number, check in CHECKS:
        ok, detail = check()
        announce(None, number, ok, detail)
        results.append(ok)
    with tempfile.TemporaryDirectory() as tmp:
        ok, detail = check_determinism(Path(tmp))
    announce(None, 9, ok, detail)
    results.append(ok)
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
