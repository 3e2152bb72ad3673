"""Command-line front end: ``construct``, ``verify`` and ``demo``.

Exit codes (stable)::

    0  success / verification passed
    1  verification ran but failed
    2  invalid configuration (model diagnostics)
    3  numerical failure during construction
    4  unreadable or malformed input files
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .constructor import R0_MODES, ConstructedProblem, construct_problem
from .errors import NumericalError, ValidationError
from .gmres import ConvergenceHistory
from .mmio import ProblemFileError, load_problem, save_problem
from .model import STAGNATING, VARIANTS, VariantConfig
from .verify import Tolerances, VerificationReport, verify_problem

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_NUMERICAL, EXIT_UNREADABLE = 0, 1, 2, 3, 4


class ConfigError(ValidationError):
    """A job configuration field is missing or has the wrong shape."""


@dataclass
class JobConfig:
    n: int
    restart: int | list[int]
    curve: list[float]
    spectrum: list[complex]
    variant: str = "standard"
    gamma: complex = 1.0 + 0j
    seed: int = 0
    r0_mode: str = "e1"
    unit_residuals: bool = False
    tolerances: dict = field(default_factory=dict)
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "JobConfig":
        """Type-check a parsed JSON object; every diagnostic names its field."""
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"config: unknown field(s) {', '.join(unknown)}")
        for name in ("n", "restart", "curve", "spectrum"):
            if name not in d:
                raise ConfigError(f"config field {name!r}: required")

        n = _integer(d["n"], "n")
        restart = d["restart"]
        if isinstance(restart, list):
            restart = [_integer(m, f"restart[{i}]") for i, m in enumerate(restart)]
        else:
            restart = _integer(restart, "restart")
        curve = d["curve"]
        if not isinstance(curve, list) or not all(_is_real(v) for v in curve):
            raise ConfigError("config field 'curve': must be a list of numbers")
        spectrum = [_pair(p, f"spectrum[{i}]") for i, p in enumerate(_list(d["spectrum"], "spectrum"))]
        variant = d.get("variant", "standard")
        if variant not in VARIANTS:
            raise ConfigError(f"config field 'variant': {variant!r} not one of {', '.join(VARIANTS)}")
        gamma = _pair(d.get("gamma", [1.0, 0.0]), "gamma")
        seed = _integer(d.get("seed", 0), "seed")
        if seed < 0:
            raise ConfigError("config field 'seed': must be an unsigned integer")
        r0_mode = d.get("r0_mode", "e1")
        if r0_mode not in R0_MODES:
            raise ConfigError(f"config field 'r0_mode': {r0_mode!r} not one of {', '.join(R0_MODES)}")
        unit = d.get("unit_residuals", False)
        if not isinstance(unit, bool):
            raise ConfigError("config field 'unit_residuals': must be true or false")
        tol = d.get("tolerances", {}) or {}
        allowed = {f.name for f in fields(Tolerances)}
        if not isinstance(tol, dict):
            raise ConfigError("config field 'tolerances': must be an object")
        for key, val in tol.items():
            if key not in allowed:
                raise ConfigError(f"config field 'tolerances.{key}': unknown tolerance")
            if not _is_real(val) or not val > 0:
                raise ConfigError(f"config field 'tolerances.{key}': must be a positive number")
        out = d.get("output_dir")
        if out is not None and not isinstance(out, str):
            raise ConfigError("config field 'output_dir': must be a string")
        return cls(n, restart, [float(v) for v in curve], spectrum, variant, gamma, seed,
                   r0_mode, unit, dict(tol), out)

    def tolerance_set(self) -> Tolerances:
        return replace(Tolerances(), **self.tolerances)

    def build(self) -> ConstructedProblem:
        return construct_problem(
            self.n, self.restart, self.curve, self.spectrum,
            VariantConfig(self.variant, self.gamma), self.seed, self.r0_mode, self.unit_residuals,
        )


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _integer(v, name) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"config field {name!r}: expected an integer, got {v!r}")
    return v


def _list(v, name) -> list:
    if not isinstance(v, list):
        raise ConfigError(f"config field {name!r}: expected a list")
    return v


def _pair(v, name) -> complex:
    if not (isinstance(v, list) and len(v) == 2 and all(_is_real(x) for x in v)):
        raise ConfigError(f"config field {name!r}: expected [re, im], got {v!r}")
    return complex(float(v[0]), float(v[1]))


def load_config(path) -> JobConfig:
    """Read a JSON job file. Unreadable files raise ``OSError``; bad JSON names the line."""
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return JobConfig.from_dict(data)


# --- presets ----------------------------------------------------------------

def _circle(n, radius=1.5, phase=0.3):
    return [radius * np.exp(1j * (2 * np.pi * k / n + phase)) for k in range(n)]


def _pairs(values):
    return [[complex(z).real, complex(z).imag] for z in values]


PRESETS = {
    # log-concave norms: each cycle cuts the residual by a larger factor
    "superlinear": dict(n=16, restart=3, curve=[math.exp(-0.3 * k * k) for k in range(6)],
                        spectrum=_pairs(_circle(16))),
    "stagnation": dict(n=16, restart=3, curve=[1.0, 0.5, 0.25, 0.25, 0.25, 0.25],
                       spectrum=_pairs(_circle(16)), variant="stagnation"),
    "nonconvergent": dict(n=12, restart=3, curve=[1.0, 0.6, 0.35, 0.2],
                          spectrum=_pairs(_circle(12)), variant="nonconvergent", gamma=[1.0, 0.0]),
    "variable-restart": dict(n=20, restart=[2, 5, 3, 1, 4], curve=list(np.logspace(0, -2, 6)),
                             spectrum=_pairs(_circle(20))),
    "zerotail": dict(n=10, restart=3, curve=[1.0, 0.5, 0.2, 0.0], spectrum=_pairs(_circle(10))),
}


# --- output -----------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def write_report(report: VerificationReport, hist: ConvergenceHistory, problem: ConstructedProblem, out) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(_jsonable(report.to_dict()), fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_convergence_csv(hist, problem, out / "convergence.csv")


def write_convergence_csv(hist: ConvergenceHistory, problem: ConstructedProblem, path) -> None:
    """One row per inner step of cycles ``1..q``.

    Steps ``j < m_k`` report the Givens-recurrence norm against ``f(k-1)``
    (``f(s)`` for stagnant cycles); step ``m_k`` reports the explicitly
    recomputed end-of-cycle residual against ``f(k)``.
    """
    curve = problem.curve
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cycle", "inner_step", "residual_norm", "prescribed_f", "abs_error"])
        for k, rec in enumerate(hist.cycles[: curve.q], start=1):
            steps = len(rec.inner_norms)
            for j, val in enumerate(rec.inner_norms, start=1):
                if j == steps:
                    val, target = rec.end_norm, curve[k]
                else:
                    stagnant = curve.kind == STAGNATING and k > curve.s
                    target = curve[k] if stagnant else curve[k - 1]
                w.writerow([k, j, repr(float(val)), repr(float(target)), repr(abs(val - target))])


def cycle_table(report: VerificationReport, problem: ConstructedProblem) -> str:
    lines = [f"{'k':>3} {'m_k':>4} {'f(k)':>12} {'||r_k||':>12} {'|err|':>10} {'ratio':>8}"]
    f = problem.curve
    for k, (obs, err) in enumerate(zip(report.observed, report.curve_errors), start=1):
        ratio = f[k] / f[k - 1] if f[k - 1] else float("nan")
        lines.append(
            f"{k:>3} {problem.schedule[k - 1]:>4} {f[k]:>12.4e} {obs:>12.4e} {err:>10.2e} {ratio:>8.4f}"
        )
    term = report.termination
    if term.get("observed") is not None:
        expect = f" (expect {term['expect']})" if term.get("expect") else ""
        lines.append(f"probe cycle {problem.q + 1}: ||r_q+1|| = {term['observed']:.4e}{expect}")
    elif report.stopped_at is not None:
        lines.append(f"solver stopped at cycle {report.stopped_at}: residual reached zero")
    checks = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in report.checks.items())
    lines.append(f"checks: {checks}")
    lines.append(f"pass: {report.passed}  cond(S) ~ {report.cond_estimate:.2e}")
    return "\n".join(lines)


# --- commands ---------------------------------------------------------------

def _say(args, msg):
    if not args.quiet:
        print(msg)


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _construct_and_save(cfg: JobConfig, out, args) -> int:
    try:
        problem = cfg.build()
    except ValidationError as exc:
        _err(str(exc))
        return EXIT_INVALID
    except NumericalError as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERICAL
    save_problem(problem, out)
    meta_path = Path(out) / "problem.json"
    meta = json.loads(meta_path.read_text())
    meta["tolerances"] = cfg.tolerances
    meta_path.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
    _say(args, f"wrote {out}: A.mtx b.mtx basisS.mtx opInS.mtx problem.json (n = {problem.n}, q = {problem.q})")
    return EXIT_OK


def cmd_construct(args) -> int:
    if not args.config:
        _err("construct needs --config PATH")
        return EXIT_INVALID
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return EXIT_UNREADABLE
    except ValidationError as exc:
        _err(str(exc))
        return EXIT_INVALID
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out or cfg.output_dir
    if not out:
        _err("no output directory: pass --out DIR or set output_dir in the config")
        return EXIT_INVALID
    return _construct_and_save(cfg, out, args)


def _tolerances_for(problem_dir, args) -> Tolerances:
    tol = Tolerances()
    try:
        meta = json.loads((Path(problem_dir) / "problem.json").read_text())
        override = meta.get("tolerances") or {}
        tol = replace(tol, **{k: float(v) for k, v in override.items() if k in {f.name for f in fields(tol)}})
    except (OSError, ValueError, AttributeError):
        pass
    if args.tol_curve is not None:
        tol = replace(tol, curve=args.tol_curve)
    return tol


def _verify_dir(problem_dir, out, args, table=False) -> int:
    try:
        problem = load_problem(problem_dir)
    except ProblemFileError as exc:
        _err(str(exc))
        return EXIT_UNREADABLE
    report, hist = verify_problem(problem, _tolerances_for(problem_dir, args))
    write_report(report, hist, problem, out)
    if table:
        _say(args, cycle_table(report, problem))
    else:
        failed = [k for k, v in report.checks.items() if not v]
        _say(args, "verification passed" if report.passed else f"verification FAILED: {', '.join(failed)}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    problem_dir = args.problem_dir or args.out
    if not problem_dir:
        _err("verify needs a problem directory")
        return EXIT_UNREADABLE
    return _verify_dir(problem_dir, args.out or problem_dir, args)


def cmd_demo(args) -> int:
    if args.preset not in PRESETS:
        _err(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")
        return EXIT_INVALID
    cfg = JobConfig.from_dict(_jsonable(PRESETS[args.preset]))
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out or Path("cyclecurve-demo") / args.preset)
    _say(args, f"preset {args.preset}: n = {cfg.n}, restart = {cfg.restart}, variant = {cfg.variant}")
    code = _construct_and_save(cfg, out, args)
    if code != EXIT_OK:
        return code
    return _verify_dir(out, out, args, table=True)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cyclecurve",
        description="Construct linear systems with a prescribed restarted-GMRES convergence curve and spectrum.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--tol-curve", type=float, metavar="X", help="curve tolerance, relative to f(0)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", parents=[common], help="build a problem from a JSON config")
    c.add_argument("--config", metavar="PATH", required=False, help="JSON job configuration")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", parents=[common], help="run GMRES on a problem directory and check it")
    v.add_argument("problem_dir", nargs="?", help="directory written by construct (default: --out)")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("demo", parents=[common], help="construct and verify a canned example")
    d.add_argument("preset", help=", ".join(PRESETS))
    d.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
