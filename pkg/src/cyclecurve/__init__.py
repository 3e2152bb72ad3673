"""Linear systems on which restarted GMRES follows a prescribed convergence curve.

Typical use::

    from cyclecurve import construct_problem, verify_problem

    problem = construct_problem(n=12, schedule=3, curve=[1, 0.5, 0.2, 0.05],
                                spectrum=[1 + 0.1j * k for k in range(12)], seed=0)
    report, history = verify_problem(problem)
"""
from .constructor import ConstructedProblem, OperatorAssembly, KrylovScaffold, construct_problem
from .errors import CycleCurveError, NumericalError, ValidationError
from .gmres import arnoldi, gmres_cycle, restarted_gmres
from .model import (
    ConvergenceCurve,
    MonicPolynomial,
    RestartSchedule,
    SpectrumSpec,
    VariantConfig,
    partition_spectrum,
    poly_from_roots,
    validate_curve,
)
from .verify import Tolerances, VerificationReport, check_structure, verify_problem

__all__ = [
    "ConstructedProblem", "OperatorAssembly", "KrylovScaffold", "construct_problem",
    "CycleCurveError", "NumericalError", "ValidationError",
    "arnoldi", "gmres_cycle", "restarted_gmres",
    "ConvergenceCurve", "MonicPolynomial", "RestartSchedule", "SpectrumSpec", "VariantConfig",
    "partition_spectrum", "poly_from_roots", "validate_curve",
    "Tolerances", "VerificationReport", "check_structure", "verify_problem",
]
