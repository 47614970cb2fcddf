"""Optimization over arbitrary definable strict partial orders, driven by an SMT solver."""

from .backend import Backend, SatResult, SolverConfig
from .engine import Budget, ProblemInstance, certificate_check, run
from .orders import (
    ObjectiveSpec,
    boxed_combine,
    builtin_order,
    defined_order,
    lex_combine,
    maxmin_combine,
    minmax_combine,
    pareto_combine,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "SatResult",
    "SolverConfig",
    "Budget",
    "ProblemInstance",
    "certificate_check",
    "run",
    "ObjectiveSpec",
    "boxed_combine",
    "builtin_order",
    "defined_order",
    "lex_combine",
    "maxmin_combine",
    "minmax_combine",
    "pareto_combine",
]
