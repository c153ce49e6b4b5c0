"""RLT-based spatial branch-and-bound for box-constrained polynomial programs."""

from .bnb import SolveResult, SolveStatus, SolverConfig, solve
from .certify import build_certificate, proof_bounds, verify_certificate
from .core import Box, Constraint, Multiset, Polynomial, PolyProblem
from .ingest import load_problem, parse_problem, reverse_constraints, reverse_variables
from .rlt import BoundMode

__all__ = [
    "Box", "BoundMode", "Constraint", "Multiset", "PolyProblem", "Polynomial",
    "SolveResult", "SolveStatus", "SolverConfig", "build_certificate", "load_problem",
    "parse_problem", "proof_bounds", "reverse_constraints", "reverse_variables", "solve",
    "verify_certificate",
]
