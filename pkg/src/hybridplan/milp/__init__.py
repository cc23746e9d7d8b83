"""Solver-agnostic MILP model, LP file format, exact reference solver and backends."""
from .backends import AutoBackend, ExternalBackend, HighsBackend, ReferenceBackend, make_backend
from .kernel import KERNEL
from .lpformat import LpDocument, export_lp, parse_lp
from .model import MilpError, MilpModel, MilpSolution, check_solution
from .reference import CapExceeded, reference_solve

__all__ = [
    "AutoBackend", "CapExceeded", "ExternalBackend", "HighsBackend", "KERNEL", "LpDocument", "MilpError",
    "MilpModel", "MilpSolution", "ReferenceBackend", "check_solution", "export_lp", "make_backend", "parse_lp",
    "reference_solve",
]
