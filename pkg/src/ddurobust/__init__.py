"""Two-stage robust optimisation with decision-dependent uncertainty sets."""

from .geometry import Polyhedron
from .model import (
    AffineRhs,
    Fixed,
    PiecewiseLinearConvexCost,
    Separable,
    TsroProblem,
    instantiate_ddus,
    problem_from_dict,
    problem_to_dict,
    validate,
)
from .oracles import feasibility_oracle, optimality_oracle
from .regions import dispatch_graph, matching_check, rfr_scan_1d
from .solvers import SolveOptions, solve

__all__ = [
    "AffineRhs",
    "Fixed",
    "PiecewiseLinearConvexCost",
    "Polyhedron",
    "Separable",
    "SolveOptions",
    "TsroProblem",
    "dispatch_graph",
    "feasibility_oracle",
    "instantiate_ddus",
    "matching_check",
    "optimality_oracle",
    "problem_from_dict",
    "problem_to_dict",
    "rfr_scan_1d",
    "solve",
    "validate",
]
