"""LP relaxation engine and branch-and-bound."""
from .bnb import SolverConfig, branch_and_bound, greedy_incumbent, presolve
from .simplex import Basis, LinearProgram, LPResult, solve_lp

__all__ = ["SolverConfig", "branch_and_bound", "greedy_incumbent", "presolve", "Basis",
           "LinearProgram", "LPResult", "solve_lp"]
