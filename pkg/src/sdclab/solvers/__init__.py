from .stats import BreakdownError, SolveStats, apply_preconditioner
from .krylov import (SOLVERS, Cg, Fgmres, Gmres, KrylovSolver, cg_solve,
                     fgmres_solve, gmres_solve)
from .nested import InnerSolvePreconditioner, nest

__all__ = [
    "BreakdownError", "SolveStats", "apply_preconditioner", "KrylovSolver",
    "Cg", "Gmres", "Fgmres", "SOLVERS", "cg_solve", "gmres_solve", "fgmres_solve",
    "InnerSolvePreconditioner", "nest",
]
