import numpy as np
from sklearn.base import BaseEstimator

from ..validation import check_csr, check_vector
from .krylov import SOLVERS
from .stats import BreakdownError, SolveStats


class InnerSolvePreconditioner(BaseEstimator):
    """Use an (unreliable) inner Krylov solve as the outer solver's preconditioner.

    Each apply solves A z = v from z0 = 0 with the inner solver's own budget
    and preconditioner, and returns the result whether or not the inner solve
    converged. An inner breakdown hands back the best inner iterate; the outer
    flexible solver sees it as just another preconditioner.
    """

    nested = True

    def __init__(self, solver, preconditioner=None):
        self.solver = solver
        self.preconditioner = preconditioner

    def fit(self, A, partition=None):
        self.A_ = check_csr(A)
        self.n_ = self.A_.shape[0]
        self.n_calls_ = 0
        return self

    def solve_inner(self, v):
        v = check_vector(v, self.n_, name="v")
        self.n_calls_ += 1
        try:
            z, stats = self.solver.solve(self.A_, v, None, self.preconditioner,
                                         solve_id=self.n_calls_)
        except BreakdownError as exc:
            stats = exc.stats if exc.stats is not None else SolveStats()
            z = exc.x if exc.x is not None else np.zeros(self.n_)
        return z, stats

    def apply(self, v):
        return self.solve_inner(v)[0]

    __call__ = apply


def nest(inner_solver_kind, inner_cfg, M_inner, A=None):
    """Build ``Outer -> inner_solver_kind -> M_inner``'s inner stage.

    ``inner_cfg`` is a dict of solver parameters (``tol``, ``max_iters``,
    and for GMRES-type solvers ``restart``/``detectors``).
    """
    try:
        cls = SOLVERS[inner_solver_kind]
    except KeyError:
        raise ValueError(f"unknown inner solver {inner_solver_kind!r}") from None
    cfg = dict(inner_cfg)
    if cfg.get("max_iters") is None:
        raise ValueError("an inner solve needs a finite max_iters budget")
    pc = InnerSolvePreconditioner(cls(**cfg), M_inner)
    return pc.fit(A) if A is not None else pc
