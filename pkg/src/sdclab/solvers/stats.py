from dataclasses import dataclass, field


class BreakdownError(ArithmeticError):
    """A Krylov recurrence cannot continue.

    ``x`` holds the best iterate available when the breakdown happened and
    ``stats`` the counters up to that point.
    """

    def __init__(self, msg, x=None, stats=None):
        super().__init__(msg)
        self.x = x
        self.stats = stats


@dataclass
class SolveStats:
    """Work counters and diagnostics for one (possibly nested) solve.

    ``dot_products`` counts orthogonalization dots for GMRES-type solvers and
    recurrence dots for CG; vector norms are counted separately in
    ``norm_count``. ``preconditioner_applies`` counts innermost applies only,
    including the ones spent forming explicit residuals
    (``residual_check_applies`` is that subset).
    """
    iterations: int = 0
    preconditioner_applies: int = 0
    residual_check_applies: int = 0
    dot_products: int = 0
    norm_count: int = 0
    spmv_count: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    breakdown: str = None
    detector_events: list = field(default_factory=list)
    aborted_inner_solves: int = 0
    inner_solves: int = 0
    inner_iterations: int = 0
    discarded_directions: int = 0

    def merge_inner(self, inner):
        self.preconditioner_applies += inner.preconditioner_applies
        self.residual_check_applies += inner.residual_check_applies
        self.dot_products += inner.dot_products
        self.norm_count += inner.norm_count
        self.spmv_count += inner.spmv_count
        self.detector_events.extend(inner.detector_events)
        self.aborted_inner_solves += inner.aborted_inner_solves
        self.inner_solves += 1 + inner.inner_solves
        self.inner_iterations += inner.iterations + inner.inner_iterations
        self.discarded_directions += inner.discarded_directions

    def events_of(self, kind):
        return [e for e in self.detector_events if e.kind == kind]

    def summary(self):
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "preconditioner_applies": self.preconditioner_applies,
            "residual_check_applies": self.residual_check_applies,
            "dot_products": self.dot_products,
            "norm_count": self.norm_count,
            "spmv_count": self.spmv_count,
            "inner_solves": self.inner_solves,
            "inner_iterations": self.inner_iterations,
            "aborted_inner_solves": self.aborted_inner_solves,
            "detector_events": len(self.detector_events),
            "final_residual": self.residual_history[-1] if self.residual_history else None,
        }


def apply_preconditioner(M, v, stats):
    """Apply M to v and charge the work to ``stats``.

    A nested inner solver reports its own innermost applies, which are merged
    in; a plain preconditioner costs exactly one apply. ``M=None`` means no
    preconditioning and costs nothing.
    """
    if M is None:
        return v.copy()
    if getattr(M, "nested", False):
        z, inner = M.solve_inner(v)
        stats.merge_inner(inner)
        return z
    stats.preconditioner_applies += 1
    return M.apply(v)
