"""Instrumented CG, GMRES and flexible GMRES."""
import math

import numpy as np
import scipy.linalg as sla
from sklearn.base import BaseEstimator

from ..linalg import dot, norm2
from ..validation import check_csr, check_vector
from .stats import BreakdownError, SolveStats, apply_preconditioner

_EPS = np.finfo(np.float64).eps


class _InnerAbort(Exception):
    pass


class KrylovSolver(BaseEstimator):
    """Shared parameters. ``tol`` is relative to ||b||_2."""

    kind = None

    def __init__(self, tol=1e-8, max_iters=1000):
        self.tol = tol
        self.max_iters = max_iters

    def _check_params(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")

    def _prepare(self, A, b, x0):
        self._check_params()
        A = check_csr(A)
        n = A.shape[0]
        b = check_vector(b, n, name="b")
        x = np.zeros(n) if x0 is None else check_vector(x0, n, name="x0").copy()
        return A, b, x


class Cg(KrylovSolver):
    """Left-preconditioned conjugate gradients.

    Stops on the recurrence residual, which stays equal to b - A x even when
    the preconditioner output is corrupted, since z only steers the search
    direction.
    """

    kind = "cg"

    def solve(self, A, b, x0=None, M=None, solve_id=0):
        A, b, x = self._prepare(A, b, x0)
        stats = SolveStats()
        bnorm = norm2(b)
        stats.norm_count += 1
        if bnorm == 0.0:
            stats.converged = True
            stats.residual_history.append(0.0)
            return np.zeros_like(x), stats
        target = self.tol * bnorm

        r = b - A @ x
        stats.spmv_count += 1
        rnorm = norm2(r)
        stats.norm_count += 1
        stats.residual_history.append(rnorm)
        if rnorm <= target:
            stats.converged = True
            return x, stats

        z = apply_preconditioner(M, r, stats)
        p = z.copy()
        rz = dot(r, z)
        stats.dot_products += 1
        for it in range(1, self.max_iters + 1):
            stats.iterations = it
            Ap = A @ p
            stats.spmv_count += 1
            pAp = dot(Ap, p)
            stats.dot_products += 1
            if not (math.isfinite(pAp) and math.isfinite(rz)):
                stats.breakdown = "non-finite value in CG recurrence"
                raise BreakdownError(stats.breakdown, x, stats)
            if pAp <= 0.0:
                stats.breakdown = f"nonsymmetric/indefinite breakdown: (Ap, p) = {pAp:.3e}"
                raise BreakdownError(stats.breakdown, x, stats)
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            rnorm = norm2(r)
            stats.norm_count += 1
            stats.residual_history.append(rnorm)
            if rnorm <= target:
                stats.converged = True
                break
            if it == self.max_iters:
                break
            z = apply_preconditioner(M, r, stats)
            rz_new = dot(r, z)
            stats.dot_products += 1
            p = z + (rz_new / rz) * p
            rz = rz_new
        return x, stats


class Gmres(KrylovSolver):
    """Right-preconditioned GMRES (modified Gram-Schmidt, Givens rotations).

    ``restart=None`` runs a single Arnoldi cycle of up to ``max_iters``
    steps. ``detectors`` is a fitted :class:`~sdclab.detectors.ResilienceDetectors`.
    """

    kind = "gmres"
    flexible = False

    def __init__(self, tol=1e-8, max_iters=1000, restart=None, detectors=None):
        super().__init__(tol, max_iters)
        self.restart = restart
        self.detectors = detectors

    def solve(self, A, b, x0=None, M=None, solve_id=0):
        A, b, x = self._prepare(A, b, x0)
        stats = SolveStats()
        monitor = self.detectors.start(solve_id) if self.detectors is not None else None
        try:
            return self._solve(A, b, x, M, stats, monitor)
        except _InnerAbort:
            stats.aborted_inner_solves += 1
            stats.converged = False
            return monitor.last_verified.copy(), stats
        finally:
            if monitor is not None:
                stats.detector_events.extend(monitor.events)

    def _update(self, M, Q, Z, R, g, j, stats, check=False):
        """Correction  M^{-1} Q y  (or  Z y  when flexible)  for the first j columns."""
        if j == 0:
            return np.zeros(Q.shape[1])
        y = sla.solve_triangular(R[:j, :j], g[:j], check_finite=False)
        if self.flexible:
            return Z[:j].T @ y
        before = stats.preconditioner_applies
        u = apply_preconditioner(M, Q[:j].T @ y, stats)
        if check:
            stats.residual_check_applies += stats.preconditioner_applies - before
        return u

    def _respond(self, monitor, event):
        if event is not None and monitor.aborts:
            raise _InnerAbort

    def _solve(self, A, b, x, M, stats, monitor):
        n = A.shape[0]
        bnorm = norm2(b)
        stats.norm_count += 1
        if bnorm == 0.0:
            stats.converged = True
            stats.residual_history.append(0.0)
            if monitor is not None:
                monitor.start(0.0, np.zeros(n))
            return np.zeros(n), stats
        target = self.tol * bnorm

        r = b - A @ x
        stats.spmv_count += 1
        beta = norm2(r)
        stats.norm_count += 1
        stats.residual_history.append(beta)
        if monitor is not None:
            monitor.start(beta, x)
        if beta <= target:
            stats.converged = True
            return x, stats

        m = self.max_iters if self.restart is None else min(self.restart, self.max_iters)
        done = False
        while not done:
            Q = np.empty((m + 1, n))
            Z = np.empty((m, n)) if self.flexible else None
            R = np.zeros((m + 1, m))
            cs = np.zeros(m)
            sn = np.zeros(m)
            g = np.zeros(m + 1)
            g[0] = beta
            Q[0] = r / beta
            j = 0
            lucky = False
            while j < m and stats.iterations < self.max_iters:
                stats.iterations += 1
                it = stats.iterations
                z = apply_preconditioner(M, Q[j], stats)
                if self.flexible and not np.any(z):
                    # An aborted inner solve handed back its zero start; retry
                    # this direction instead of adding a null column.
                    stats.discarded_directions += 1
                    continue
                w = A @ z
                stats.spmv_count += 1
                h = np.empty(j + 2)
                for i in range(j + 1):
                    h[i] = dot(Q[i], w)
                    w -= h[i] * Q[i]
                stats.dot_products += j + 1
                hn = norm2(w)
                stats.norm_count += 1
                h[j + 1] = hn
                if not np.all(np.isfinite(h)):
                    stats.breakdown = "non-finite Hessenberg entry"
                    x_best = monitor.last_verified if monitor is not None else x
                    raise BreakdownError(stats.breakdown, x_best.copy(), stats)
                if monitor is not None:
                    self._respond(monitor, monitor.check_projection(h, it))
                if self.flexible:
                    Z[j] = z
                col = h[: j + 1].copy()
                for i in range(j):
                    a, c = col[i], col[i + 1]
                    col[i] = cs[i] * a + sn[i] * c
                    col[i + 1] = -sn[i] * a + cs[i] * c
                denom = math.hypot(col[j], hn)
                if denom == 0.0:
                    stats.breakdown = "singular Hessenberg column"
                    x_best = monitor.last_verified if monitor is not None else x
                    raise BreakdownError(stats.breakdown, x_best.copy(), stats)
                cs[j] = col[j] / denom
                sn[j] = hn / denom
                col[j] = denom
                R[: j + 1, j] = col
                g[j + 1] = -sn[j] * g[j]
                g[j] = cs[j] * g[j]
                lucky = hn <= 4.0 * _EPS * float(np.max(np.abs(h)))
                if not lucky:
                    Q[j + 1] = w / hn
                j += 1
                res = abs(g[j])
                stats.residual_history.append(res)
                converged = res <= target

                if monitor is not None and monitor.residual_due(it):
                    xj = x + self._update(M, Q, Z, R, g, j, stats, check=True)
                    rj = b - A @ xj
                    stats.spmv_count += 1
                    rj_norm = norm2(rj)
                    stats.norm_count += 1
                    self._respond(monitor, monitor.check_residual(rj_norm, xj, it))
                if converged or lucky:
                    stats.converged = True
                    break

            x = x + self._update(M, Q, Z, R, g, j, stats)
            if stats.converged or stats.iterations >= self.max_iters:
                done = True
            else:
                r = b - A @ x
                stats.spmv_count += 1
                beta = norm2(r)
                stats.norm_count += 1
                if beta <= target:
                    stats.converged = True
                    done = True

        if monitor is not None and monitor.config.residual_check_enabled:
            # Exit check: one SpMV, no preconditioner apply.
            r_exit = norm2(b - A @ x)
            stats.spmv_count += 1
            stats.norm_count += 1
            self._respond(monitor, monitor.check_residual(r_exit, x, stats.iterations))
        return x, stats


class Fgmres(Gmres):
    """Flexible GMRES: keeps z_j = M_j q_j so M may change every iteration.

    The solution update ``x0 + Z y`` needs no preconditioner apply, so explicit
    residual checks are free of preconditioner cost.
    """

    kind = "fgmres"
    flexible = True


SOLVERS = {"cg": Cg, "gmres": Gmres, "fgmres": Fgmres}


def cg_solve(A, b, x0=None, M=None, tol=1e-8, max_iters=1000):
    return Cg(tol=tol, max_iters=max_iters).solve(A, b, x0, M)


def gmres_solve(A, b, x0=None, M=None, tol=1e-8, max_iters=1000, restart=None, detectors=None):
    return Gmres(tol, max_iters, restart, detectors).solve(A, b, x0, M)


def fgmres_solve(A, b, x0=None, M=None, tol=1e-8, max_iters=1000, restart=None, detectors=None):
    return Fgmres(tol, max_iters, restart, detectors).solve(A, b, x0, M)
