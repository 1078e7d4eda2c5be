"""Aggregation AMG, one V-cycle per apply.

Smoothing is one forward Gauss-Seidel sweep before coarse correction and one
backward sweep after, which keeps the cycle symmetric for symmetric A. The
coarsest level is solved with a dense LU.
"""
from dataclasses import dataclass, field
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .. import _kernels
from ..validation import check_csr, check_diagonal, check_vector
from .base import Preconditioner


def gauss_seidel_sweep(A, x, b, direction="forward", diag_ptr=None):
    """One in-place Gauss-Seidel sweep on x for A x = b. Returns x."""
    if diag_ptr is None:
        diag_ptr = check_diagonal(A)
    kernel = {"forward": _kernels.gauss_seidel_forward,
              "backward": _kernels.gauss_seidel_backward}[direction]
    kernel(A.indptr, A.indices, A.data, diag_ptr, x, b)
    return x


def strength_graph(A, theta):
    """Off-diagonal couplings with |a_ij| >= theta * sqrt(|a_ii a_jj|)."""
    d = np.abs(A.diagonal())
    coo = A.tocoo()
    keep = (coo.row != coo.col) & (np.abs(coo.data) >= theta * np.sqrt(d[coo.row] * d[coo.col]))
    S = sp.csr_matrix((np.ones(int(keep.sum())), (coo.row[keep], coo.col[keep])), shape=A.shape)
    S.sort_indices()
    return S


def aggregate(S):
    """Greedy aggregation; returns an aggregate id for every node."""
    n = S.shape[0]
    indptr, indices = S.indptr, S.indices
    agg = np.full(n, -1, dtype=np.int64)
    n_agg = 0
    # Pass 1: a node whose neighbourhood is untouched seeds an aggregate.
    for i in range(n):
        nbrs = indices[indptr[i]:indptr[i + 1]]
        if agg[i] == -1 and nbrs.size and np.all(agg[nbrs] == -1):
            agg[i] = n_agg
            agg[nbrs] = n_agg
            n_agg += 1
    # Pass 2: leftovers join a neighbouring aggregate.
    pass1 = agg.copy()
    for i in range(n):
        if agg[i] == -1:
            for j in indices[indptr[i]:indptr[i + 1]]:
                if pass1[j] != -1:
                    agg[i] = pass1[j]
                    break
    # Pass 3: whatever is still free forms new aggregates (singletons included).
    for i in range(n):
        if agg[i] == -1:
            agg[i] = n_agg
            for j in indices[indptr[i]:indptr[i + 1]]:
                if agg[j] == -1:
                    agg[j] = n_agg
            n_agg += 1
    return agg, n_agg


def tentative_prolongation(agg, n_agg):
    n = agg.shape[0]
    return sp.csr_matrix((np.ones(n), (np.arange(n), agg)), shape=(n, n_agg))


def smooth_prolongation(A, P, omega=4.0 / 3.0):
    """One damped-Jacobi step on the columns of P, weight omega / rho(D^-1 A)."""
    Dinv = sp.diags(1.0 / A.diagonal())
    DA = check_csr(Dinv @ A)
    # Gershgorin bound on rho(D^-1 A); cheap and never an underestimate.
    rho = float(np.max(np.asarray(abs(DA).sum(axis=1)).ravel()))
    return check_csr(P - (omega / rho) * (DA @ P), square=False)


@dataclass
class AmgLevel:
    A: sp.csr_matrix
    diag_ptr: np.ndarray
    P: sp.csr_matrix = None
    R: sp.csr_matrix = None
    aggregates: np.ndarray = None


@dataclass
class AmgHierarchy:
    levels: list
    coarse_lu: tuple
    theta: float
    coarse_threshold: int
    _transposed: list = field(default=None, repr=False)

    @property
    def sizes(self):
        return [lvl.A.shape[0] for lvl in self.levels]

    def transposed_levels(self):
        if self._transposed is None:
            self._transposed = []
            for lvl in self.levels[:-1]:
                AT = check_csr(lvl.A.T)
                self._transposed.append(AmgLevel(AT, check_diagonal(AT), lvl.P, lvl.R))
        return self._transposed


def amg_setup(A, coarse_threshold=64, max_levels=10, theta=0.25, smooth=True):
    """Build the aggregation hierarchy with Galerkin coarse operators P^T A P.

    ``smooth=False`` keeps the piecewise-constant tentative prolongation.
    """
    A = check_csr(A)
    levels = [AmgLevel(A, check_diagonal(A))]
    while len(levels) < max_levels and levels[-1].A.shape[0] > coarse_threshold:
        cur = levels[-1]
        # Coarse SA operators have weaker couplings; halve theta per level.
        level_theta = theta * 0.5 ** (len(levels) - 1) if smooth else theta
        agg, n_agg = aggregate(strength_graph(cur.A, level_theta))
        if n_agg >= cur.A.shape[0]:
            warnings.warn(
                f"AMG coarsening stagnated at {n_agg} unknowns; stopping the hierarchy there",
                RuntimeWarning, stacklevel=2)
            break
        P = tentative_prolongation(agg, n_agg)
        if smooth:
            P = smooth_prolongation(cur.A, P)
        R = check_csr(P.T, square=False)
        Ac = check_csr(R @ cur.A @ P)
        cur.P, cur.R, cur.aggregates = P, R, agg
        levels.append(AmgLevel(Ac, check_diagonal(Ac)))
    coarse = levels[-1].A.toarray()
    lu = sla.lu_factor(coarse, check_finite=True)
    return AmgHierarchy(levels, lu, theta, coarse_threshold)


def _vcycle(levels, coarse_lu, trans, lvl, b):
    if lvl == len(levels) - 1 or levels[lvl].P is None:
        return sla.lu_solve(coarse_lu, b, trans=trans)
    L = levels[lvl]
    A = L.A
    indptr, indices = A.indptr, A.indices
    x = np.zeros_like(b)
    _kernels.gauss_seidel_forward(indptr, indices, A.data, L.diag_ptr, x, b)
    r = b - A @ x
    x += L.P @ _vcycle(levels, coarse_lu, trans, lvl + 1, L.R @ r)
    _kernels.gauss_seidel_backward(indptr, indices, A.data, L.diag_ptr, x, b)
    return x


def amg_apply(h, v):
    """Exactly one V-cycle from a zero initial guess."""
    levels = h.levels
    if len(levels) == 1:
        return sla.lu_solve(h.coarse_lu, v)
    return _vcycle(levels, h.coarse_lu, 0, 0, v)


def amg_apply_transpose(h, v):
    """Transpose of :func:`amg_apply`: the same cycle run on A^T."""
    if len(h.levels) == 1:
        return sla.lu_solve(h.coarse_lu, v, trans=1)
    levels = h.transposed_levels() + [h.levels[-1]]
    return _vcycle(levels, h.coarse_lu, 1, 0, v)


class AmgPreconditioner(Preconditioner):
    def __init__(self, coarse_threshold=64, max_levels=10, theta=0.25, smooth=True):
        self.coarse_threshold = coarse_threshold
        self.max_levels = max_levels
        self.theta = theta
        self.smooth = smooth

    def fit(self, A, partition=None):
        self.hierarchy_ = amg_setup(A, self.coarse_threshold, self.max_levels,
                                    self.theta, self.smooth)
        self.n_ = A.shape[0]
        return self

    def _apply(self, v):
        return amg_apply(self.hierarchy_, v)

    def _apply_transpose(self, v):
        return amg_apply_transpose(self.hierarchy_, v)
