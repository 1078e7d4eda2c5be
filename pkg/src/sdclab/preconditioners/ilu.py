"""ILU(0) and non-overlapping additive Schwarz with ILU(0) subdomain solves."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .. import _kernels
from ..partition import partition_rows
from ..validation import check_csr, check_diagonal
from .base import Preconditioner


class FactorizationError(ValueError):
    def __init__(self, msg, row=None):
        super().__init__(msg)
        self.row = row


@dataclass
class Ilu0Factors:
    """L\\U packed in A's sparsity pattern; L has an implicit unit diagonal."""
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    diag_ptr: np.ndarray

    @property
    def n(self):
        return self.indptr.shape[0] - 1

    def packed(self):
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    @property
    def L(self):
        return (sp.tril(self.packed(), k=-1) + sp.identity(self.n)).tocsr()

    @property
    def U(self):
        return sp.triu(self.packed()).tocsr()


def ilu0_setup(A, pivot_rtol=1e-14):
    """Factor ``A`` with IKJ ILU(0); no entry outside A's pattern is created."""
    A = check_csr(A)
    indptr = A.indptr.astype(np.int64)
    indices = A.indices.astype(np.int64)
    diag_ptr = check_diagonal(A)
    data = A.data.copy()
    tol = pivot_rtol * float(np.max(np.abs(data[diag_ptr])))
    bad = _kernels.ilu0_factor(indptr, indices, data, diag_ptr, tol)
    if bad >= 0:
        raise FactorizationError(
            f"ILU(0) pivot {data[diag_ptr[bad]]:.3e} in row {bad} is below {tol:.3e}", row=int(bad))
    return Ilu0Factors(indptr, indices, data, diag_ptr)


def ilu0_apply(f, v):
    """Forward then backward substitution with the packed factors."""
    return _kernels.lu_solve_csr(f.indptr, f.indices, f.data, f.diag_ptr, v)


def ilu0_apply_transpose(f, v):
    return _kernels.lu_solve_transpose_csr(f.indptr, f.indices, f.data, f.diag_ptr, v)


def block_diagonal(A, partition):
    """Keep only the entries of ``A`` whose row and column share a subdomain."""
    A = check_csr(A)
    owner = np.repeat(np.arange(partition.k), partition.sizes())
    coo = A.tocoo()
    keep = owner[coo.row] == owner[coo.col]
    B = sp.csr_matrix((coo.data[keep], (coo.row[keep], coo.col[keep])), shape=A.shape)
    return check_csr(B)


class Ilu0Preconditioner(Preconditioner):
    """Global ILU(0). ``level`` is reserved for ILU(k); only 0 is implemented."""

    def __init__(self, level=0, pivot_rtol=1e-14):
        self.level = level
        self.pivot_rtol = pivot_rtol

    def fit(self, A, partition=None):
        if self.level != 0:
            raise NotImplementedError(f"ILU({self.level}) is not implemented, only ILU(0)")
        self.factors_ = ilu0_setup(A, self.pivot_rtol)
        self.n_ = A.shape[0]
        return self

    def _apply(self, v):
        return ilu0_apply(self.factors_, v)

    def _apply_transpose(self, v):
        return ilu0_apply_transpose(self.factors_, v)


class SchwarzPreconditioner(Preconditioner):
    """Single-level additive Schwarz, zero overlap, ILU(0) per subdomain.

    With no overlap the subdomain factors are the ILU(0) factors of the
    block-diagonal part of A, so one packed triangular solve performs every
    subdomain solve and no value crosses a subdomain boundary.
    """

    def __init__(self, n_subdomains=None, pivot_rtol=1e-14):
        self.n_subdomains = n_subdomains
        self.pivot_rtol = pivot_rtol

    def fit(self, A, partition=None):
        A = check_csr(A)
        if partition is None:
            partition = partition_rows(A.shape[0], self.n_subdomains or 1)
        elif self.n_subdomains is not None and partition.k != self.n_subdomains:
            raise ValueError(
                f"partition has {partition.k} subdomains, expected {self.n_subdomains}")
        if partition.n != A.shape[0]:
            raise ValueError(f"partition covers {partition.n} rows, A has {A.shape[0]}")
        self.partition_ = partition
        try:
            self.factors_ = ilu0_setup(block_diagonal(A, partition), self.pivot_rtol)
        except FactorizationError as exc:
            rank = int(np.searchsorted(partition.offsets, exc.row, side="right") - 1)
            raise FactorizationError(f"subdomain {rank}: {exc}", row=exc.row) from exc
        self.n_ = A.shape[0]
        return self

    def _apply(self, v):
        return ilu0_apply(self.factors_, v)

    def _apply_transpose(self, v):
        return ilu0_apply_transpose(self.factors_, v)


def schwarz_apply(state, v):
    return state.apply(v)
