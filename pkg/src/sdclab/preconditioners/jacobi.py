from ..validation import check_csr, check_diagonal
from .base import Preconditioner


def jacobi_apply(diag, v):
    return v / diag


class JacobiPreconditioner(Preconditioner):
    """Point Jacobi, z[i] = v[i] / A[i, i]."""

    def fit(self, A, partition=None):
        A = check_csr(A)
        ptr = check_diagonal(A)
        self.diag_ = A.data[ptr].copy()
        self.n_ = A.shape[0]
        return self

    def _apply(self, v):
        return jacobi_apply(self.diag_, v)

    _apply_transpose = _apply
