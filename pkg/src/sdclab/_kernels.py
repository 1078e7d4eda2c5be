"""Compiled CSR loops shared by the ILU(0) and Gauss-Seidel code.

All kernels take the raw ``indptr``/``indices``/``data`` triplet of a CSR
matrix with sorted column indices. ``diag_ptr[i]`` is the position of the
diagonal entry of row ``i`` inside ``data``.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def diagonal_pointers(indptr, indices):
    n = indptr.shape[0] - 1
    out = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                out[i] = p
                break
    return out


@njit(cache=True)
def ilu0_factor(indptr, indices, data, diag_ptr, pivot_tol):
    """IKJ ILU(0) in place on ``data``. Returns the failing row or -1."""
    n = indptr.shape[0] - 1
    marker = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        start, end = indptr[i], indptr[i + 1]
        for p in range(start, end):
            marker[indices[p]] = p
        for p in range(start, end):
            k = indices[p]
            if k >= i:
                break
            pivot = data[diag_ptr[k]]
            lik = data[p] / pivot
            data[p] = lik
            for q in range(diag_ptr[k] + 1, indptr[k + 1]):
                pos = marker[indices[q]]
                if pos != -1:
                    data[pos] -= lik * data[q]
        if abs(data[diag_ptr[i]]) < pivot_tol:
            return i
        for p in range(start, end):
            marker[indices[p]] = -1
    return -1


@njit(cache=True)
def lu_solve_csr(indptr, indices, data, diag_ptr, b):
    """Solve (L U) x = b with unit-lower L and upper U stored together."""
    n = b.shape[0]
    x = b.copy()
    for i in range(n):
        acc = x[i]
        for p in range(indptr[i], diag_ptr[i]):
            acc -= data[p] * x[indices[p]]
        x[i] = acc
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for p in range(diag_ptr[i] + 1, indptr[i + 1]):
            acc -= data[p] * x[indices[p]]
        x[i] = acc / data[diag_ptr[i]]
    return x


@njit(cache=True)
def lu_solve_transpose_csr(indptr, indices, data, diag_ptr, b):
    """Solve (L U)^T x = b, i.e. U^T then L^T, column-oriented on CSR."""
    n = b.shape[0]
    y = b.copy()
    for i in range(n):
        yi = y[i] / data[diag_ptr[i]]
        y[i] = yi
        for p in range(diag_ptr[i] + 1, indptr[i + 1]):
            y[indices[p]] -= data[p] * yi
    for i in range(n - 1, -1, -1):
        yi = y[i]
        for p in range(indptr[i], diag_ptr[i]):
            y[indices[p]] -= data[p] * yi
    return y


@njit(cache=True)
def gauss_seidel_forward(indptr, indices, data, diag_ptr, x, b):
    n = b.shape[0]
    for i in range(n):
        acc = b[i]
        for p in range(indptr[i], indptr[i + 1]):
            if p != diag_ptr[i]:
                acc -= data[p] * x[indices[p]]
        x[i] = acc / data[diag_ptr[i]]


@njit(cache=True)
def gauss_seidel_backward(indptr, indices, data, diag_ptr, x, b):
    n = b.shape[0]
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for p in range(indptr[i], indptr[i + 1]):
            if p != diag_ptr[i]:
                acc -= data[p] * x[indices[p]]
        x[i] = acc / data[diag_ptr[i]]
