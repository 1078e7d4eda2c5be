"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""
import numpy as np
import scipy.sparse as sp


def check_csr(A, square=True, name="A"):
    """Return ``A`` as a canonical float64 CSR matrix.

    Canonical means sorted column indices and no duplicate entries, which the
    triangular kernels rely on. Dense arrays are accepted and converted.
    """
    if sp.issparse(A):
        A = sp.csr_matrix(A, dtype=np.float64)
    else:
        arr = np.asarray(A, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
        A = sp.csr_matrix(arr)
    if not A.has_canonical_format:
        A = A.copy()
        A.sum_duplicates()
        A.sort_indices()
    if A.shape[0] == 0 or A.shape[1] == 0:
        raise ValueError(f"{name} is empty")
    if square and A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def check_vector(x, n=None, name="x"):
    """Return ``x`` as a contiguous 1-D float64 array of length ``n``."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def check_diagonal(A, name="A"):
    """Check every structural diagonal entry of ``A`` is present and nonzero.

    Returns the array of diagonal positions inside ``A.data``.
    """
    from ._kernels import diagonal_pointers

    ptr = diagonal_pointers(A.indptr.astype(np.int64), A.indices.astype(np.int64))
    missing = np.flatnonzero(ptr < 0)
    if missing.size:
        raise ValueError(f"{name} has no structural diagonal in row {missing[0]}")
    zero = np.flatnonzero(A.data[ptr] == 0.0)
    if zero.size:
        raise ValueError(f"{name} has a zero diagonal in row {zero[0]}")
    return ptr
