"""Matrix Market coordinate I/O (real general/symmetric only)."""
import numpy as np
import scipy.sparse as sp

from .validation import check_csr


class MatrixMarketError(ValueError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


def mm_read(path):
    """Read a coordinate real matrix; symmetric storage is expanded."""
    path = str(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise MatrixMarketError(path, 1, "missing %%MatrixMarket header")
    obj, fmt, field, symmetry = (h.lower() for h in header[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(path, 1, f"unsupported object/format {obj} {fmt}")
    if field not in ("real", "double", "integer"):
        raise MatrixMarketError(path, 1, f"unsupported field {field!r}")
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(path, 1, f"unsupported symmetry {symmetry!r}")

    lineno = 1
    size = None
    for lineno in range(2, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if line and not line.startswith("%"):
            size = line.split()
            break
    if size is None or len(size) != 3:
        raise MatrixMarketError(path, lineno, "bad or missing size line")
    try:
        n_rows, n_cols, nnz = (int(s) for s in size)
    except ValueError:
        raise MatrixMarketError(path, lineno, "non-integer size line") from None

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    k = 0
    for lineno in range(lineno + 1, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line or line.startswith("%"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise MatrixMarketError(path, lineno, f"expected 3 fields, got {len(parts)}")
        if k >= nnz:
            raise MatrixMarketError(path, lineno, "more entries than declared")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(path, lineno, f"cannot parse entry {line!r}") from None
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixMarketError(path, lineno, f"index ({i}, {j}) out of range")
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise MatrixMarketError(path, len(lines), f"declared {nnz} entries, found {k}")

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols))
    return check_csr(A, square=False)


def mm_write(A, path, comment=None):
    """Write ``A`` as general coordinate real with round-trip precision."""
    A = check_csr(A, square=False)
    coo = A.tocoo()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            # repr() is the shortest string that round-trips a float64.
            fh.write(f"{i + 1} {j + 1} {float(v)!r}\n")
