"""Vector kernels, operator norms and test-problem generators."""
from dataclasses import dataclass
import math

import numpy as np
import scipy.sparse as sp

from .validation import check_csr, check_vector

__all__ = [
    "ProblemSpec", "spmv", "dot", "norm2", "axpy", "scale",
    "matrix_norm_bound", "spectral_norm_estimate", "generate",
    "poisson2d", "poisson3d", "convdiff2d", "parse_problem",
]


def spmv(A, x):
    """y = A x with a dimension check."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise ValueError(f"spmv: x has shape {x.shape}, A has {A.shape[1]} columns")
    return A @ x


def dot(x, y):
    # np.add.reduce uses a fixed pairwise tree, so the result only depends on
    # the inputs, never on threading.
    if x.shape != y.shape:
        raise ValueError(f"dot: shapes {x.shape} and {y.shape} differ")
    return float(np.add.reduce(x * y))


def norm2(x):
    return math.sqrt(dot(x, x))


def axpy(a, x, y):
    """Return a*x + y."""
    if x.shape != y.shape:
        raise ValueError(f"axpy: shapes {x.shape} and {y.shape} differ")
    return a * x + y


def scale(a, x):
    return a * x


def spectral_norm_estimate(A, iters=100, seed=0, rtol=1e-10):
    """Power iteration on A^T A. Converges to ||A||_2 from below."""
    A = check_csr(A, square=False)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[1])
    x /= norm2(x)
    est = 0.0
    for _ in range(iters):
        y = A.T @ (A @ x)
        ny = norm2(y)
        if ny == 0.0:
            return 0.0
        new = math.sqrt(ny)
        x = y / ny
        if abs(new - est) <= rtol * new:
            est = new
            break
        est = new
    return est


def matrix_norm_bound(A, method="guaranteed"):
    """Upper bound on ||A||_2.

    ``"guaranteed"`` returns sqrt(||A||_1 ||A||_inf), which is never below the
    spectral norm. ``"power"`` returns a power-iteration estimate instead;
    it is tighter but can undershoot.
    """
    A = check_csr(A, square=False)
    if method == "power":
        return spectral_norm_estimate(A)
    if method != "guaranteed":
        raise ValueError(f"unknown norm bound method {method!r}")
    absA = abs(A)
    norm1 = float(np.max(np.asarray(absA.sum(axis=0)).ravel()))
    norminf = float(np.max(np.asarray(absA.sum(axis=1)).ravel()))
    return math.sqrt(norm1 * norminf)


# ---------------------------------------------------------------------------
# Test problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    """What linear system to build.

    ``dims`` is (nx, ny) or (nx, ny, nz). ``velocity`` only matters for
    ``convdiff2d`` and ``path`` only for ``matrix-market-file``.
    """
    kind: str
    dims: tuple = ()
    velocity: tuple = (10.0, 0.0)
    path: str = None

    KINDS = ("poisson2d", "poisson3d", "convdiff2d", "matrix-market-file")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")

    def label(self):
        if self.kind == "matrix-market-file":
            return f"mm:{self.path}"
        return f"{self.kind}:{'x'.join(str(d) for d in self.dims)}"


def _laplace_1d(n):
    return sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n), format="csr")


def _check_dims(dims, ndim):
    if len(dims) != ndim:
        raise ValueError(f"expected {ndim} grid dimensions, got {dims}")
    for d in dims:
        if int(d) < 2:
            raise ValueError(f"grid dimension {d} is below the minimum of 2")
    return tuple(int(d) for d in dims)


def poisson2d(nx, ny=None):
    """5-point Laplacian on an nx-by-ny grid, row-major ordering, Dirichlet."""
    nx, ny = _check_dims((nx, nx if ny is None else ny), 2)
    A = sp.kron(sp.identity(ny), _laplace_1d(nx)) + sp.kron(_laplace_1d(ny), sp.identity(nx))
    return check_csr(A)


def poisson3d(nx, ny=None, nz=None):
    ny = nx if ny is None else ny
    nz = nx if nz is None else nz
    nx, ny, nz = _check_dims((nx, ny, nz), 3)
    Ix, Iy, Iz = sp.identity(nx), sp.identity(ny), sp.identity(nz)
    A = (sp.kron(Iz, sp.kron(Iy, _laplace_1d(nx)))
         + sp.kron(Iz, sp.kron(_laplace_1d(ny), Ix))
         + sp.kron(_laplace_1d(nz), sp.kron(Iy, Ix)))
    return check_csr(A)


def _upwind_1d(n, v, h):
    # First-order upwind difference of v*du/dx, scaled by h^2.
    c = abs(v) * h
    off = -1 if v >= 0 else 1
    return sp.diags([c, -c], [0, off], shape=(n, n))


def convdiff2d(nx, ny=None, velocity=(10.0, 0.0)):
    """-lap(u) + w . grad(u) with upwinded convection, scaled by h^2.

    The diffusion part is exactly the 5-point stencil of :func:`poisson2d`, so
    a zero velocity reproduces it.
    """
    nx, ny = _check_dims((nx, nx if ny is None else ny), 2)
    vx, vy = (float(v) for v in velocity)
    hx, hy = 1.0 / (nx + 1), 1.0 / (ny + 1)
    conv = (sp.kron(sp.identity(ny), _upwind_1d(nx, vx, hx))
            + sp.kron(_upwind_1d(ny, vy, hy), sp.identity(nx)))
    A = poisson2d(nx, ny) + conv
    A = check_csr(A)
    A.eliminate_zeros()
    return A


def generate(spec):
    """Build (A, b) for ``spec`` with b = A @ ones."""
    if spec.kind == "poisson2d":
        A = poisson2d(*spec.dims)
    elif spec.kind == "poisson3d":
        A = poisson3d(*spec.dims)
    elif spec.kind == "convdiff2d":
        A = convdiff2d(*spec.dims, velocity=spec.velocity)
    else:
        from .mmio import mm_read

        if not spec.path:
            raise ValueError("matrix-market-file problem needs a path")
        A = mm_read(spec.path)
    b = A @ np.ones(A.shape[1])
    return A, check_vector(b)


def parse_problem(text, velocity=(10.0, 0.0)):
    """Parse ``"poisson2d:32x32"`` style problem strings."""
    kind, _, dims = text.partition(":")
    kind = kind.strip()
    if kind in ("mm", "matrix-market-file"):
        return ProblemSpec("matrix-market-file", path=dims)
    if not dims:
        raise ValueError(f"problem {text!r} needs grid dimensions, e.g. {kind}:32x32")
    try:
        sizes = tuple(int(d) for d in dims.lower().split("x"))
    except ValueError:
        raise ValueError(f"cannot parse grid dimensions in {text!r}") from None
    return ProblemSpec(kind, sizes, velocity=tuple(velocity))
