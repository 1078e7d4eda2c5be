import warnings

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sdclab.linalg import convdiff2d, poisson2d
from sdclab.partition import partition_rows
from sdclab.preconditioners import (AmgPreconditioner, FactorizationError, Ilu0Preconditioner,
                                    IdentityPreconditioner, JacobiPreconditioner,
                                    SchwarzPreconditioner, make_preconditioner)
from sdclab.preconditioners.amg import (aggregate, amg_setup, gauss_seidel_sweep,
                                        strength_graph)
from sdclab.preconditioners.ilu import block_diagonal, ilu0_setup

from conftest import random_dd_matrix


def dense_ilu0(D):
    """Textbook IKJ ILU(0) on a dense array, restricted to the nonzero pattern."""
    a = D.astype(float).copy()
    n = a.shape[0]
    pattern = D != 0
    for i in range(1, n):
        for k in range(i):
            if not pattern[i, k]:
                continue
            a[i, k] /= a[k, k]
            for j in range(k + 1, n):
                if pattern[i, j]:
                    a[i, j] -= a[i, k] * a[k, j]
    return np.where(pattern, a, 0.0)


@given(st.integers(2, 30), st.integers(0, 10_000))
def test_ilu0_matches_dense_reference(n, seed):
    A = random_dd_matrix(n, 0.25, seed)
    f = ilu0_setup(A)
    assert np.allclose(f.packed().toarray(), dense_ilu0(A.toarray()), rtol=1e-12, atol=1e-12)


@given(st.integers(2, 30), st.integers(0, 10_000))
def test_ilu0_reproduces_a_on_its_pattern(n, seed):
    A = random_dd_matrix(n, 0.25, seed)
    f = ilu0_setup(A)
    LU = (f.L @ f.U).toarray()
    mask = A.toarray() != 0
    assert np.allclose(LU[mask], A.toarray()[mask], rtol=1e-11, atol=1e-11)
    # No fill outside the pattern.
    assert f.packed().nnz == A.nnz


def test_ilu0_is_exact_lu_on_tridiagonal():
    n = 200
    A = sp.diags([-1.0, 2.5, -1.2], [-1, 0, 1], shape=(n, n), format="csr")
    M = Ilu0Preconditioner().fit(A)
    v = np.random.default_rng(0).standard_normal(n)
    assert np.allclose(A @ M.apply(v), v, atol=1e-12)


def test_apply_transpose_is_adjoint():
    A = convdiff2d(10, 10)
    part = partition_rows(100, 4)
    rng = np.random.default_rng(3)
    for M in (Ilu0Preconditioner().fit(A), SchwarzPreconditioner(4).fit(A, part),
              AmgPreconditioner(coarse_threshold=10).fit(A), JacobiPreconditioner().fit(A)):
        u, v = rng.standard_normal(100), rng.standard_normal(100)
        assert u @ M.apply(v) == pytest.approx(M.apply_transpose(u) @ v, rel=1e-10)


def test_zero_pivot_names_row_and_subdomain():
    A = sp.csr_matrix(np.array([[1.0, 1.0, 0.0, 0.0],
                                [1.0, 1.0, 0.0, 0.0],
                                [0.0, 0.0, 2.0, 0.0],
                                [0.0, 0.0, 0.0, 2.0]]))
    with pytest.raises(FactorizationError) as exc:
        ilu0_setup(A)
    assert exc.value.row == 1
    with pytest.raises(FactorizationError, match="subdomain 0"):
        SchwarzPreconditioner(2).fit(A, partition_rows(4, 2))


def test_missing_diagonal_rejected():
    A = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(ValueError):
        Ilu0Preconditioner().fit(A)


def test_schwarz_equals_independent_block_ilu():
    A = convdiff2d(8, 8)
    part = partition_rows(64, 5)
    M = SchwarzPreconditioner(5).fit(A, part)
    v = np.random.default_rng(1).standard_normal(64)
    z = M.apply(v)
    for a, b in part.segments():
        block = A[a:b, a:b]
        local = Ilu0Preconditioner().fit(block).apply(v[a:b])
        assert np.allclose(z[a:b], local, rtol=1e-13, atol=1e-14)


@given(st.integers(1, 16), st.integers(0, 63))
def test_schwarz_locality_set_equality(k, idx):
    """Perturbing one input entry changes output only inside its own subdomain."""
    A = convdiff2d(8, 8)
    part = partition_rows(64, k)
    M = SchwarzPreconditioner(k).fit(A, part)
    v = np.random.default_rng(idx).standard_normal(64)
    e = np.zeros(64)
    e[idx] = 1.0
    changed = set(np.flatnonzero(M.apply(v + e) != M.apply(v)))
    rank = int(np.searchsorted(part.offsets, idx, side="right") - 1)
    a, b = part.segment(rank)
    # Changed rows all lie in the owning subdomain.
    assert changed <= set(range(a, b))
    # Block-diagonal support of column idx of the exact block inverse, which is
    # what ILU(0) reaches through its triangular solves.
    D = block_diagonal(A, part).toarray()[a:b, a:b]
    reach = set(a + np.flatnonzero(np.abs(np.linalg.inv(D)[:, idx - a]) > 0))
    assert changed <= reach


def test_schwarz_single_subdomain_equals_global_ilu():
    A = convdiff2d(6, 6)
    v = np.arange(36.0)
    z1 = SchwarzPreconditioner(1).fit(A).apply(v)
    z2 = Ilu0Preconditioner().fit(A).apply(v)
    assert np.array_equal(z1, z2)


def test_jacobi_and_identity():
    A = poisson2d(4, 4)
    v = np.arange(16.0)
    assert np.array_equal(JacobiPreconditioner().fit(A).apply(v), v / 4.0)
    assert np.array_equal(IdentityPreconditioner().fit(A).apply(v), v)


def test_gauss_seidel_matches_triangular_solve():
    A = convdiff2d(5, 5)
    D = A.toarray()
    rng = np.random.default_rng(2)
    x0, b = rng.standard_normal(25), rng.standard_normal(25)
    x = x0.copy()
    gauss_seidel_sweep(A, x, b, "forward")
    ref = sla.solve_triangular(np.tril(D), b - np.triu(D, 1) @ x0, lower=True)
    assert np.allclose(x, ref, rtol=1e-13)
    x = x0.copy()
    gauss_seidel_sweep(A, x, b, "backward")
    ref = sla.solve_triangular(np.triu(D), b - np.tril(D, -1) @ x0, lower=False)
    assert np.allclose(x, ref, rtol=1e-13)


def test_aggregation_covers_every_node():
    A = poisson2d(12, 12)
    agg, n_agg = aggregate(strength_graph(A, 0.25))
    assert agg.min() == 0 and agg.max() == n_agg - 1
    assert len(np.unique(agg)) == n_agg
    assert n_agg < 144 / 3


def test_strength_graph_threshold():
    A = sp.csr_matrix(np.array([[4.0, -1.0, -0.1], [-1.0, 4.0, 0.0], [-0.1, 0.0, 4.0]]))
    S = strength_graph(A, 0.25).toarray()
    assert S[0, 1] and S[1, 0]
    assert not S[0, 2]


def test_amg_hierarchy_is_galerkin():
    A = poisson2d(16, 16)
    h = amg_setup(A, coarse_threshold=20)
    assert h.sizes[0] == 256 and h.sizes == sorted(h.sizes, reverse=True)
    for fine, coarse in zip(h.levels, h.levels[1:]):
        ref = (fine.P.T @ fine.A @ fine.P).toarray()
        assert np.allclose(coarse.A.toarray(), ref, rtol=1e-12, atol=1e-12)


def test_amg_vcycle_contracts_error():
    A = poisson2d(32, 32)
    M = AmgPreconditioner().fit(A)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1024)
    b = np.zeros(1024)
    # Stationary iteration e <- (I - M A) e with one V-cycle per step.
    e = x.copy()
    for _ in range(5):
        e = e - M.apply(A @ e - b)
    assert np.linalg.norm(e) < 0.05 * np.linalg.norm(x)


def test_amg_single_level_is_direct_solve():
    A = poisson2d(4, 4)
    M = AmgPreconditioner(coarse_threshold=64).fit(A)
    v = np.arange(16.0)
    assert np.allclose(A @ M.apply(v), v)


def test_amg_stagnation_warns():
    A = sp.identity(100, format="csr") * 2.0
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        M = AmgPreconditioner(coarse_threshold=10).fit(A)
    assert any(issubclass(x.category, RuntimeWarning) for x in w)
    assert np.allclose(M.apply(np.ones(100)), 0.5)


def test_estimator_api():
    M = make_preconditioner("amg", coarse_threshold=32)
    assert M.get_params()["coarse_threshold"] == 32
    assert clone(M).get_params() == M.get_params()
    with pytest.raises(NotFittedError):
        M.apply(np.ones(4))
    with pytest.raises(NotImplementedError):
        make_preconditioner("iluk")
    with pytest.raises(NotImplementedError):
        Ilu0Preconditioner(level=1).fit(poisson2d(3, 3))
    with pytest.raises(ValueError):
        make_preconditioner("nonsense")


def test_apply_is_pure():
    A = convdiff2d(8, 8)
    for kind in ("ilu0", "schwarz", "amg", "jacobi"):
        M = make_preconditioner(kind).fit(A, partition_rows(64, 4))
        v = np.linspace(-1, 1, 64)
        assert np.array_equal(M.apply(v), M.apply(v))
