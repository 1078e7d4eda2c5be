import numpy as np
import pytest

from sdclab.detectors import (PROJECTION_BOUND, RESIDUAL_INCREASE, DetectorConfig,
                              ResilienceDetectors, check_projection_bound,
                              check_residual_monotone, respond)
from sdclab.faults import FaultSpec
from sdclab.harness import Experiment, StackConfig
from sdclab.linalg import ProblemSpec, convdiff2d
from sdclab.preconditioners import Ilu0Preconditioner
from sdclab.solvers import Gmres


def test_projection_bound_predicate():
    assert not check_projection_bound([1.0, -2.0], 1.0, 2.0)
    assert check_projection_bound([1.0, -2.1], 1.0, 2.0)


def test_residual_monotone_predicate():
    assert not check_residual_monotone([3.0, 2.0], 2.0)
    assert check_residual_monotone([3.0, 2.0], 2.5)
    assert not check_residual_monotone([3.0, 2.0], 2.0 * (1 + 1e-13))


def test_respond_policies():
    assert respond("record_only", object()) == "continue"
    assert respond("abort_inner", object()) == "abort"
    assert respond("abort_inner", None) == "continue"
    with pytest.raises(ValueError):
        respond("panic", object())


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(residual_check_interval=0)
    with pytest.raises(ValueError):
        DetectorConfig(response="ignore")
    assert not DetectorConfig().enabled


def test_bound_dominates_true_operator_norms():
    A = convdiff2d(10, 10)
    M = Ilu0Preconditioner().fit(A)
    det = ResilienceDetectors(DetectorConfig(norm_bound_enabled=True)).fit(A, M)
    Minv = np.linalg.inv((M.factors_.L @ M.factors_.U).toarray())
    assert det.a_bound_ >= np.linalg.norm(A.toarray(), 2)
    assert det.z_bound_ >= np.linalg.norm(Minv, 2)


def _stack(response="record_only", interval=1):
    det = DetectorConfig(norm_bound_enabled=True, residual_check_enabled=True,
                         residual_check_interval=interval, response=response)
    stack = StackConfig(inner="gmres", preconditioner="ilu0", n_subdomains=8, detectors=det)
    return Experiment.build(ProblemSpec("convdiff2d", (16, 16)), stack)


def test_fault_free_runs_raise_no_events():
    exp = _stack()
    _, stats, _, _ = exp.solve()
    assert stats.converged
    assert stats.detector_events == []


# With interval-1 checks under GMRES, applies alternate: odd j feeds Arnoldi
# step (j + 1) / 2, even j computes that step's explicit residual.

def test_huge_fault_on_all_ranks_trips_projection_bound_that_iteration():
    exp = _stack()
    _, stats, _, w = exp.solve(FaultSpec(target_apply_index=3, faulty_count=8, scale_factor=1e5))
    assert w.fired_at == 3
    events = stats.events_of(PROJECTION_BOUND)
    assert events and events[0].solve_id == 1 and events[0].iteration == 2


@pytest.mark.parametrize("j", [3, 4, 7, 8])
def test_residual_check_flags_at_or_after_fault(j):
    exp = _stack()
    _, stats, _, _ = exp.solve(FaultSpec(target_apply_index=j, faulty_count=1, scale_factor=1e2))
    events = stats.events_of(RESIDUAL_INCREASE)
    assert events
    assert (events[0].solve_id, events[0].iteration) >= (1, (j + 1) // 2)


def test_abort_returns_last_verified_and_outer_converges():
    exp = _stack("abort_inner")
    x, stats, _, _ = exp.solve(FaultSpec(target_apply_index=3, faulty_count=8, scale_factor=1e5))
    assert stats.aborted_inner_solves >= 1
    assert stats.converged and np.allclose(x, 1.0, atol=1e-6)


def test_abort_on_first_iteration_returns_zero_start():
    A = convdiff2d(8, 8)
    M = Ilu0Preconditioner().fit(A)
    det = ResilienceDetectors(DetectorConfig(norm_bound_enabled=True, response="abort_inner")).fit(A, M)

    class Huge:
        def apply(self, v):
            return 1e8 * M.apply(v)

    z, stats = Gmres(tol=1e-2, max_iters=5, detectors=det).solve(A, A @ np.ones(64), M=Huge())
    assert stats.aborted_inner_solves == 1
    assert not np.any(z)
