import math
from dataclasses import replace

import numpy as np
import pytest

from sdclab.detectors import DetectorConfig
from sdclab.faults import FaultSpec
from sdclab.harness import (BaselineError, Experiment, StackConfig, SweepConfig,
                            overhead_percent, parse_stack, run_baseline, run_injected,
                            scaling_sweep, sweep, weak_scaling_problem)
from sdclab.linalg import ProblemSpec


@pytest.mark.parametrize("obs,base,expected", [(102, 100, 2.0), (100, 100, 0.0), (97, 100, 0.0),
                                               (150, 100, 50.0)])
def test_overhead_percent(obs, base, expected):
    assert overhead_percent(obs, base) == pytest.approx(expected)


def test_overhead_needs_positive_baseline():
    with pytest.raises(ValueError):
        overhead_percent(3, 0)


def test_parse_stack():
    s = parse_stack("fgmres,cg,amg")
    assert (s.outer, s.inner, s.preconditioner) == ("fgmres", "cg", "amg")
    assert s.label() == "fgmres->cg->amg"
    flat = parse_stack("gmres,ilu0")
    assert flat.inner is None
    for bad in ("gmres", "gmres,cg,amg", "fgmres,bicg,amg", "a,b,c,d"):
        with pytest.raises(ValueError):
            parse_stack(bad)


SMALL = ProblemSpec("convdiff2d", (12, 12))


def small_stack(**kw):
    return StackConfig(**{"n_subdomains": 4, "inner_max_iters": 10, **kw})


def test_baseline_is_deterministic_and_disabled_fault_is_bitwise_baseline():
    exp = Experiment.build(SMALL, small_stack())
    b1, b2 = run_baseline(exp), run_baseline(exp)
    assert b1.K == b2.K == b1.stats.preconditioner_applies
    x0, s0, _, _ = exp.solve()
    x1, s1, _, w = exp.solve(FaultSpec(enabled=False, scale_factor=1e5, faulty_count=4))
    assert np.array_equal(x0, x1) and s0 == s1 and w.fired_at is None


def test_identity_stack_baseline_is_small():
    exp = Experiment.build(ProblemSpec("poisson2d", (4, 4)),
                           StackConfig(outer="gmres", inner=None, preconditioner="identity",
                                       n_subdomains=2))
    assert run_baseline(exp).K <= 17


def test_baseline_failure_raises():
    exp = Experiment.build(SMALL, small_stack(outer_max_iters=1, inner_max_iters=1))
    with pytest.raises(BaselineError):
        run_baseline(exp)


def test_single_faulty_rank_at_unit_scale_is_cheap():
    exp = Experiment.build(SMALL, small_stack())
    base = run_baseline(exp)
    extra = [run_injected(exp, base, FaultSpec(target_apply_index=j, faulty_count=1)).applies - base.K
             for j in range(1, base.K + 1)]
    assert np.mean(extra) <= 0.25 * base.K


def test_injected_record_fields():
    exp = Experiment.build(SMALL, small_stack())
    base = run_baseline(exp)
    rec = run_injected(exp, base, FaultSpec(target_apply_index=1, faulty_count=4, scale_factor=1e5))
    assert rec.fired and rec.j == 1 and rec.overhead_pct >= 0


def test_nested_stack_needs_flexible_outer():
    with pytest.raises(ValueError):
        StackConfig(outer="gmres", inner="gmres")


def test_sweep_without_corruption_is_all_zero():
    cfg = SweepConfig(SMALL, small_stack(), scale_factors=(1.0,), faulty_counts=(0,))
    res = sweep(cfg)
    (cell,) = res.cells
    assert len(cell.records) == res.baseline.K
    assert cell.mean_overhead_pct == 0.0 and cell.diverged_count == 0


@pytest.fixture(scope="module")
def small_sweep():
    det = DetectorConfig(norm_bound_enabled=True, residual_check_enabled=True)
    cfg = SweepConfig(SMALL, small_stack(detectors=det), scale_factors=(1e-2, 1.0, 1e5),
                      faulty_counts=(1, 4))
    return sweep(cfg)


def test_sweep_shape_and_runs_per_cell(small_sweep):
    res = small_sweep
    K = res.baseline.K
    assert len(res.cells) == 6
    for c in res.cells:
        assert [r.j for r in c.records] == list(range(1, K + 1))
        assert [r.j for r in c.abort_records] == list(range(1, K + 1))
        assert all(r.overhead_pct >= 0 for r in c.records)
        assert 0 <= c.frac_norm_bound_detected <= 1 and 0 <= c.frac_residual_detected <= 1
        assert c.mean_overhead_pct == pytest.approx(math.fsum(c.overheads) / K)


def test_abort_never_costs_more_per_cell(small_sweep):
    for c in small_sweep.cells:
        assert c.mean_overhead_pct_with_abort <= c.mean_overhead_pct + 1e-12


def test_parallel_sweep_matches_serial(small_sweep):
    cfg = replace(small_sweep.config, jobs=2)
    par = sweep(cfg)
    for a, b in zip(small_sweep.cells, par.cells):
        assert a.records == b.records and a.abort_records == b.abort_records


def test_fraction_cells():
    cfg = SweepConfig(SMALL, small_stack(), scale_factors=(1.0,), faulty_fractions=(0.25, 1.0),
                      compare_abort=False)
    assert [(f, frac) for _, f, frac in cfg.cells()] == [(1, 0.25), (4, 1.0)]


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(SMALL, small_stack(), scale_factors=(0.0,))
    with pytest.raises(ValueError):
        SweepConfig(SMALL, small_stack(), faulty_counts=(8,))


def test_weak_scaling_fixes_rows_per_subdomain():
    for k in (2, 4, 8):
        p = weak_scaling_problem(ProblemSpec("poisson2d", (4, 4)), k, per_rank=100)
        assert p.dims[0] * p.dims[1] == 100 * k
    with pytest.raises(ValueError):
        weak_scaling_problem(ProblemSpec("poisson3d", (4, 4, 4)), 2)


def test_scaling_sweeps():
    cfg = SweepConfig(ProblemSpec("poisson2d", (10, 10)),
                      StackConfig(inner="cg", preconditioner="jacobi", n_subdomains=4,
                                  inner_max_iters=10),
                      scale_factors=(1.0,), faulty_counts=(1, 4))
    strong = scaling_sweep(cfg, "strong", (2, 4))
    assert sorted(strong) == [2, 4]
    assert [c.faulty_count for c in strong[2].cells] == [1]
    assert [c.faulty_fraction for c in strong[4].cells] == [0.25, 1.0]
    weak = scaling_sweep(cfg, "weak", (2, 4), per_rank=36)
    assert weak[4].config.problem.dims == (6, 24)
