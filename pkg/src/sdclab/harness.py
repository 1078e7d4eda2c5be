"""Fault-injection experiments: baseline, per-apply injection, overhead grids.

The procedure for one stack is:

1. solve fault-free and record K, the number of innermost preconditioner
   applications;
2. for every j in 1..K re-solve with the j-th application corrupted;
3. report the clamped percentage of extra applications, averaged over j,
   for every (scale factor, faulty subdomain count) cell.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np

from .detectors import (PROJECTION_BOUND, RESIDUAL_INCREASE, DetectorConfig,
                        ResilienceDetectors)
from .faults import ApplyCounter, FaultSpec, FaultyPreconditioner
from .linalg import ProblemSpec, generate
from .partition import partition_rows
from .preconditioners import make_preconditioner
from .solvers import SOLVERS, BreakdownError, InnerSolvePreconditioner

logger = logging.getLogger(__name__)

DEFAULT_SCALE_FACTORS = (1e-5, 1e-2, 1.0, 1e2, 1e5)
SIGN_SCALE_FACTORS = (-1e2, -1.0, -1e-2, 1e-2, 1.0, 1e2)
DEFAULT_FAULTY_COUNTS = (1, 2, 8, 16, 32)


class BaselineError(RuntimeError):
    """The fault-free solve did not converge, so overheads are undefined."""


@dataclass
class StackConfig:
    """Solver stack ``outer -> inner -> preconditioner``.

    ``inner=None`` gives a flat ``outer -> preconditioner`` solve; detectors
    then attach to the outer solver itself.
    """
    outer: str = "fgmres"
    inner: str = "gmres"
    preconditioner: str = "schwarz"
    precond_params: dict = field(default_factory=dict)
    n_subdomains: int = 32
    outer_tol: float = 1e-8
    outer_max_iters: int = 50
    outer_restart: int = None
    inner_tol: float = 1e-2
    inner_max_iters: int = 25
    inner_restart: int = None
    detectors: DetectorConfig = field(default_factory=DetectorConfig)

    def __post_init__(self):
        for name in (self.outer, self.inner):
            if name is not None and name not in SOLVERS:
                raise ValueError(f"unknown solver {name!r}")
        if self.inner is not None and self.outer != "fgmres":
            raise ValueError("a nested stack needs a flexible outer solver (fgmres)")
        if self.inner is not None and self.inner_max_iters is None:
            raise ValueError("inner_max_iters must be finite")

    def label(self):
        parts = [self.outer] + ([self.inner] if self.inner else []) + [self.preconditioner]
        return "->".join(parts)


def parse_stack(text, **overrides):
    """``"fgmres,cg,amg"`` -> StackConfig; two items mean a flat stack."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) == 3:
        outer, inner, pc = parts
    elif len(parts) == 2:
        (outer, pc), inner = parts, None
    else:
        raise ValueError(f"stack {text!r} must be 'outer,inner,preconditioner' or 'solver,preconditioner'")
    return StackConfig(outer=outer, inner=inner, preconditioner=pc, **overrides)


@dataclass
class Experiment:
    """Everything that is fixed across the runs of one sweep."""
    A: object
    b: np.ndarray
    partition: object
    preconditioner: object
    stack: StackConfig
    problem: ProblemSpec = None
    _detectors: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, problem, stack, matrix=None):
        if matrix is not None:
            A, b = matrix
        else:
            A, b = generate(problem)
        part = partition_rows(A.shape[0], stack.n_subdomains)
        params = dict(stack.precond_params)
        if stack.preconditioner == "schwarz":
            params.setdefault("n_subdomains", stack.n_subdomains)
        M = make_preconditioner(stack.preconditioner, **params).fit(A, part)
        return cls(A, b, part, M, stack, problem)

    def detectors(self, response):
        cfg = self.stack.detectors
        if not cfg.enabled:
            return None
        if response not in self._detectors:
            suite = ResilienceDetectors(replace(cfg, response=response))
            self._detectors[response] = suite.fit(self.A, self.preconditioner)
        return self._detectors[response]

    def solve(self, fault=None, response=None):
        """One solve; returns (x, stats, counter, wrapper).

        ``response`` defaults to the stack's configured detector response.
        """
        st = self.stack
        response = response or st.detectors.response
        fault = fault if fault is not None else FaultSpec(enabled=False)
        counter = ApplyCounter()
        det = self.detectors(response)
        if st.inner is None:
            M = FaultyPreconditioner(self.preconditioner, self.partition, fault, counter)
            solver = _make_solver(st.outer, st.outer_tol, st.outer_max_iters, st.outer_restart, det)
            wrapper = M
        else:
            inner = _make_solver(st.inner, st.inner_tol, st.inner_max_iters, st.inner_restart, det)
            if fault.index_mode == "inner_solve":
                stage = InnerSolvePreconditioner(inner, self.preconditioner).fit(self.A)
                M = FaultyPreconditioner(stage, self.partition, fault, counter)
            else:
                leaf = FaultyPreconditioner(self.preconditioner, self.partition, fault, counter)
                M = InnerSolvePreconditioner(inner, leaf).fit(self.A)
            wrapper = M if fault.index_mode == "inner_solve" else leaf
            solver = _make_solver(st.outer, st.outer_tol, st.outer_max_iters, st.outer_restart, None)
        x, stats = solver.solve(self.A, self.b, None, M)
        return x, stats, counter, wrapper


def _make_solver(kind, tol, max_iters, restart, detectors):
    cls = SOLVERS[kind]
    if kind == "cg":
        return cls(tol=tol, max_iters=max_iters)
    return cls(tol=tol, max_iters=max_iters, restart=restart, detectors=detectors)


def apply_count(stats, index_mode="apply"):
    return stats.inner_solves if index_mode == "inner_solve" else stats.preconditioner_applies


def overhead_percent(observed, baseline):
    """Extra applications relative to the fault-free count, clamped at 0."""
    if baseline < 1:
        raise ValueError("baseline must be >= 1")
    return max(0.0, (observed - baseline) / baseline * 100.0)


@dataclass
class Baseline:
    K: int
    stats: object


def run_baseline(exp, index_mode="apply", response="record_only"):
    """Fault-free solve; K counts innermost applies (or inner solves)."""
    _, stats, counter, _ = exp.solve(FaultSpec(enabled=False, index_mode=index_mode), response)
    if not stats.converged:
        raise BaselineError(
            f"fault-free {exp.stack.label()} did not converge in {stats.iterations} "
            f"outer iterations (last residual {stats.residual_history[-1]:.3e})")
    K = apply_count(stats, index_mode)
    if index_mode == "apply" and K != counter.count:
        raise RuntimeError(f"apply accounting mismatch: stats {K}, injector {counter.count}")
    if K < 1:
        raise BaselineError("fault-free solve applied the preconditioner zero times")
    return Baseline(K, stats)


@dataclass
class RunRecord:
    j: int
    applies: int
    overhead_pct: float
    converged: bool
    diverged: bool
    fired: bool
    norm_bound_events: int
    residual_events: int
    aborted_inner_solves: int


def budget_applies(exp, baseline, index_mode="apply"):
    """Applies a solve would spend running out its whole outer budget.

    Extrapolated from the baseline's applies per outer iteration.
    """
    per_iter = apply_count(baseline.stats, index_mode) / max(1, baseline.stats.iterations)
    return math.ceil(per_iter * exp.stack.outer_max_iters)


def run_injected(exp, baseline, spec, response="record_only"):
    """Re-solve with ``spec`` injected.

    Runs that fail to converge, or break down, are flagged ``diverged`` and
    charged at least the applies of a full outer budget.
    """
    try:
        _, stats, _, wrapper = exp.solve(spec, response)
        fired = wrapper.fired_at is not None
    except BreakdownError as exc:
        # Only the outer solver can raise here; inner breakdowns are absorbed.
        stats, fired = exc.stats, True
        stats.converged = False
    applies = apply_count(stats, spec.index_mode)
    diverged = not stats.converged
    if diverged:
        applies = max(applies, budget_applies(exp, baseline, spec.index_mode))
    return RunRecord(
        j=spec.target_apply_index,
        applies=applies,
        overhead_pct=overhead_percent(applies, baseline.K),
        converged=stats.converged,
        diverged=diverged,
        fired=fired,
        norm_bound_events=len(stats.events_of(PROJECTION_BOUND)),
        residual_events=len(stats.events_of(RESIDUAL_INCREASE)),
        aborted_inner_solves=stats.aborted_inner_solves,
    )


@dataclass
class SweepConfig:
    problem: ProblemSpec
    stack: StackConfig = field(default_factory=StackConfig)
    scale_factors: tuple = DEFAULT_SCALE_FACTORS
    faulty_counts: tuple = DEFAULT_FAULTY_COUNTS
    faulty_fractions: tuple = None
    selection: str = "lowest"
    index_mode: str = "apply"
    compare_abort: bool = True
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if any(s == 0 or not math.isfinite(s) for s in self.scale_factors):
            raise ValueError("scale factors must be finite and nonzero")
        if self.faulty_fractions is None:
            too_many = [f for f in self.faulty_counts if f > self.stack.n_subdomains]
            if too_many:
                raise ValueError(f"faulty counts {too_many} exceed {self.stack.n_subdomains} subdomains")

    def cells(self):
        """(scale factor, count, fraction) per cell, faulty dimension outermost."""
        k = self.stack.n_subdomains
        out = []
        if self.faulty_fractions is not None:
            for frac in self.faulty_fractions:
                f = FaultSpec(faulty_fraction=frac).resolve_count(k)
                out.extend((s, f, frac) for s in self.scale_factors)
        else:
            for f in self.faulty_counts:
                out.extend((s, f, f / k) for s in self.scale_factors)
        return out

    def fault(self, scale, count, fraction, j):
        kw = dict(faulty_fraction=fraction) if self.faulty_fractions is not None else dict(faulty_count=count)
        return FaultSpec(target_apply_index=j, scale_factor=scale, seed=self.seed,
                         selection=self.selection, index_mode=self.index_mode, **kw)


@dataclass
class CellResult:
    scale_factor: float
    faulty_count: int
    faulty_fraction: float
    baseline_applies: int
    records: list = field(default_factory=list)
    abort_records: list = field(default_factory=list)
    error: str = None

    @property
    def overheads(self):
        return [r.overhead_pct for r in self.records]

    @property
    def mean_overhead_pct(self):
        return _mean(self.overheads)

    @property
    def mean_overhead_pct_with_abort(self):
        return _mean([r.overhead_pct for r in self.abort_records]) if self.abort_records else None

    @property
    def frac_norm_bound_detected(self):
        return _mean([float(r.norm_bound_events > 0) for r in self.records])

    @property
    def frac_residual_detected(self):
        return _mean([float(r.residual_events > 0) for r in self.records])

    @property
    def diverged_count(self):
        return sum(r.diverged for r in self.records)


def _mean(values):
    return math.fsum(values) / len(values) if values else 0.0


@dataclass
class SweepResult:
    config: SweepConfig
    baseline: Baseline
    cells: list

    def cell(self, scale_factor, faulty_count):
        for c in self.cells:
            if c.scale_factor == scale_factor and c.faulty_count == faulty_count:
                return c
        raise KeyError((scale_factor, faulty_count))


# Per-process experiment cache for parallel sweeps.
_WORKER = {}


def _init_worker(problem, stack, matrix):
    _WORKER["exp"] = Experiment.build(problem, stack, matrix)


def _run_task(args):
    cfg, baseline, cell, j, response = args
    spec = cfg.fault(*cell, j)
    return run_injected(_WORKER["exp"], baseline, spec, response)


def sweep(cfg, matrix=None, progress=None):
    """Run every (cell, j) injection; deterministic for a given config."""
    exp = Experiment.build(cfg.problem, cfg.stack, matrix)
    baseline = run_baseline(exp, cfg.index_mode)
    logger.info("baseline %s: K=%d", cfg.stack.label(), baseline.K)
    responses = ["record_only"]
    if cfg.compare_abort and cfg.stack.detectors.enabled:
        responses.append("abort_inner")
    cells = [CellResult(s, f, frac, baseline.K) for s, f, frac in cfg.cells()]
    tasks = [(cfg, baseline, (c.scale_factor, c.faulty_count, c.faulty_fraction), j, resp)
             for c in cells for resp in responses for j in range(1, baseline.K + 1)]

    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs, initializer=_init_worker,
                                 initargs=(cfg.problem, cfg.stack, matrix)) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, baseline.K // 4)))
    else:
        results = []
        for n_done, (cfg_, base_, cell, j, resp) in enumerate(tasks, 1):
            results.append(run_injected(exp, base_, cfg_.fault(*cell, j), resp))
            if progress is not None:
                progress(n_done, len(tasks))

    it = iter(results)
    for c in cells:
        for resp in responses:
            recs = [next(it) for _ in range(baseline.K)]
            if resp == "record_only":
                c.records = recs
            else:
                c.abort_records = recs
    return SweepResult(cfg, baseline, cells)


def weak_scaling_problem(problem, k, per_rank=2500):
    """Problem whose size grows with ``k`` at ``per_rank`` unknowns per subdomain.

    The grid is nx by (k * per_rank / nx) with nx the largest divisor of
    ``per_rank`` not above its square root, so block rows line up with ranks.
    """
    if problem.kind not in ("poisson2d", "convdiff2d"):
        raise ValueError("weak scaling needs a generated 2-D problem")
    nx = max(d for d in range(1, math.isqrt(per_rank) + 1) if per_rank % d == 0)
    if nx < 2:
        raise ValueError(f"per_rank={per_rank} has no usable grid width")
    return replace(problem, dims=(nx, k * per_rank // nx))


def scaling_sweep(cfg, mode, subdomain_counts, per_rank=2500, progress=None):
    """Strong (fixed problem) or weak (fixed unknowns per subdomain) sweeps.

    Returns ``{k: SweepResult}``. Faulty counts above ``k`` are dropped in
    strong mode.
    """
    out = {}
    for k in subdomain_counts:
        stack = replace(cfg.stack, n_subdomains=k)
        if mode == "weak":
            problem = weak_scaling_problem(cfg.problem, k, per_rank)
        elif mode == "strong":
            problem = cfg.problem
        else:
            raise ValueError(f"unknown scaling mode {mode!r}")
        counts = tuple(f for f in cfg.faulty_counts if f <= k)
        sub = replace(cfg, problem=problem, stack=stack, faulty_counts=counts)
        out[k] = sweep(sub, progress=progress)
    return out
