"""INI-style experiment configuration.

Example (every key is optional; defaults shown)::

    [problem]
    kind = convdiff2d          ; poisson2d | poisson3d | convdiff2d | matrix-market-file
    dims = 32x32
    velocity = 10, 0           ; convdiff2d only
    path =                     ; matrix-market-file only

    [stack]
    solvers = fgmres,gmres,schwarz   ; outer,inner,preconditioner or solver,preconditioner
    subdomains = 32
    outer_tol = 1e-8
    outer_max_iters = 50
    outer_restart =
    inner_tol = 1e-2
    inner_max_iters = 25
    inner_restart =

    [preconditioner]           ; passed to the preconditioner constructor
    coarse_threshold = 64

    [detectors]
    norm_bound = false
    residual_check = false
    interval = 1
    growth_tolerance = 1e-12
    response = record_only     ; record_only | abort_inner
    matrix_bound = guaranteed  ; guaranteed | power
    precond_bound_safety = 1.5

    [sweep]
    scale_factors = 1e-5, 1e-2, 1, 1e2, 1e5
    faulty_counts = 1, 2, 8, 16, 32
    faulty_fractions =         ; e.g. 0.04, 0.25, 0.5, 1.0 (replaces faulty_counts)
    selection = lowest         ; lowest | random
    index_mode = apply         ; apply | inner_solve
    compare_abort = true
    signs = false              ; true sweeps +-{1e-2, 1, 1e2}
    seed = 0
    heatmap = false

    [scaling]
    mode = none                ; none | strong | weak
    subdomain_counts = 4, 16
    per_rank = 2500
"""
import configparser
from dataclasses import dataclass, field

from .detectors import DetectorConfig
from .harness import (DEFAULT_FAULTY_COUNTS, DEFAULT_SCALE_FACTORS,
                      SIGN_SCALE_FACTORS, SweepConfig, parse_stack)
from .linalg import ProblemSpec, parse_problem


class ConfigError(ValueError):
    pass


@dataclass
class ScalingConfig:
    mode: str = "none"
    subdomain_counts: tuple = (4, 16)
    per_rank: int = 2500


@dataclass
class RunConfig:
    sweep: SweepConfig
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    heatmap: bool = False
    text: str = ""


def _floats(text):
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _ints(text):
    return tuple(int(t) for t in text.replace(";", ",").split(",") if t.strip())


def _opt_int(text):
    text = (text or "").strip()
    return int(text) if text and text.lower() != "none" else None


def _scalar(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    low = text.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    return text


def parse_config(text, **overrides):
    """Parse config text; keyword overrides replace individual settings.

    Recognised overrides: ``problem``, ``stack``, ``subdomains``, ``seed``,
    ``jobs``, ``signs``, ``velocity``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    def get(section, key, default=None):
        if cp.has_section(section) and cp.has_option(section, key):
            return cp.get(section, key)
        return default

    try:
        velocity = overrides.get("velocity") or _floats(get("problem", "velocity", "10, 0"))
        if overrides.get("problem"):
            problem = parse_problem(overrides["problem"], velocity)
        else:
            kind = get("problem", "kind", "convdiff2d")
            if kind == "matrix-market-file":
                problem = ProblemSpec(kind, path=get("problem", "path"))
            else:
                problem = parse_problem(f"{kind}:{get('problem', 'dims', '32x32')}", velocity)

        det = DetectorConfig(
            norm_bound_enabled=_scalar(get("detectors", "norm_bound", "false")) is True,
            residual_check_enabled=_scalar(get("detectors", "residual_check", "false")) is True,
            residual_check_interval=int(get("detectors", "interval", "1")),
            residual_growth_tolerance=float(get("detectors", "growth_tolerance", "1e-12")),
            response=get("detectors", "response", "record_only"),
            matrix_bound=get("detectors", "matrix_bound", "guaranteed"),
            precond_bound_safety=float(get("detectors", "precond_bound_safety", "1.5")),
        )
        pc_params = ({k: _scalar(v) for k, v in cp.items("preconditioner")}
                     if cp.has_section("preconditioner") else {})
        subdomains = overrides.get("subdomains") or int(get("stack", "subdomains", "32"))
        stack = parse_stack(
            overrides.get("stack") or get("stack", "solvers", "fgmres,gmres,schwarz"),
            precond_params=pc_params,
            n_subdomains=subdomains,
            outer_tol=float(get("stack", "outer_tol", "1e-8")),
            outer_max_iters=int(get("stack", "outer_max_iters", "50")),
            outer_restart=_opt_int(get("stack", "outer_restart")),
            inner_tol=float(get("stack", "inner_tol", "1e-2")),
            inner_max_iters=int(get("stack", "inner_max_iters", "25")),
            inner_restart=_opt_int(get("stack", "inner_restart")),
            detectors=det,
        )

        signs = overrides.get("signs") or _scalar(get("sweep", "signs", "false")) is True
        scales = SIGN_SCALE_FACTORS if signs else _floats(
            get("sweep", "scale_factors", ", ".join(repr(s) for s in DEFAULT_SCALE_FACTORS)))
        fractions = get("sweep", "faulty_fractions", "")
        counts = get("sweep", "faulty_counts")
        counts = _ints(counts) if counts else tuple(
            c for c in DEFAULT_FAULTY_COUNTS if c <= stack.n_subdomains)
        seed = overrides.get("seed")
        jobs = overrides.get("jobs")
        sweep_cfg = SweepConfig(
            problem=problem,
            stack=stack,
            scale_factors=scales,
            faulty_counts=counts,
            faulty_fractions=_floats(fractions) if fractions.strip() else None,
            selection=get("sweep", "selection", "lowest"),
            index_mode=get("sweep", "index_mode", "apply"),
            compare_abort=_scalar(get("sweep", "compare_abort", "true")) is True,
            seed=int(seed if seed is not None else get("sweep", "seed", "0")),
            jobs=int(jobs if jobs is not None else 1),
        )
        scaling = ScalingConfig(
            mode=get("scaling", "mode", "none"),
            subdomain_counts=_ints(get("scaling", "subdomain_counts", "4, 16")),
            per_rank=int(get("scaling", "per_rank", "2500")),
        )
        if scaling.mode not in ("none", "strong", "weak"):
            raise ConfigError(f"unknown scaling mode {scaling.mode!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    return RunConfig(sweep_cfg, scaling, _scalar(get("sweep", "heatmap", "false")) is True, text)


def load_config(path, **overrides):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), **overrides)


def format_config(run):
    """Render a RunConfig back to config text that parses to the same settings."""
    cfg, st = run.sweep, run.sweep.stack
    det = st.detectors
    p = cfg.problem

    def csv(values):
        return ", ".join(repr(v) for v in values)

    def opt(v):
        return "" if v is None else str(v)

    lines = ["[problem]", f"kind = {p.kind}"]
    if p.kind == "matrix-market-file":
        lines.append(f"path = {p.path}")
    else:
        lines += [f"dims = {'x'.join(str(d) for d in p.dims)}", f"velocity = {csv(p.velocity)}"]
    solvers = ",".join([st.outer] + ([st.inner] if st.inner else []) + [st.preconditioner])
    lines += ["", "[stack]", f"solvers = {solvers}", f"subdomains = {st.n_subdomains}",
              f"outer_tol = {st.outer_tol!r}", f"outer_max_iters = {st.outer_max_iters}",
              f"outer_restart = {opt(st.outer_restart)}", f"inner_tol = {st.inner_tol!r}",
              f"inner_max_iters = {st.inner_max_iters}", f"inner_restart = {opt(st.inner_restart)}"]
    if st.precond_params:
        lines += ["", "[preconditioner]"] + [f"{k} = {v}" for k, v in sorted(st.precond_params.items())]
    lines += ["", "[detectors]",
              f"norm_bound = {str(det.norm_bound_enabled).lower()}",
              f"residual_check = {str(det.residual_check_enabled).lower()}",
              f"interval = {det.residual_check_interval}",
              f"growth_tolerance = {det.residual_growth_tolerance!r}",
              f"response = {det.response}", f"matrix_bound = {det.matrix_bound}",
              f"precond_bound_safety = {det.precond_bound_safety!r}",
              "", "[sweep]", f"scale_factors = {csv(cfg.scale_factors)}"]
    if cfg.faulty_fractions is not None:
        lines.append(f"faulty_fractions = {csv(cfg.faulty_fractions)}")
    else:
        lines.append(f"faulty_counts = {', '.join(str(f) for f in cfg.faulty_counts)}")
    lines += [f"selection = {cfg.selection}", f"index_mode = {cfg.index_mode}",
              f"compare_abort = {str(cfg.compare_abort).lower()}", f"seed = {cfg.seed}",
              f"heatmap = {str(run.heatmap).lower()}",
              "", "[scaling]", f"mode = {run.scaling.mode}",
              f"subdomain_counts = {', '.join(str(k) for k in run.scaling.subdomain_counts)}",
              f"per_rank = {run.scaling.per_rank}"]
    return "\n".join(lines) + "\n"
