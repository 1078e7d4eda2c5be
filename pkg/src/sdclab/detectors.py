"""Silent-data-corruption detectors for inner GMRES/FGMRES solves.

Two checks are available:

* a projection-length bound on the Arnoldi coefficients: in fault-free
  arithmetic ``|H(i, j)| <= ||A z_j||_2 <= ||A||_2 ||M^{-1}||_2`` because
  ``q_j`` has unit length, so a larger entry means the preconditioner output
  was corrupted;
* explicit-residual monotonicity: ``||b - A x_j||_2`` never increases in
  fault-free GMRES.

A detector either records the event or aborts the inner solve, which then
returns its last iterate whose explicit residual passed.
"""
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator

from .linalg import matrix_norm_bound

PROJECTION_BOUND = "projection_bound"
RESIDUAL_INCREASE = "residual_increase"
RESPONSES = ("record_only", "abort_inner")


@dataclass
class DetectorConfig:
    norm_bound_enabled: bool = False
    residual_check_enabled: bool = False
    residual_check_interval: int = 1
    residual_growth_tolerance: float = 1e-12
    response: str = "record_only"
    # "guaranteed" = sqrt(||A||_1 ||A||_inf); "power" = power-iteration estimate.
    matrix_bound: str = "guaranteed"
    # Multiplies the power-iteration estimate of ||M^{-1}||_2, which approaches
    # the true norm from below.
    precond_bound_safety: float = 1.5

    def __post_init__(self):
        if self.residual_check_interval < 1:
            raise ValueError("residual_check_interval must be >= 1")
        if self.response not in RESPONSES:
            raise ValueError(f"response must be one of {RESPONSES}, got {self.response!r}")

    @property
    def enabled(self):
        return self.norm_bound_enabled or self.residual_check_enabled


@dataclass(frozen=True)
class DetectorEvent:
    solve_id: int
    iteration: int
    kind: str
    value: float
    threshold: float


def check_projection_bound(h_entries, z_norm, a_bound, rtol=1e-12):
    """True iff some Hessenberg entry exceeds ``a_bound * z_norm``."""
    limit = a_bound * z_norm * (1.0 + rtol)
    return bool(max(abs(float(h)) for h in h_entries) > limit)


def check_residual_monotone(history, r_norm, tol=1e-12):
    """True iff ``r_norm`` exceeds the running minimum of ``history``."""
    return bool(r_norm > min(history) * (1.0 + tol))


def respond(policy, event, inner_state=None):
    """Map an event to ``"continue"`` or ``"abort"``."""
    if event is None or policy == "record_only":
        return "continue"
    if policy == "abort_inner":
        return "abort"
    raise ValueError(f"unknown response policy {policy!r}")


class ResilienceDetectors(BaseEstimator):
    """Fitted detector suite; ``fit`` computes the operator bounds once.

    Fit with the clean preconditioner. The bound on ``||z_j||`` comes from a
    power-iteration estimate of ``||M^{-1}||_2`` scaled by
    ``precond_bound_safety``.
    """

    def __init__(self, config=None):
        self.config = config

    def fit(self, A, M=None):
        cfg = self.config or DetectorConfig()
        self.config_ = cfg
        self.a_bound_ = matrix_norm_bound(A, cfg.matrix_bound) if cfg.norm_bound_enabled else None
        if cfg.norm_bound_enabled and M is not None:
            self.z_bound_ = cfg.precond_bound_safety * M.norm_estimate()
        else:
            self.z_bound_ = 1.0
        return self

    def start(self, solve_id=0):
        return DetectorMonitor(self.config_, self.a_bound_, self.z_bound_, solve_id)


@dataclass
class DetectorMonitor:
    """Per-solve detector state."""
    config: DetectorConfig
    a_bound: float
    z_bound: float
    solve_id: int = 0
    events: list = field(default_factory=list)
    history: list = field(default_factory=list)
    last_verified: object = None

    @property
    def aborts(self):
        return self.config.response == "abort_inner"

    def start(self, r_norm, x):
        self.history = [r_norm]
        self.last_verified = x.copy()

    def residual_due(self, iteration):
        cfg = self.config
        return cfg.residual_check_enabled and iteration % cfg.residual_check_interval == 0

    def check_projection(self, h_entries, iteration):
        if not self.config.norm_bound_enabled:
            return None
        if not check_projection_bound(h_entries, self.z_bound, self.a_bound):
            return None
        event = DetectorEvent(self.solve_id, iteration, PROJECTION_BOUND,
                              max(abs(float(h)) for h in h_entries),
                              self.a_bound * self.z_bound)
        self.events.append(event)
        return event

    def check_residual(self, r_norm, x, iteration):
        tol = self.config.residual_growth_tolerance
        if check_residual_monotone(self.history, r_norm, tol):
            event = DetectorEvent(self.solve_id, iteration, RESIDUAL_INCREASE,
                                  r_norm, min(self.history) * (1.0 + tol))
            self.events.append(event)
            self.history.append(r_norm)
            return event
        self.history.append(r_norm)
        self.last_verified = x.copy()
        return None
