"""Fault-injection laboratory for preconditioned Krylov solvers."""
from .detectors import DetectorConfig, ResilienceDetectors
from .faults import FaultSpec, FaultyPreconditioner, corrupt_segment
from .harness import (Experiment, StackConfig, SweepConfig, overhead_percent,
                      run_baseline, run_injected, scaling_sweep, sweep)
from .linalg import ProblemSpec, generate, parse_problem
from .mmio import mm_read, mm_write
from .partition import Partition, partition_rows, segment
from .preconditioners import make_preconditioner
from .solvers import Cg, Fgmres, Gmres, SolveStats, nest

__version__ = "0.1.0"

__all__ = [
    "DetectorConfig", "ResilienceDetectors", "FaultSpec", "FaultyPreconditioner",
    "corrupt_segment", "Experiment", "StackConfig", "SweepConfig", "overhead_percent",
    "run_baseline", "run_injected", "scaling_sweep", "sweep", "ProblemSpec", "generate",
    "parse_problem", "mm_read", "mm_write", "Partition", "partition_rows", "segment",
    "make_preconditioner", "Cg", "Gmres", "Fgmres", "SolveStats", "nest",
]
