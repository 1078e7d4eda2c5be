"""Subdomain-level silent data corruption of preconditioner output.

A faulty subdomain permutes its segment of the output vector and multiplies
it by a scale factor. Exactly one application per solve is corrupted.
"""
from dataclasses import dataclass, replace
import logging
import math

import numpy as np

from .partition import segment

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FaultSpec:
    """Which application to corrupt and how.

    Give either ``faulty_count`` (strong-scaling style) or
    ``faulty_fraction`` of the subdomain count (weak-scaling style).
    ``index_mode="apply"`` counts innermost preconditioner applies;
    ``"inner_solve"`` counts inner-solve invocations instead.
    """
    target_apply_index: int = 1
    faulty_count: int = None
    faulty_fraction: float = None
    scale_factor: float = 1.0
    seed: int = 0
    enabled: bool = True
    selection: str = "lowest"
    index_mode: str = "apply"

    def __post_init__(self):
        if self.target_apply_index < 1:
            raise ValueError("target_apply_index is 1-based and must be >= 1")
        if not math.isfinite(self.scale_factor) or self.scale_factor == 0.0:
            raise ValueError(f"scale_factor must be finite and nonzero, got {self.scale_factor}")
        if self.faulty_count is not None and self.faulty_fraction is not None:
            raise ValueError("give faulty_count or faulty_fraction, not both")
        if self.faulty_count is not None and self.faulty_count < 0:
            raise ValueError("faulty_count must be >= 0")
        if self.faulty_fraction is not None and not 0.0 <= self.faulty_fraction <= 1.0:
            raise ValueError("faulty_fraction must lie in [0, 1]")
        if self.selection not in ("lowest", "random"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.index_mode not in ("apply", "inner_solve"):
            raise ValueError(f"unknown index_mode {self.index_mode!r}")

    def resolve_count(self, k):
        """Number of faulty subdomains out of ``k``."""
        if self.faulty_fraction is not None:
            if self.faulty_fraction == 0.0:
                return 0
            # Round half up; a positive fraction always fault at least one rank.
            return min(k, max(1, math.floor(self.faulty_fraction * k + 0.5)))
        f = 1 if self.faulty_count is None else self.faulty_count
        if f > k:
            raise ValueError(f"{f} faulty subdomains requested but only {k} exist")
        return f

    def faulty_ranks(self, k):
        f = self.resolve_count(k)
        if self.selection == "lowest":
            return list(range(f))
        rng = np.random.default_rng([self.seed, 0x5EED])
        return sorted(int(r) for r in rng.choice(k, size=f, replace=False))

    def at(self, j):
        return replace(self, target_apply_index=j)


class ApplyCounter:
    """Monotone count of preconditioner applications within one solve."""

    def __init__(self):
        self.count = 0

    def tick(self):
        self.count += 1
        return self.count


def corrupt_segment(v, seg, s, seed):
    """Return a copy of ``v`` with ``v[start:end]`` shuffled and scaled by ``s``.

    The shuffle is a seeded Fisher-Yates permutation; fixed points are allowed.
    """
    start, end = seg
    if not 0 <= start < end <= v.shape[0]:
        raise ValueError(f"segment {seg} outside a vector of length {v.shape[0]}")
    out = np.array(v, dtype=np.float64, copy=True)
    if end - start == 1 and s == 1.0:
        logger.debug("corrupting a length-1 segment with s=1 leaves it unchanged")
    rng = np.random.default_rng(seed)
    local = out[start:end]
    rng.shuffle(local)
    out[start:end] = s * local
    return out


class FaultyPreconditioner:
    """Wrap a preconditioner so its ``j``-th application returns corrupted output.

    Applies are counted on ``counter``; when the count reaches
    ``spec.target_apply_index`` every faulty subdomain's segment of the output
    is corrupted. Transpose applies and norm estimates go to the clean base
    and are not counted.
    """

    def __init__(self, base, partition, spec, counter=None):
        self.base = base
        self.partition = partition
        self.spec = spec
        self.counter = counter if counter is not None else ApplyCounter()
        self.ranks = spec.faulty_ranks(partition.k)
        self.fired_at = None

    @property
    def nested(self):
        return getattr(self.base, "nested", False)

    @property
    def n_(self):
        return self.base.n_

    def _maybe_corrupt(self, z):
        j = self.counter.tick()
        spec = self.spec
        if not spec.enabled or j != spec.target_apply_index or not self.ranks:
            return z
        self.fired_at = j
        for rank in self.ranks:
            z = corrupt_segment(z, segment(self.partition, rank), spec.scale_factor,
                                [spec.seed, j, rank])
        return z

    def apply(self, v):
        return self._maybe_corrupt(self.base.apply(v))

    __call__ = apply

    def solve_inner(self, v):
        z, stats = self.base.solve_inner(v)
        return self._maybe_corrupt(z), stats

    def apply_transpose(self, v):
        return self.base.apply_transpose(v)

    def norm_estimate(self, *args, **kwargs):
        return self.base.norm_estimate(*args, **kwargs)


def wrap_faulty(M, p, spec, counter=None):
    return FaultyPreconditioner(M, p, spec, counter)
