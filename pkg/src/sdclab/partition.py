"""Contiguous block-row partitions standing in for MPI ranks."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Partition:
    n: int
    k: int
    offsets: tuple

    def segment(self, rank):
        return segment(self, rank)

    def segments(self):
        return [segment(self, r) for r in range(self.k)]

    def sizes(self):
        return np.diff(self.offsets)


def partition_rows(n, k):
    """Split ``n`` rows into ``k`` contiguous blocks whose sizes differ by <= 1.

    The first ``n % k`` blocks get the extra row.
    """
    n, k = int(n), int(k)
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    base, extra = divmod(n, k)
    sizes = [base + 1 if r < extra else base for r in range(k)]
    offsets = (0,) + tuple(int(x) for x in np.cumsum(sizes))
    return Partition(n, k, offsets)


def segment(p, rank):
    """Half-open row range ``(start, end)`` owned by ``rank``."""
    if not 0 <= rank < p.k:
        raise IndexError(f"rank {rank} out of range for {p.k} subdomains")
    return p.offsets[rank], p.offsets[rank + 1]
