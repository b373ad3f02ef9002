"""Lee-metric spread of an interleaver."""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .qpp import Permutation


@dataclass(frozen=True)
class SpreadResult:
    D: int
    argmin_pair: tuple[int, int]


def circular_distance(a: int, b: int, L: int) -> int:
    d = (a - b) % L
    return min(d, L - d)


def lee_distance(i: int, j: int, pi_i: int, pi_j: int, L: int) -> int:
    """Circular index distance plus circular value distance."""
    return circular_distance(i, j, L) + circular_distance(pi_i, pi_j, L)


@nb.njit(cache=True)
def _min_lee(perm, floor):
    # Scans pairs i < j in lexicographic order and keeps the first strict minimum.
    # Stops as soon as the minimum drops below `floor` (use 0 for an exact scan).
    L = perm.shape[0]
    best = 2 * L
    bi = 0
    bj = 1
    for i in range(L - 1):
        pi = perm[i]
        for j in range(i + 1, L):
            di = j - i
            if L - di < di:
                di = L - di
            if di >= best:
                continue
            dv = pi - perm[j]
            if dv < 0:
                dv = -dv
            if L - dv < dv:
                dv = L - dv
            d = di + dv
            if d < best:
                best = d
                bi = i
                bj = j
                if best < floor:
                    return best, bi, bj
    return best, bi, bj


def spread_factor(perm: Permutation | np.ndarray) -> SpreadResult:
    """Exact minimum Lee distance over all unordered pairs of points (i, perm[i])."""
    arr = perm.map if isinstance(perm, Permutation) else np.asarray(perm, dtype=np.int64)
    if arr.size < 2:
        raise ValueError("spread needs at least two points")
    D, i, j = _min_lee(np.ascontiguousarray(arr, dtype=np.int64), 0)
    return SpreadResult(int(D), (int(i), int(j)))


def spread_at_least(perm: np.ndarray, floor: int) -> int | None:
    """Return D if D >= floor, else None (the scan stops early)."""
    D, _, _ = _min_lee(np.ascontiguousarray(perm, dtype=np.int64), floor)
    return int(D) if D >= floor else None
