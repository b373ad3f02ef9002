from __future__ import annotations

import itertools

import numpy as np
import pytest

from qppturbo.qpp import QppPolynomial, permutation
from qppturbo.spread import circular_distance, lee_distance, spread_at_least, spread_factor


def brute_spread(perm) -> int:
    L = len(perm)
    return min(lee_distance(i, j, perm[i], perm[j], L) for i, j in itertools.combinations(range(L), 2))


def test_circular_distance():
    assert circular_distance(1, 39, 40) == 2
    assert circular_distance(0, 20, 40) == 20
    assert circular_distance(5, 5, 40) == 0


def test_identity_spread_is_two():
    res = spread_factor(np.arange(10))
    assert res.D == 2
    assert res.argmin_pair == (0, 1)


def test_first_minimal_pair_is_reported():
    res = spread_factor(permutation(QppPolynomial(3, 10, 40)))
    i, j = res.argmin_pair
    assert i < j
    perm = permutation(QppPolynomial(3, 10, 40)).map
    assert lee_distance(i, j, perm[i], perm[j], 40) == res.D


def test_too_short_rejected():
    with pytest.raises(ValueError):
        spread_factor(np.arange(1))


def test_matches_brute_force_on_random_permutations():
    rng = np.random.default_rng(5)
    for L in (2, 3, 7, 16, 33, 64):
        for _ in range(10):
            perm = rng.permutation(L)
            assert spread_factor(perm).D == brute_spread(perm.tolist())


def test_matches_brute_force_on_qpps():
    for q1, q2, L in [(3, 10, 40), (13, 30, 40), (7, 16, 64), (1, 2, 8), (15, 32, 128)]:
        perm = permutation(QppPolynomial(q1, q2, L)).map
        assert spread_factor(perm).D == brute_spread(perm.tolist())


def test_spread_at_least():
    perm = permutation(QppPolynomial(15, 32, 128)).map
    assert spread_at_least(perm, 16) == 16
    assert spread_at_least(perm, 17) is None
    assert spread_at_least(perm, 0) == 16
