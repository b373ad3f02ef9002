from __future__ import annotations

import json

import numpy as np
import pytest

from qppturbo.codec import TurboCodecConfig, turbo_encode
from qppturbo.qpp import Permutation, QppPolynomial, permutation
from qppturbo.spectrum import (CodewordSearch, DistanceSpectrum, OracleBudgetError, SpectrumCache,
                               SpectrumTerm, compute_spectrum, spectrum_oracle, translation_period)


def perm40(q1, q2):
    return permutation(QppPolynomial(q1, q2, 40))


@pytest.mark.parametrize("q", [(3, 10), (13, 30), (19, 30)])
def test_search_matches_oracle_at_length_40(q):
    perm = perm40(*q)
    got = compute_spectrum(perm, None, num_terms=8, w_u_max=6)
    want = spectrum_oracle(perm, None, max_input_weight=6, num_terms=8)
    assert got.as_triples() == want.as_triples()
    assert got.complete and want.method == "oracle"


@pytest.mark.parametrize("L", [10, 12, 14, 16])
def test_search_matches_oracle_on_random_interleavers(L):
    # every input weight is allowed, so the oracle is the full code spectrum
    perm = Permutation(np.random.default_rng(L).permutation(L))
    got = compute_spectrum(perm, None, num_terms=6, w_u_max=L)
    want = spectrum_oracle(perm, None, max_input_weight=L, num_terms=6)
    assert got.as_triples() == want.as_triples()


def test_collected_codewords_have_the_recorded_weight():
    perm = perm40(3, 10)
    cfg = TurboCodecConfig(perm)
    found, complete = CodewordSearch(perm, w_u_max=6).collect(16)
    assert complete and found
    for ones, W in found.items():
        u = np.zeros(40, np.uint8)
        u[list(ones)] = 1
        assert turbo_encode(u, cfg).weight == W <= 16


def test_fewer_terms_is_a_prefix():
    perm = perm40(13, 30)
    short = compute_spectrum(perm, None, 3)
    long = compute_spectrum(perm, None, 6)
    assert long.as_triples()[:3] == short.as_triples()
    assert long.restricted(3).as_triples() == short.as_triples()


def test_raising_input_weight_never_removes_codewords():
    perm = perm40(3, 10)
    low = dict((d, (n, w)) for d, n, w in compute_spectrum(perm, None, 5, 4).as_triples())
    high = dict((d, (n, w)) for d, n, w in compute_spectrum(perm, None, 5, 10).as_triples())
    assert min(high) <= min(low)
    for d, (n, w) in low.items():
        if d <= max(high):
            assert high[d][0] >= n


def test_length_40_heads():
    assert compute_spectrum(perm40(3, 10)).head == (11, 1, 3)
    assert compute_spectrum(perm40(13, 30)).head == (12, 1, 2)
    assert compute_spectrum(perm40(19, 30)).head == (14, 2, 4)


def test_node_budget_sets_truncated_flag():
    spec = compute_spectrum(perm40(3, 10), None, 9, node_budget=50)
    assert spec.truncated
    assert not spec.complete


def test_translation_period():
    assert translation_period(Permutation(np.arange(12))) == 1
    assert translation_period(perm40(3, 10)) == 2
    assert translation_period(Permutation([1, 0, 3, 2, 5, 4])) == 2


def test_oracle_budget():
    with pytest.raises(OracleBudgetError):
        spectrum_oracle(perm40(3, 10), None, max_input_weight=8, budget=1000)


def test_validation():
    with pytest.raises(ValueError):
        SpectrumTerm(5, 2, 1)
    with pytest.raises(ValueError):
        DistanceSpectrum((SpectrumTerm(5, 1, 1), SpectrumTerm(5, 1, 1)), 2, 10)
    with pytest.raises(ValueError):
        compute_spectrum(perm40(3, 10), None, 0)


def test_dict_round_trip():
    spec = compute_spectrum(perm40(3, 10), None, 4)
    again = DistanceSpectrum.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again == spec


def test_cache_serves_smaller_requests(cache_dir):
    cache = SpectrumCache(cache_dir)
    poly = QppPolynomial(13, 30, 40)
    assert cache.get(poly, 3, 10) is None
    spec = compute_spectrum(permutation(poly), None, 5)
    cache.put(poly, spec)
    assert cache.get(poly, 5, 10) == spec
    assert cache.get(poly, 2, 10).as_triples() == spec.as_triples()[:2]
    assert cache.get(poly, 6, 10) is None
    assert cache.get(poly, 5, 6) is None
    assert cache.get(QppPolynomial(3, 10, 40), 1, 10) is None


def test_cache_skips_truncated_and_tolerates_garbage(cache_dir):
    cache = SpectrumCache(cache_dir)
    poly = QppPolynomial(3, 10, 40)
    cache.put(poly, compute_spectrum(permutation(poly), None, 9, node_budget=50))
    assert cache.get(poly, 1, 10) is None
    cache.path.parent.mkdir(parents=True, exist_ok=True)
    with open(cache.path, "a") as fh:
        fh.write("{not json\n")
    cache.put(poly, compute_spectrum(permutation(poly), None, 2))
    assert cache.get(poly, 2, 10).head == (11, 1, 3)
