from __future__ import annotations

import itertools

import numpy as np
import pytest

from qppturbo.codec import (RscSpec, TurboCodecConfig, TurboCodeword, constituent_posteriors, rsc_encode,
                            turbo_decode, turbo_decode_llr, turbo_encode)
from qppturbo.qpp import QppPolynomial, permutation


def shift_register_encode(u):
    """Plain shift-register model of the 8-state code: feedback 1+D^2+D^3, forward 1+D+D^3."""
    s1 = s2 = s3 = 0
    parity = []
    for b in u:
        a = b ^ s2 ^ s3
        parity.append(a ^ s1 ^ s3)
        s1, s2, s3 = a, s1, s2
    tail = []
    for _ in range(3):
        x = s2 ^ s3
        tail.append((x, s1 ^ s3))
        s1, s2, s3 = 0, s1, s2
    return parity, tail


def codec(q1=13, q2=30, L=40, **kw):
    return TurboCodecConfig(permutation(QppPolynomial(q1, q2, L)), **kw)


def test_impulse_response_hand_trace():
    parity, tail, final = rsc_encode([1, 0, 0, 0, 0, 0, 0])
    assert parity.tolist() == [1, 1, 1, 1, 0, 0, 1]
    assert tail.tolist() == [[1, 1], [0, 0], [0, 0]]
    assert final == 0


def test_trellis_matches_shift_register():
    rng = np.random.default_rng(0)
    for n in (1, 5, 40, 101):
        u = rng.integers(0, 2, n)
        parity, tail, _ = rsc_encode(u)
        p_ref, t_ref = shift_register_encode(u.tolist())
        assert parity.tolist() == p_ref
        assert tail.tolist() == [list(t) for t in t_ref]


def test_termination_reaches_zero_state():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        u = rng.integers(0, 2, int(rng.integers(1, 80)))
        assert rsc_encode(u)[2] == 0


def test_unterminated_encoding_has_no_tail():
    parity, tail, final = rsc_encode([1, 0, 0, 0, 0, 0, 0], terminate=False)
    assert tail.shape == (0, 2)
    assert final == 0b001


def test_codeword_layout():
    cfg = codec()
    rng = np.random.default_rng(2)
    u = rng.integers(0, 2, 40)
    cw = turbo_encode(u, cfg)
    perm = cfg.interleaver.map
    p1, t1, _ = rsc_encode(u)
    p2, t2, _ = rsc_encode(u[perm])
    assert np.array_equal(cw.systematic, u)
    assert np.array_equal(cw.parity1, p1)
    assert np.array_equal(cw.parity2, p2)
    assert np.array_equal(cw.termination, np.concatenate([t1.ravel(), t2.ravel()]))
    arr = cw.to_array()
    assert arr.size == cfg.codeword_length == 132
    assert np.array_equal(TurboCodeword.from_array(arr, 40).to_array(), arr)
    assert cw.weight == int(arr.sum())


def test_encoder_is_linear():
    cfg = codec()
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = rng.integers(0, 2, 40)
        b = rng.integers(0, 2, 40)
        lhs = turbo_encode(a ^ b, cfg).to_array()
        rhs = turbo_encode(a, cfg).to_array() ^ turbo_encode(b, cfg).to_array()
        assert np.array_equal(lhs, rhs)


def test_encode_rejects_bad_input():
    cfg = codec()
    with pytest.raises(ValueError):
        turbo_encode(np.zeros(39, np.uint8), cfg)
    with pytest.raises(ValueError):
        turbo_encode(np.full(40, 2), cfg)


def brute_force_posteriors(lsys, lpar, ltail, la):
    """Enumerate every input; LLR = log sum P(u_i = 0) - log sum P(u_i = 1)."""
    K = len(lsys)
    zero = np.full(K, -np.inf)
    one = np.full(K, -np.inf)
    for u in itertools.product((0, 1), repeat=K):
        parity, tail = shift_register_encode(list(u))
        sign = lambda c: 1.0 - 2.0 * c  # noqa: E731
        metric = sum(sign(c) * l / 2 for c, l in zip(u, lsys))
        metric += sum(sign(c) * l / 2 for c, l in zip(u, la))
        metric += sum(sign(c) * l / 2 for c, l in zip(parity, lpar))
        metric += sum(sign(x) * lx / 2 + sign(z) * lz / 2 for (x, z), (lx, lz) in zip(tail, ltail))
        for i, b in enumerate(u):
            if b:
                one[i] = np.logaddexp(one[i], metric)
            else:
                zero[i] = np.logaddexp(zero[i], metric)
    return zero - one


@pytest.mark.parametrize("K", [1, 4, 8, 12])
def test_log_map_matches_enumeration(K):
    rng = np.random.default_rng(K)
    for scale in (0.5, 3.0, 12.0):
        lsys = rng.normal(0, scale, K)
        lpar = rng.normal(0, scale, K)
        ltail = rng.normal(0, scale, (3, 2))
        la = rng.normal(0, scale, K)
        got = constituent_posteriors(lsys, lpar, ltail, apriori=la)
        want = brute_force_posteriors(lsys, lpar, ltail, la)
        assert np.max(np.abs(got - want)) <= 1e-6


def test_noiseless_frame_decodes_in_one_iteration():
    cfg = codec()
    rng = np.random.default_rng(4)
    u = rng.integers(0, 2, 40)
    cw = turbo_encode(u, cfg).to_array()
    llr = 20.0 * (1.0 - 2.0 * cw)
    bits, post, iters, ok = turbo_decode_llr(llr, cfg)
    assert np.array_equal(bits, u)
    assert iters == 1 and ok
    assert np.all(np.sign(post) == 1.0 - 2.0 * u)


def test_erased_channel_runs_all_iterations():
    cfg = codec(max_iterations=5)
    bits, iters, ok = turbo_decode(np.zeros(cfg.codeword_length), cfg)
    assert iters == 5 and not ok
    assert bits.shape == (40,)


def test_decoder_corrects_a_few_flipped_bits():
    cfg = codec()
    rng = np.random.default_rng(6)
    u = rng.integers(0, 2, 40)
    cw = turbo_encode(u, cfg).to_array()
    llr = 4.0 * (1.0 - 2.0 * cw)
    flip = rng.choice(cw.size, 5, replace=False)
    llr[flip] *= -1
    bits, _, _ = turbo_decode(llr, cfg)
    assert np.array_equal(bits, u)


def test_decode_rejects_wrong_length():
    with pytest.raises(ValueError):
        turbo_decode(np.zeros(10), codec())


def test_config_validation():
    with pytest.raises(ValueError):
        codec(max_iterations=0)
    with pytest.raises(ValueError):
        codec(llr_stop_threshold=0.0)
    assert RscSpec().n_states == 8


def test_decoder_is_deterministic():
    cfg = codec()
    llr = np.random.default_rng(8).normal(0.5, 2.0, cfg.codeword_length)
    first = turbo_decode_llr(llr, cfg)
    second = turbo_decode_llr(llr.copy(), cfg)
    assert np.array_equal(first[0], second[0]) and np.array_equal(first[1], second[1])
    assert first[2:] == second[2:]
