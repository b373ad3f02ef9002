from __future__ import annotations

import json
import math

import numpy as np
import pytest

from qppturbo.codec import TurboCodecConfig
from qppturbo.qpp import QppPolynomial, permutation
from qppturbo.simulate import (ChannelConfig, SimResult, StopRule, llr_from_channel, noise_variance,
                               rayleigh_amplitudes, simulate_fer, snr_sweep, transmit, wilson_halfwidth)

POLY = QppPolynomial(13, 30, 40)


def run(snrs, stop=StopRule(20, 2000), seed=7, batch=250, jobs=1):
    return simulate_fer(POLY, None, ChannelConfig(snrs), stop, seed, batch, jobs)


def test_fading_has_unit_power():
    a = rayleigh_amplitudes(np.random.default_rng(0), 400_000)
    assert np.mean(a * a) == pytest.approx(1.0, abs=0.01)
    assert np.mean(a) == pytest.approx(math.sqrt(math.pi) / 2, abs=0.01)


def test_noise_matches_eb_over_n0():
    rate = 10 / 33
    sigma2 = noise_variance(4.0, rate)
    # Es/N0 = rate * Eb/N0 and N0 = 2 * sigma^2 with unit symbol energy
    assert 1 / (2 * sigma2) == pytest.approx(rate * 10 ** 0.4)
    bits = np.zeros(300_000, np.uint8)
    y, a, s2 = transmit(bits, 4.0, rate, np.random.default_rng(1))
    assert s2 == sigma2
    assert np.var(y - a) == pytest.approx(sigma2, rel=0.02)


def test_llr_is_log_likelihood_ratio():
    y, a, s2 = 0.3, 0.8, 0.5
    p0 = math.exp(-(y - a) ** 2 / (2 * s2))
    p1 = math.exp(-(y + a) ** 2 / (2 * s2))
    assert llr_from_channel(y, a, s2) == pytest.approx(math.log(p0 / p1))


def test_same_seed_same_result():
    a = run([2.0, 3.0])
    b = run([2.0, 3.0])
    assert a.to_dict() == b.to_dict()
    assert run([2.0, 3.0], seed=8).to_dict() != a.to_dict()


def test_jobs_do_not_change_the_result():
    assert run([2.0], jobs=2).to_dict() == run([2.0], jobs=1).to_dict()


def test_sweep_points_are_independent_of_the_sweep():
    alone = run([3.0]).points[0]
    inside = run([2.0, 3.0]).points[1]
    assert alone == inside


def test_stop_rule():
    low = run([0.0], StopRule(15, 100_000), batch=50)
    p = low.points[0]
    assert p.frame_errors >= 15 and not p.budget_exhausted
    assert p.frames % 50 == 0
    capped = run([6.0], StopRule(1000, 300), batch=128).points[0]
    assert capped.frames == 300 and capped.budget_exhausted


def test_high_snr_is_error_free():
    p = run([30.0], StopRule(1, 2000), batch=500).points[0]
    assert p.frame_errors == 0 and p.bit_errors == 0
    assert p.mean_iterations == 1.0


def test_fer_falls_with_snr():
    res = run([0.0, 2.0, 4.0], StopRule(30, 4000))
    fers = [p.fer for p in res.points]
    assert fers[0] > fers[1] > fers[2]


def test_wilson_interval():
    assert wilson_halfwidth(100, 1000) == pytest.approx(0.01866, abs=1e-4)
    assert math.isnan(wilson_halfwidth(0, 0))
    assert wilson_halfwidth(0, 1000) > 0


def test_result_round_trip():
    res = run([2.0])
    again = SimResult.from_dict(json.loads(json.dumps(res.to_dict())))
    assert again.to_dict() == res.to_dict()


def test_snr_sweep():
    assert snr_sweep("5:0.5:8") == (5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0)
    assert snr_sweep("1,2.5") == (1.0, 2.5)
    assert snr_sweep("3") == (3.0,)
    for bad in ("1:0:2", "3:1:2", "1:2"):
        with pytest.raises(ValueError):
            snr_sweep(bad)


def test_validation():
    with pytest.raises(ValueError):
        ChannelConfig(())
    with pytest.raises(ValueError):
        StopRule(0, 10)
    other = TurboCodecConfig(permutation(QppPolynomial(3, 10, 40)))
    with pytest.raises(ValueError):
        simulate_fer(POLY, other, ChannelConfig([1.0]), StopRule(), 1)


def test_llr_edge_cases():
    assert llr_from_channel(0.0, 0.7, 0.3) == 0.0
    assert llr_from_channel(1.3, 0.0, 0.3) == 0.0
    y = np.array([-2.0, -0.1, 0.1, 2.0])
    assert np.array_equal(np.sign(llr_from_channel(y, 0.5, 1.0)), np.sign(y))


def test_measured_eb_over_n0_matches_setting():
    rate = 40 / 132
    rng = np.random.default_rng(11)
    bits = rng.integers(0, 2, 2_000_000).astype(np.uint8)
    y, a, _ = transmit(bits, 6.0, rate, rng)
    signal = a * (1.0 - 2.0 * bits)
    es = np.mean(signal ** 2)
    n0 = 2.0 * np.var(y - signal)
    measured = 10 * np.log10(es / rate / n0)
    assert abs(measured - 6.0) <= 0.05
