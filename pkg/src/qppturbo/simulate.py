"""Monte Carlo frame error rate over BPSK with independent Rayleigh fading and known CSI.

Frames are drawn in fixed-size batches. Batch b at a given SNR uses its own
PCG64 stream seeded from (seed, SNR, b), and batches are accumulated in order,
so results do not depend on the number of worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bounds import coding_rate
from .codec import RscSpec, TurboCodecConfig, _run_frames
from .qpp import QppPolynomial, permutation


@dataclass(frozen=True)
class ChannelConfig:
    """Eb/N0 sweep in dB; BPSK, unit-power Rayleigh amplitudes, perfect CSI."""

    snr_db_list: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        if not self.snr_db_list:
            raise ValueError("empty SNR list")


@dataclass(frozen=True)
class StopRule:
    min_frame_errors: int = 100
    max_frames: int = 10_000_000

    def __post_init__(self) -> None:
        if self.min_frame_errors < 1 or self.max_frames < 1:
            raise ValueError("stopping limits must be >= 1")


@dataclass
class SnrPoint:
    snr_db: float
    frames: int
    frame_errors: int
    bit_errors: int
    mean_iterations: float
    budget_exhausted: bool

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def ci_halfwidth(self) -> float:
        return wilson_halfwidth(self.frame_errors, self.frames)


@dataclass
class SimResult:
    L: int
    q1: int
    q2: int
    rng_seed: int
    batch_size: int
    max_iterations: int
    llr_stop_threshold: float
    stop: StopRule
    points: list[SnrPoint] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        for p, d in zip(self.points, out["points"]):
            d["fer"] = p.fer
            d["ci_halfwidth"] = p.ci_halfwidth
        return out

    @classmethod
    def from_dict(cls, data: dict) -> SimResult:
        keys = ("snr_db", "frames", "frame_errors", "bit_errors", "mean_iterations", "budget_exhausted")
        points = [SnrPoint(**{k: p[k] for k in keys}) for p in data["points"]]
        return cls(data["L"], data["q1"], data["q2"], data["rng_seed"], data["batch_size"],
                   data["max_iterations"], data["llr_stop_threshold"], StopRule(**data["stop"]), points)


def wilson_halfwidth(errors: int, frames: int, z: float = 1.959963984540054) -> float:
    """Half-width of the 95% Wilson score interval for a binomial proportion."""
    if frames == 0:
        return float("nan")
    p = errors / frames
    denom = 1 + z * z / frames
    return z * math.sqrt(p * (1 - p) / frames + z * z / (4 * frames * frames)) / denom


def noise_variance(snr_db: float, rate: float) -> float:
    """Per-dimension noise variance for unit-energy symbols carrying `rate` bits each."""
    return 1.0 / (2.0 * float(rate) * 10.0 ** (snr_db / 10.0))


def llr_from_channel(received, fading_amp, noise_variance):
    """log P(bit 0) / P(bit 1) for y = a * (1 - 2 * bit) + n with n ~ N(0, noise_variance)."""
    return 2.0 * np.asarray(fading_amp) * np.asarray(received) / noise_variance


def rayleigh_amplitudes(rng: np.random.Generator, shape) -> np.ndarray:
    x1 = rng.standard_normal(shape)
    x2 = rng.standard_normal(shape)
    return np.sqrt((x1 * x1 + x2 * x2) / 2.0)


def transmit(bits: np.ndarray, snr_db: float, rate: float, rng: np.random.Generator):
    """Pass coded bits through the fading channel; returns (received, amplitudes, noise variance)."""
    a = rayleigh_amplitudes(rng, bits.shape)
    sigma2 = noise_variance(snr_db, rate)
    y = a * (1.0 - 2.0 * bits) + math.sqrt(sigma2) * rng.standard_normal(bits.shape)
    return y, a, sigma2


def _snr_key(snr_db: float) -> int:
    return int(round((snr_db + 1000.0) * 1000.0))


def _simulate_batch(perm_map: np.ndarray, rsc: RscSpec, max_iter: int, thr: float, snr_db: float,
                    seed: int, batch_index: int, n_frames: int) -> tuple[int, int, int]:
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=(_snr_key(snr_db), batch_index))))
    L = perm_map.size
    n = 3 * L + 4 * rsc.memory
    rate = float(coding_rate(L, rsc.memory))
    u = rng.integers(0, 2, size=(n_frames, L), dtype=np.uint8)
    amp = rayleigh_amplitudes(rng, (n_frames, n))
    noise = math.sqrt(noise_variance(snr_db, rate)) * rng.standard_normal((n_frames, n))
    tr = rsc.trellis
    return _run_frames(u, amp, noise, noise_variance(snr_db, rate), perm_map, tr.next_state,
                       tr.parity, tr.tail_input, rsc.memory, max_iter, thr)


def simulate_fer(poly: QppPolynomial, codec: TurboCodecConfig | None, chan: ChannelConfig,
                 stop: StopRule, seed: int, batch_size: int = 1000, jobs: int = 1,
                 progress=None) -> SimResult:
    """Estimate FER at each SNR, stopping at min_frame_errors errors or max_frames frames."""
    codec = codec or TurboCodecConfig(permutation(poly))
    if codec.interleaver != permutation(poly):
        raise ValueError("codec interleaver does not match the polynomial")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    perm_map = np.ascontiguousarray(codec.interleaver.map)
    result = SimResult(poly.L, poly.q1, poly.q2, int(seed), batch_size, codec.max_iterations,
                       float(codec.llr_stop_threshold), stop)
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    try:
        for snr in chan.snr_db_list:
            frames = errors = bit_errors = iterations = 0
            batch = 0
            while errors < stop.min_frame_errors and frames < stop.max_frames:
                sizes = []
                planned = frames
                for _ in range(jobs):
                    if planned >= stop.max_frames:
                        break
                    sizes.append(min(batch_size, stop.max_frames - planned))
                    planned += sizes[-1]
                args = [(perm_map, codec.rsc, codec.max_iterations, float(codec.llr_stop_threshold),
                         snr, int(seed), batch + k, size) for k, size in enumerate(sizes)]
                if pool is not None and len(args) > 1:
                    outs = list(pool.map(_simulate_batch, *zip(*args)))
                else:
                    outs = [_simulate_batch(*a) for a in args]
                for size, (fe, be, it) in zip(sizes, outs):
                    # accumulate in batch order and stop exactly where a serial run would
                    if errors >= stop.min_frame_errors or frames >= stop.max_frames:
                        break
                    frames += size
                    errors += fe
                    bit_errors += be
                    iterations += it
                    batch += 1
                if progress is not None:
                    progress(snr, frames, errors)
            result.points.append(SnrPoint(snr, frames, errors, bit_errors,
                                          iterations / frames if frames else 0.0,
                                          errors < stop.min_frame_errors))
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def snr_sweep(text: str) -> tuple[float, ...]:
    """Parse "start:step:stop" (inclusive), a comma list, or a single value."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3:
            raise ValueError(f"expected start:step:stop, got {text!r}")
        start, step, stop = parts
        if step <= 0 or stop < start:
            raise ValueError(f"bad sweep {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 10) for k in range(count))
    return tuple(float(p) for p in text.split(","))

