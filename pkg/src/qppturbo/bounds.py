"""Truncated union bounds for BPSK on an independent Rayleigh fading channel."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .spectrum import DistanceSpectrum, SpectrumTerm


def coding_rate(L: int, memory: int = 3) -> Fraction:
    """L data bits over 3L + 4*memory transmitted bits (both tails sent)."""
    if L < 1:
        raise ValueError("L must be >= 1")
    return Fraction(L, 3 * L + 4 * memory)


def pairwise_base(rate: float, snr_db: float) -> float:
    """Per-symbol Chernoff factor 1 / (1 + Rc * Eb/N0) with Eb/N0 in linear units."""
    return 1.0 / (1.0 + float(rate) * 10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class BoundInput:
    spectrum: DistanceSpectrum
    L: int
    snr_db: float
    Rc: float | None = None

    @property
    def rate(self) -> float:
        rc = float(coding_rate(self.L)) if self.Rc is None else float(self.Rc)
        if not 0 < rc < 1:
            raise ValueError(f"coding rate must lie in (0, 1), got {rc}")
        return rc


def tub_ber(inp: BoundInput) -> float:
    b = pairwise_base(inp.rate, inp.snr_db)
    return 0.5 * sum((t.w / inp.L) * b ** t.d for t in inp.spectrum.terms)


def tub_fer(inp: BoundInput) -> float:
    b = pairwise_base(inp.rate, inp.snr_db)
    return 0.5 * sum(t.N * b ** t.d for t in inp.spectrum.terms)


def tub_fer_floor(known: Iterable[SpectrumTerm], num_terms: int, base: float) -> float:
    """Lower bound on TUB(FER) from the first terms of a partially known spectrum.

    Terms not yet found lie at larger, unbounded distances, so each of them
    may contribute arbitrarily little; only the known terms count.
    """
    return 0.5 * sum(t.N * base ** t.d for t in list(known)[:num_terms])
