"""Design and evaluation of quadratic permutation polynomial interleavers for turbo codes."""

from __future__ import annotations

__version__ = "0.1.0"

from .bounds import BoundInput, coding_rate, tub_ber, tub_fer
from .codec import RscSpec, TurboCodecConfig, TurboCodeword, rsc_encode, turbo_decode, turbo_encode
from .qpp import (Permutation, QppPolynomial, are_equivalent_by_theorem, canonical_domain,
                  canonical_form, evaluate, is_permutation_polynomial, permutation)
from .search import SearchConfig, SearchReport, compare_with_reference, stage1_max_spread, stage2_min_tub_fer
from .simulate import ChannelConfig, SimResult, StopRule, llr_from_channel, simulate_fer
from .spectrum import DistanceSpectrum, SpectrumTerm, compute_spectrum, spectrum_oracle
from .spread import SpreadResult, lee_distance, spread_factor

__all__ = [
    "BoundInput", "ChannelConfig", "DistanceSpectrum", "Permutation", "QppPolynomial", "RscSpec",
    "SearchConfig", "SearchReport", "SimResult", "SpectrumTerm", "SpreadResult", "StopRule",
    "TurboCodecConfig", "TurboCodeword", "are_equivalent_by_theorem", "canonical_domain",
    "canonical_form", "coding_rate", "compare_with_reference", "compute_spectrum", "evaluate",
    "is_permutation_polynomial", "lee_distance", "llr_from_channel", "permutation", "rsc_encode",
    "simulate_fer", "spectrum_oracle", "spread_factor", "stage1_max_spread", "stage2_min_tub_fer",
    "tub_ber", "tub_fer", "turbo_decode", "turbo_encode",
]
