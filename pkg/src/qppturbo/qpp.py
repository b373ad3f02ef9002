"""Quadratic permutation polynomials over Z_L and their evaluated permutations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np


@dataclass(frozen=True, order=True)
class QppPolynomial:
    """The map x -> (q1*x + q2*x^2) mod L with an even length L."""

    q1: int
    q2: int
    L: int

    def __post_init__(self) -> None:
        for name in ("q1", "q2", "L"):
            if not isinstance(getattr(self, name), (int, np.integer)):
                raise TypeError(f"{name} must be an integer")
        if self.L <= 0 or self.L % 2:
            raise ValueError(f"length must be a positive even integer, got {self.L}")
        if not (0 <= self.q1 < self.L and 0 <= self.q2 < self.L):
            raise ValueError(f"coefficients must lie in [0, {self.L}), got ({self.q1}, {self.q2})")
        object.__setattr__(self, "q1", int(self.q1))
        object.__setattr__(self, "q2", int(self.q2))
        object.__setattr__(self, "L", int(self.L))

    @classmethod
    def parse(cls, text: str, L: int) -> QppPolynomial:
        """Build from a "q1,q2" string."""
        parts = text.replace(" ", "").split(",")
        if len(parts) != 2:
            raise ValueError(f"expected 'q1,q2', got {text!r}")
        return cls(int(parts[0]), int(parts[1]), L)

    def __str__(self) -> str:
        return f"{self.q1}x+{self.q2}x^2 mod {self.L}"

    def as_tuple(self) -> tuple[int, int]:
        return (self.q1, self.q2)


class Permutation:
    """A validated bijection on {0, ..., L-1}, stored as a read-only int64 array."""

    __slots__ = ("map",)

    def __init__(self, values) -> None:
        arr = np.array(values, dtype=np.int64).ravel()
        L = arr.size
        if L == 0:
            raise ValueError("empty permutation")
        if arr.min() < 0 or arr.max() >= L or np.bincount(arr, minlength=L).max() != 1:
            raise ValueError("values do not form a bijection on 0..L-1")
        arr.setflags(write=False)
        self.map = arr

    @property
    def L(self) -> int:
        return int(self.map.size)

    def inverse(self) -> Permutation:
        inv = np.empty_like(self.map)
        inv[self.map] = np.arange(self.L, dtype=np.int64)
        return Permutation(inv)

    def __len__(self) -> int:
        return self.L

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return bool(np.array_equal(self.map, other.map))

    def __hash__(self) -> int:
        return hash(self.map.tobytes())

    def __repr__(self) -> str:
        head = ", ".join(str(v) for v in self.map[:8])
        more = ", ..." if self.L > 8 else ""
        return f"Permutation(L={self.L}, [{head}{more}])"


def evaluate(poly: QppPolynomial) -> np.ndarray:
    """Return the raw image array; it is not checked for bijectivity."""
    L = poly.L
    x = np.arange(L, dtype=np.int64)
    # x*x < 2^32 and q2 * (x*x mod L) < 2^32 for any L <= 2^16, so int64 never overflows
    return (poly.q1 * x + poly.q2 * ((x * x) % L)) % L


def is_permutation_polynomial(poly: QppPolynomial) -> bool:
    values = evaluate(poly)
    return bool(np.bincount(values, minlength=poly.L).max() == 1)


def permutation(poly: QppPolynomial) -> Permutation:
    """Evaluate and validate; raises ValueError when the map is not a bijection."""
    values = evaluate(poly)
    if np.bincount(values, minlength=poly.L).max() != 1:
        raise ValueError(f"{poly} is not a permutation polynomial")
    return Permutation(values)


def same_permutation(a: QppPolynomial, b: QppPolynomial) -> bool:
    """General elementwise comparison of the two evaluated maps."""
    return a.L == b.L and bool(np.array_equal(evaluate(a), evaluate(b)))


def are_equivalent_by_theorem(a: QppPolynomial, b: QppPolynomial) -> bool:
    """True when the coefficients differ by exactly L/2 in both q1 and q2.

    This is a sufficient condition for the two maps to coincide. Identical
    inputs return False because the q1 difference must be nonzero.
    """
    if a.L != b.L:
        raise ValueError(f"length mismatch: {a.L} vs {b.L}")
    half = a.L // 2
    lo, hi = (a, b) if a.q1 <= b.q1 else (b, a)
    return hi.q1 - lo.q1 == half and (hi.q2 - lo.q2) % a.L == half


def theorem_twin(poly: QppPolynomial) -> QppPolynomial:
    """The partner obtained by shifting both coefficients by L/2."""
    half = poly.L // 2
    return QppPolynomial((poly.q1 + half) % poly.L, (poly.q2 + half) % poly.L, poly.L)


def canonical_form(poly: QppPolynomial) -> QppPolynomial:
    """Representative with q1 < L/2."""
    return poly if poly.q1 < poly.L // 2 else theorem_twin(poly)


def reduces_to_linear(poly: QppPolynomial) -> bool:
    """True when 2*q2 = 0 mod L, so the map equals the linear map (q1 + q2)x mod L."""
    return (2 * poly.q2) % poly.L == 0


def full_domain(L: int) -> Iterator[QppPolynomial]:
    """All valid polynomials with q1, q2 in [0, L), ascending q1 then q2."""
    _check_length(L)
    for q1 in range(L):
        for q2 in range(L):
            poly = QppPolynomial(q1, q2, L)
            if is_permutation_polynomial(poly):
                yield poly


def canonical_domain(L: int) -> Iterator[QppPolynomial]:
    """Valid polynomials with q1 in [0, L/2) and q2 in [0, L), ascending q1 then q2."""
    _check_length(L)
    for q1 in range(L // 2):
        for q2 in range(L):
            poly = QppPolynomial(q1, q2, L)
            if is_permutation_polynomial(poly):
                yield poly


def _check_length(L: int) -> None:
    if L < 2 or L % 2:
        raise ValueError(f"length must be an even integer >= 2, got {L}")
