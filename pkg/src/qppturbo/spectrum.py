"""Truncated distance spectra of the terminated turbo code.

The exact search splits the nonzero codewords into three disjoint classes:

* the first encoder ends its data phase outside the zero state;
* the first encoder returns to zero but the second does not;
* both encoders return to zero on their own.

The first two classes are searched directly. For the last class the
interleaver's translation symmetry is used: if perm[x + t] = perm[x] + c(t)
for every t that is a multiple of a period s0, then translating such a
codeword by t rotates the second encoder's input cyclically. Only
representatives whose smallest one lies in [0, s0) are searched, with the
second trellis relaxed to a cyclic (any start, any end) path. Each
representative is then expanded over all translations and checked exactly.
"""

from __future__ import annotations

import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _bnb
from .codec import RscSpec, TurboCodecConfig, _turbo_encode
from .qpp import Permutation, QppPolynomial

DEFAULT_W_U_MAX = 10
DEFAULT_ORACLE_BUDGET = 50_000_000


@dataclass(frozen=True)
class SpectrumTerm:
    d: int
    N: int
    w: int

    def __post_init__(self) -> None:
        if self.d < 1 or self.N < 1 or self.w < self.N:
            raise ValueError(f"inconsistent spectrum term {self}")


@dataclass(frozen=True)
class DistanceSpectrum:
    """First terms (d, N, w) of the spectrum, exact for inputs of weight <= w_u_max.

    `truncated` is set when a search budget ran out; the listed terms are then
    only those confirmed before the budget ran out and may be incomplete.
    `exhausted` means every codeword was examined and fewer distinct distances
    than requested exist (short frames only).
    """

    terms: tuple[SpectrumTerm, ...]
    num_terms_requested: int
    w_u_max: int
    truncated: bool = False
    method: str = "search"
    exhausted: bool = False

    def __post_init__(self) -> None:
        ds = [t.d for t in self.terms]
        if ds != sorted(set(ds)):
            raise ValueError("terms must have strictly increasing distances")

    @property
    def d_min(self) -> int:
        return self.terms[0].d

    @property
    def head(self) -> tuple[int, int, int]:
        t = self.terms[0]
        return (t.d, t.N, t.w)

    @property
    def complete(self) -> bool:
        return not self.truncated and (self.exhausted or len(self.terms) >= self.num_terms_requested)

    def restricted(self, num_terms: int) -> DistanceSpectrum:
        exhausted = self.exhausted and len(self.terms) < num_terms
        return DistanceSpectrum(self.terms[:num_terms], num_terms, self.w_u_max, self.truncated, self.method,
                                exhausted)

    def as_triples(self) -> list[tuple[int, int, int]]:
        return [(t.d, t.N, t.w) for t in self.terms]

    def to_dict(self) -> dict:
        return {
            "terms": [[t.d, t.N, t.w] for t in self.terms],
            "num_terms_requested": self.num_terms_requested,
            "w_u_max": self.w_u_max,
            "truncated": self.truncated,
            "method": self.method,
            "exhausted": self.exhausted,
        }

    @classmethod
    def from_dict(cls, data: dict) -> DistanceSpectrum:
        return cls(
            tuple(SpectrumTerm(int(d), int(n), int(w)) for d, n, w in data["terms"]),
            int(data["num_terms_requested"]),
            int(data["w_u_max"]),
            bool(data.get("truncated", False)),
            str(data.get("method", "search")),
            bool(data.get("exhausted", False)),
        )


def translation_period(perm: Permutation) -> int:
    """Smallest divisor s of L with perm[(x + s) % L] - perm[x] constant mod L."""
    p = perm.map
    L = perm.L
    for s in range(1, L + 1):
        if L % s:
            continue
        diff = (np.roll(p, -s) - p) % L
        if np.all(diff == diff[0]):
            return s
    return L


def _arr(*values) -> np.ndarray:
    return np.array(values, dtype=np.int64)


class CodewordSearch:
    """Enumerates every codeword of weight <= T with input weight <= w_u_max."""

    def __init__(self, perm: Permutation, rsc: RscSpec | None = None,
                 w_u_max: int = DEFAULT_W_U_MAX, lagrange_iterations: int = 3) -> None:
        if w_u_max < 1:
            raise ValueError("w_u_max must be >= 1")
        self.perm = perm
        self.rsc = rsc or RscSpec()
        self.w_u_max = int(w_u_max)
        self.K = int(lagrange_iterations)
        self.period = translation_period(perm)
        tr = self.rsc.trellis
        S = self.rsc.n_states
        inf = _bnb.INF
        self._pr = np.ascontiguousarray(tr.prev)
        self._pp = np.ascontiguousarray(tr.prev_parity)
        self._ns = np.ascontiguousarray(tr.next_state)
        self._par = np.ascontiguousarray(tr.parity)
        self._tw = np.ascontiguousarray(tr.tail_weight)
        self._zero_start = _arr(0, *([inf] * (S - 1)))
        self._closed = self._zero_start.copy()
        self._open = self._tw.copy()
        self._open[0] = inf
        self._free = np.zeros(S, np.int64)
        self._rows = 4096
        self.nodes = 0
        # no codeword is heavier than this, so a pass at this threshold sees all of them
        self.max_weight = 3 * perm.L + 4 * self.rsc.memory

    def _run(self, T, start1, tail1, start2, tail2, status, budget):
        while True:
            rec = np.empty((self._rows, self.w_u_max), np.int64)
            recw = np.empty(self._rows, np.int64)
            nodes, nrec, code = _bnb.search(self.perm.map, self.w_u_max, T, start1, tail1, start2,
                                           tail2, status, self.K, self._pr, self._pp, rec, recw, budget)
            self.nodes += nodes
            if code != 2:
                return rec[:nrec], recw[:nrec], nodes, code == 0
            self._rows *= 4

    def collect(self, T: int, node_budget: int | None = None) -> tuple[dict[tuple[int, ...], int], bool]:
        """All codewords with weight <= T, keyed by their sorted input positions.

        Returns (codewords, complete). complete is False when the node budget
        ran out, in which case the dictionary may miss codewords.
        """
        L = self.perm.L
        remaining = node_budget if node_budget is not None else 1 << 62
        found: dict[tuple[int, ...], int] = {}
        plans = [
            (self._zero_start, self._open, self._zero_start, self._tw),
            (self._zero_start, self._closed, self._zero_start, self._open),
        ]
        for start1, tail1, start2, tail2 in plans:
            status = np.zeros(L, np.int64)
            rec, recw, used, ok = self._run(T, start1, tail1, start2, tail2, status, remaining)
            remaining -= used
            for row, w in zip(rec, recw):
                found[tuple(int(p) for p in row if p >= 0)] = int(w)
            if not ok:
                return found, False
        s0 = self.period
        shifts = np.arange(0, L, s0)
        for a in range(s0):
            status = np.zeros(L, np.int64)
            status[:a] = 2
            status[a] = 1
            rec, _, used, ok = self._run(T, self._zero_start, self._closed, self._free, self._free,
                                         status, remaining)
            remaining -= used
            for row in rec:
                base = row[row >= 0]
                for t in shifts:
                    ones = np.sort((base + t) % L)
                    W, f1, f2 = _bnb.codeword_weight(ones, self.perm.map, self._ns, self._par, self._tw)
                    if f1 == 0 and f2 == 0 and W <= T:
                        found[tuple(int(p) for p in ones)] = int(W)
            if not ok:
                return found, False
        return found, True


def tally(codewords: dict[tuple[int, ...], int]) -> list[SpectrumTerm]:
    counts: dict[int, int] = defaultdict(int)
    inw: dict[int, int] = defaultdict(int)
    for ones, d in codewords.items():
        counts[d] += 1
        inw[d] += len(ones)
    return [SpectrumTerm(d, counts[d], inw[d]) for d in sorted(counts)]


@dataclass
class SpectrumProgress:
    """Spectrum terms known to be complete through distance `through`."""

    search: CodewordSearch
    num_terms: int
    through: int = 0
    terms: list[SpectrumTerm] = field(default_factory=list)
    truncated: bool = False

    @property
    def exhausted(self) -> bool:
        return self.through >= self.search.max_weight

    @property
    def done(self) -> bool:
        return self.truncated or self.exhausted or len(self.terms) >= self.num_terms

    def next_threshold(self) -> int:
        if not self.terms:
            return self.through + 3
        return self.through + max(1, self.num_terms - len(self.terms))

    def advance(self, T: int | None = None, node_budget: int | None = None) -> None:
        T = self.next_threshold() if T is None else T
        found, complete = self.search.collect(T, node_budget)
        if not complete:
            self.truncated = True
            # terms below the lowest unconfirmed distance are still unknown; keep the previous ones
            return
        self.terms = tally(found)
        self.through = T

    def result(self) -> DistanceSpectrum:
        exhausted = self.exhausted and len(self.terms) < self.num_terms
        return DistanceSpectrum(tuple(self.terms[: self.num_terms]), self.num_terms,
                                self.search.w_u_max, self.truncated, exhausted=exhausted)


def compute_spectrum(interleaver: Permutation, cfg: TurboCodecConfig | None = None,
                     num_terms: int = 1, w_u_max: int = DEFAULT_W_U_MAX, *,
                     node_budget: int | None = None, start_threshold: int = 6,
                     lagrange_iterations: int = 3) -> DistanceSpectrum:
    """Exact first `num_terms` spectrum terms for inputs of weight <= w_u_max.

    The distance threshold is raised until enough distinct distances are
    confirmed. `node_budget` caps the search nodes of each pass; on exhaustion
    the result is flagged as truncated.
    """
    if num_terms < 1:
        raise ValueError("num_terms must be >= 1")
    rsc = cfg.rsc if cfg is not None else RscSpec()
    if cfg is not None and cfg.interleaver != interleaver:
        raise ValueError("cfg.interleaver differs from the interleaver argument")
    search = CodewordSearch(interleaver, rsc, w_u_max, lagrange_iterations)
    progress = SpectrumProgress(search, num_terms, through=start_threshold - 3)
    # the threshold grows every pass and stops at the heaviest possible codeword
    while not progress.done:
        progress.advance(node_budget=node_budget)
    return progress.result()


class OracleBudgetError(ValueError):
    def __init__(self, count: int, budget: int) -> None:
        super().__init__(f"exhaustive enumeration needs {count} input patterns, budget is {budget}")
        self.count = count
        self.budget = budget


def spectrum_oracle(interleaver: Permutation, cfg: TurboCodecConfig | None = None,
                    max_input_weight: int = 6, num_terms: int = 1,
                    budget: int = DEFAULT_ORACLE_BUDGET) -> DistanceSpectrum:
    """Brute force over every input of weight 1..max_input_weight.

    Codewords are formed by XOR of the encoder's responses to unit inputs,
    which is exact because the terminated code is linear.
    """
    L = interleaver.L
    count = sum(math.comb(L, w) for w in range(1, max_input_weight + 1))
    if count > budget:
        raise OracleBudgetError(count, budget)
    rsc = cfg.rsc if cfg is not None else RscSpec()
    tr = rsc.trellis
    n = 3 * L + 4 * rsc.memory
    words = -(-n // 64)
    unit_bits = np.zeros((L, words * 64), np.uint8)
    u = np.zeros(L, np.uint8)
    out = np.empty(n, np.uint8)
    for i in range(L):
        u[i] = 1
        _turbo_encode(u, interleaver.map, tr.next_state, tr.parity, tr.tail_input, out)
        unit_bits[i, :n] = out
        u[i] = 0
    unit = np.packbits(unit_bits, axis=1).view(np.uint64).copy()
    counts = np.zeros(n + 1, np.int64)
    inw = np.zeros(n + 1, np.int64)
    _bnb.enumerate_weights(unit, max_input_weight, counts, inw)
    if counts[0]:
        raise AssertionError("a nonzero input produced the zero codeword")
    terms = [SpectrumTerm(int(d), int(counts[d]), int(inw[d])) for d in np.nonzero(counts)[0]]
    return DistanceSpectrum(tuple(terms[:num_terms]), num_terms, max_input_weight, False, "oracle")


class SpectrumCache:
    """Append-only JSON-lines store of complete spectra.

    Each record is one line written with a single O_APPEND write, so
    concurrent writers of distinct keys do not interleave. A stored spectrum
    with more terms also answers requests for fewer.
    """

    FILENAME = "spectra.jsonl"

    def __init__(self, directory: str | os.PathLike) -> None:
        self.path = Path(directory) / self.FILENAME

    def _records(self):
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    yield json.loads(line)
                except json.JSONDecodeError:
                    continue

    def get(self, poly: QppPolynomial, num_terms: int, w_u_max: int) -> DistanceSpectrum | None:
        best = None
        for rec in self._records():
            if (rec.get("L"), rec.get("q1"), rec.get("q2"), rec.get("w_u_max")) != (poly.L, poly.q1, poly.q2, w_u_max):
                continue
            enough = rec["num_terms"] >= num_terms or rec["spectrum"].get("exhausted", False)
            if enough and (best is None or rec["num_terms"] < best["num_terms"]):
                best = rec
        if best is None:
            return None
        spec = DistanceSpectrum.from_dict(best["spectrum"])
        return spec.restricted(num_terms)

    def put(self, poly: QppPolynomial, spectrum: DistanceSpectrum) -> None:
        if not spectrum.complete:
            return
        rec = {"L": poly.L, "q1": poly.q1, "q2": poly.q2, "num_terms": spectrum.num_terms_requested,
               "w_u_max": spectrum.w_u_max, "spectrum": spectrum.to_dict()}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        data = (json.dumps(rec, sort_keys=True) + "\n").encode("utf-8")
        fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            os.write(fd, data)
        finally:
            os.close(fd)
