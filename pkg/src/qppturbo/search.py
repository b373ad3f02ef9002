"""Two-stage interleaver search: maximum spread first, then minimum TUB(FER).

Stage 2 is a best-first search over candidates ordered by a lower bound on
their TUB(FER). A candidate's spectrum is deepened only while its bound can
still beat or tie the best exact value found so far. Candidates are taken in
fixed-size waves ordered by (bound, q1, q2), so the outcome does not depend on
how many worker processes share a wave.
"""

from __future__ import annotations

import heapq
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import BoundInput, coding_rate, pairwise_base, tub_ber, tub_fer, tub_fer_floor
from .codec import RscSpec
from .lengths import default_profile
from .qpp import (Permutation, QppPolynomial, canonical_domain, full_domain, permutation,
                  reduces_to_linear, theorem_twin)
from .spectrum import (DEFAULT_W_U_MAX, CodewordSearch, DistanceSpectrum, SpectrumCache,
                       SpectrumTerm, compute_spectrum, tally)
from .spread import spread_at_least

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchConfig:
    L: int
    snr_db: float | None = None
    num_terms: int | None = None
    w_u_max: int = DEFAULT_W_U_MAX
    min_d: int | None = None
    include_linear: bool = False
    domain: str = "canonical"
    jobs: int = 1
    wave: int = 4
    node_budget: int | None = None
    tie_rtol: float = 1e-12

    def __post_init__(self) -> None:
        if self.L < 2 or self.L % 2:
            raise ValueError(f"length must be an even integer >= 2, got {self.L}")
        if self.domain not in ("canonical", "full"):
            raise ValueError("domain must be 'canonical' or 'full'")
        if self.num_terms is not None and self.num_terms < 1:
            raise ValueError("num_terms must be >= 1")
        if self.jobs < 1 or self.wave < 1:
            raise ValueError("jobs and wave must be >= 1")

    def resolved(self) -> SearchConfig:
        snr, terms = default_profile(self.L)
        return replace(self, snr_db=snr if self.snr_db is None else self.snr_db,
                       num_terms=terms if self.num_terms is None else self.num_terms)


@dataclass
class Stage1Result:
    L: int
    candidates: list[tuple[QppPolynomial, int]]
    max_D: int
    threshold: int
    valid_count: int
    linear_excluded: int


def stage1_max_spread(L: int, config: SearchConfig | None = None) -> Stage1Result:
    """Valid polynomials with maximum spread, or with spread >= min_d when set.

    Polynomials whose map is linear (2*q2 = 0 mod L) are skipped unless
    requested, or unless no genuinely quadratic valid polynomial exists.
    """
    config = config or SearchConfig(L)
    polys = list(canonical_domain(L) if config.domain == "canonical" else full_domain(L))
    quadratic = [p for p in polys if not reduces_to_linear(p)]
    pool = polys if config.include_linear or not quadratic else quadratic
    floor = config.min_d if config.min_d is not None else 1
    kept: list[tuple[QppPolynomial, int]] = []
    best = 0
    for poly in pool:
        perm = permutation(poly).map
        D = spread_at_least(perm, max(floor, best) if config.min_d is None else floor)
        if D is None:
            continue
        if config.min_d is None and D > best:
            kept = []
        best = max(best, D)
        kept.append((poly, D))
    return Stage1Result(L, kept, best, floor if config.min_d is not None else best,
                        len(polys), len(polys) - len(pool))


@dataclass
class SearchReport:
    L: int
    snr_db: float
    num_terms: int
    w_u_max: int
    min_d: int | None
    stage1_max_D: int
    candidate_count: int
    best_poly: QppPolynomial | None
    D: int | None
    spectrum: DistanceSpectrum | None
    tub_ber: float | None
    tub_fer: float | None
    tie_count: int
    tie_count_full_domain: int
    all_ties: list[QppPolynomial]
    indeterminate: list[QppPolynomial] = field(default_factory=list)
    reference_poly: QppPolynomial | None = None
    reference_tub_fer: float | None = None
    reference_ratio: float | None = None

    @property
    def spectrum_head(self) -> tuple[int, int, int] | None:
        return self.spectrum.head if self.spectrum is not None and self.spectrum.terms else None

    @property
    def truncated(self) -> bool:
        return bool(self.indeterminate)

    def to_dict(self) -> dict:
        def poly(p):
            return None if p is None else [p.q1, p.q2]

        return {
            "L": self.L,
            "snr_db": self.snr_db,
            "num_terms": self.num_terms,
            "w_u_max": self.w_u_max,
            "min_d": self.min_d,
            "stage1_max_D": self.stage1_max_D,
            "candidate_count": self.candidate_count,
            "best_poly": poly(self.best_poly),
            "D": self.D,
            "spectrum": None if self.spectrum is None else self.spectrum.to_dict(),
            "spectrum_head": None if self.spectrum_head is None else list(self.spectrum_head),
            "tub_ber": self.tub_ber,
            "tub_fer": self.tub_fer,
            "tie_count": self.tie_count,
            "tie_count_full_domain": self.tie_count_full_domain,
            "all_ties": [poly(p) for p in self.all_ties],
            "indeterminate": [poly(p) for p in self.indeterminate],
            "reference_poly": poly(self.reference_poly),
            "reference_tub_fer": self.reference_tub_fer,
            "reference_ratio": self.reference_ratio,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SearchReport:
        L = int(data["L"])

        def poly(v):
            return None if v is None else QppPolynomial(int(v[0]), int(v[1]), L)

        spec = data.get("spectrum")
        return cls(
            L=L,
            snr_db=float(data["snr_db"]),
            num_terms=int(data["num_terms"]),
            w_u_max=int(data["w_u_max"]),
            min_d=data.get("min_d"),
            stage1_max_D=int(data["stage1_max_D"]),
            candidate_count=int(data["candidate_count"]),
            best_poly=poly(data.get("best_poly")),
            D=data.get("D"),
            spectrum=None if spec is None else DistanceSpectrum.from_dict(spec),
            tub_ber=data.get("tub_ber"),
            tub_fer=data.get("tub_fer"),
            tie_count=int(data["tie_count"]),
            tie_count_full_domain=int(data["tie_count_full_domain"]),
            all_ties=[poly(v) for v in data.get("all_ties", [])],
            indeterminate=[poly(v) for v in data.get("indeterminate", [])],
            reference_poly=poly(data.get("reference_poly")),
            reference_tub_fer=data.get("reference_tub_fer"),
            reference_ratio=data.get("reference_ratio"),
        )


def _spectrum_pass(perm_map: np.ndarray, rsc: RscSpec, w_u_max: int, T: int,
                   node_budget: int | None) -> tuple[list[SpectrumTerm], bool]:
    search = CodewordSearch(Permutation(perm_map), rsc, w_u_max)
    found, complete = search.collect(T, node_budget)
    return tally(found), complete


@dataclass
class _Group:
    """Candidates sharing one spectrum (same map, or maps inverse to each other)."""

    members: list[tuple[QppPolynomial, int]]
    perm: np.ndarray
    through: int = 3
    terms: list[SpectrumTerm] = field(default_factory=list)
    complete: bool = False
    truncated: bool = False

    @property
    def key(self) -> tuple[int, int]:
        p = self.members[0][0]
        return (p.q1, p.q2)

    def next_threshold(self, num_terms: int) -> int:
        if not self.terms:
            return self.through + 3
        return self.through + max(1, num_terms - len(self.terms))


def _group_candidates(candidates: list[tuple[QppPolynomial, int]]) -> list[_Group]:
    groups: dict[bytes, _Group] = {}
    for poly, D in candidates:
        perm = permutation(poly)
        key = min(perm.map.tobytes(), perm.inverse().map.tobytes())
        if key in groups:
            groups[key].members.append((poly, D))
        else:
            groups[key] = _Group([(poly, D)], perm.map)
    return list(groups.values())


def stage2_min_tub_fer(candidates: list[tuple[QppPolynomial, int]] | Stage1Result,
                       config: SearchConfig, cache: SpectrumCache | None = None,
                       rsc: RscSpec | None = None) -> SearchReport:
    """Rank candidates by exact TUB(FER) and report the lexicographically first minimizer."""
    stage1_D = None
    if isinstance(candidates, Stage1Result):
        stage1_D = candidates.max_D
        candidates = candidates.candidates
    if not candidates:
        raise ValueError("no candidates to rank")
    cfg = config.resolved()
    M = cfg.num_terms
    L = cfg.L
    rsc = rsc or RscSpec()
    base = pairwise_base(coding_rate(L, rsc.memory), cfg.snr_db)
    max_weight = 3 * L + 4 * rsc.memory
    groups = _group_candidates(sorted(candidates, key=lambda c: c[0]))

    if cache is not None:
        for g in groups:
            for poly, _ in g.members:
                hit = cache.get(poly, M, cfg.w_u_max)
                if hit is not None and hit.complete:
                    g.terms = list(hit.terms)
                    g.complete = True
                    break

    def bound(g: _Group) -> float:
        return tub_fer_floor(g.terms, M, base)

    heap = [(bound(g), g.key, i) for i, g in enumerate(groups)]
    heapq.heapify(heap)
    best = np.inf
    finished: list[tuple[float, _Group]] = []
    indeterminate: list[_Group] = []
    pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
    try:
        while heap:
            limit = best * (1 + cfg.tie_rtol)
            wave = []
            while heap and len(wave) < cfg.wave and heap[0][0] <= limit:
                wave.append(heapq.heappop(heap))
            if not wave:
                break
            todo = []
            for lb, key, i in wave:
                g = groups[i]
                if g.complete:
                    value = tub_fer_floor(g.terms, M, base)
                    finished.append((value, g))
                    best = min(best, value)
                else:
                    todo.append(i)
            jobs = [(groups[i].perm, rsc, cfg.w_u_max, groups[i].next_threshold(M), cfg.node_budget)
                    for i in todo]
            if pool is not None and len(jobs) > 1:
                results = list(pool.map(_spectrum_pass, *zip(*jobs)))
            else:
                results = [_spectrum_pass(*j) for j in jobs]
            for i, job, (terms, complete) in zip(todo, jobs, results):
                g = groups[i]
                if not complete:
                    g.truncated = True
                    indeterminate.append(g)
                    continue
                g.terms = terms
                g.through = job[3]
                exhausted = g.through >= max_weight and len(terms) < M
                if len(terms) >= M or exhausted:
                    g.terms = terms[:M]
                    g.complete = True
                    if cache is not None:
                        spec = DistanceSpectrum(tuple(g.terms), M, cfg.w_u_max, exhausted=exhausted)
                        for poly, _ in g.members:
                            cache.put(poly, spec)
                log.debug("group %s through %d: %s", g.key, g.through, [(t.d, t.N, t.w) for t in terms[:M]])
                heapq.heappush(heap, (bound(g), g.key, i))
    finally:
        if pool is not None:
            pool.shutdown()

    limit = best * (1 + cfg.tie_rtol)
    ties = sorted((poly, D, g) for value, g in finished if value <= limit for poly, D in g.members)
    # truncated groups only matter if their bound could still reach the winner
    unresolved = sorted(p for g in indeterminate if bound(g) <= limit for p, _ in g.members)
    stage1_D = stage1_D if stage1_D is not None else max(D for _, D in candidates)
    if not ties:
        return SearchReport(L, cfg.snr_db, M, cfg.w_u_max, cfg.min_d, stage1_D, len(candidates),
                            None, None, None, None, None, 0, 0, [], unresolved)
    best_poly, best_D, g = ties[0]
    spectrum = DistanceSpectrum(tuple(g.terms[:M]), M, cfg.w_u_max, exhausted=len(g.terms) < M)
    inp = BoundInput(spectrum, L, cfg.snr_db, float(coding_rate(L, rsc.memory)))
    tie_polys = [p for p, _, _ in ties]
    full = {q for p in tie_polys for q in (p, theorem_twin(p))}
    return SearchReport(
        L=L, snr_db=cfg.snr_db, num_terms=M, w_u_max=cfg.w_u_max, min_d=cfg.min_d,
        stage1_max_D=stage1_D, candidate_count=len(candidates), best_poly=best_poly, D=best_D,
        spectrum=spectrum, tub_ber=tub_ber(inp), tub_fer=tub_fer(inp), tie_count=len(tie_polys),
        tie_count_full_domain=len(full), all_ties=tie_polys, indeterminate=unresolved,
    )


def reference_tub_fer(reference: QppPolynomial, snr_db: float, num_terms: int,
                      w_u_max: int = DEFAULT_W_U_MAX, cache: SpectrumCache | None = None,
                      node_budget: int | None = None) -> tuple[DistanceSpectrum, float]:
    spectrum = cache.get(reference, num_terms, w_u_max) if cache is not None else None
    if spectrum is None:
        spectrum = compute_spectrum(permutation(reference), None, num_terms, w_u_max,
                                    node_budget=node_budget)
        if cache is not None:
            cache.put(reference, spectrum)
    return spectrum, tub_fer(BoundInput(spectrum, reference.L, snr_db))


def compare_with_reference(report: SearchReport, reference_poly: QppPolynomial,
                           cache: SpectrumCache | None = None) -> float:
    """TUB(FER) of the reference divided by that of the winner, same SNR and depth."""
    if reference_poly.L != report.L:
        raise ValueError("reference length differs from the report length")
    if report.tub_fer is None:
        raise ValueError("report has no winner")
    _, ref = reference_tub_fer(reference_poly, report.snr_db, report.num_terms, report.w_u_max, cache)
    return ref / report.tub_fer


def run_search(config: SearchConfig, cache: SpectrumCache | None = None,
               reference: QppPolynomial | None = None) -> SearchReport:
    cfg = config.resolved()
    stage1 = stage1_max_spread(cfg.L, cfg)
    log.info("stage 1: %d candidates with D >= %d (max D %d)", len(stage1.candidates),
             stage1.threshold, stage1.max_D)
    report = stage2_min_tub_fer(stage1, cfg, cache)
    if reference is not None and report.tub_fer is not None:
        spec, ref = reference_tub_fer(reference, report.snr_db, report.num_terms, report.w_u_max, cache)
        report.reference_poly = reference
        report.reference_tub_fer = ref
        report.reference_ratio = ref / report.tub_fer
    return report
