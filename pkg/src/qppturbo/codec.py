"""LTE-style parallel turbo code: RSC constituents, dual termination, log-MAP decoding.

Codeword layout on the wire (3L + 4m values for memory m):

    systematic[0:L] | parity1[0:L] | parity2[0:L] | tail1 | tail2

where each tail is m (systematic, parity) pairs in transmission order.
LLRs follow the convention log P(bit = 0) / P(bit = 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numba as nb
import numpy as np

from .qpp import Permutation


@dataclass(frozen=True)
class Trellis:
    next_state: np.ndarray  # (S, 2) next state for input bit b
    parity: np.ndarray  # (S, 2) parity output for input bit b
    tail_input: np.ndarray  # (S,) input that shifts a zero into the register
    tail_weight: np.ndarray  # (S,) Hamming weight of the m tail pairs from state s
    prev: np.ndarray  # (S, 2) predecessor of state t reached with input b
    prev_parity: np.ndarray  # (S, 2) parity emitted on that incoming edge


@dataclass(frozen=True)
class RscSpec:
    """Recursive systematic code with feedback/feedforward polynomials in octal.

    The most significant bit of each octal value is the D^0 tap. The default
    is the LTE code, feedback 1 + D^2 + D^3 and feedforward 1 + D + D^3.
    """

    memory: int = 3
    feedback: int = 0o13
    feedforward: int = 0o15

    def __post_init__(self) -> None:
        m = self.memory
        if m < 1:
            raise ValueError("memory must be >= 1")
        for name in ("feedback", "feedforward"):
            value = getattr(self, name)
            if not 0 < value < (1 << (m + 1)):
                raise ValueError(f"{name} taps do not fit memory {m}")
        fb = self.taps(self.feedback)
        if fb[0] != 1 or fb[m] != 1:
            raise ValueError("feedback polynomial needs both the D^0 and D^m taps")

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    def taps(self, octal_value: int) -> list[int]:
        m = self.memory
        return [(octal_value >> (m - k)) & 1 for k in range(m + 1)]

    @cached_property
    def trellis(self) -> Trellis:
        m = self.memory
        S = self.n_states
        g0 = self.taps(self.feedback)
        g1 = self.taps(self.feedforward)
        ns = np.zeros((S, 2), np.int64)
        par = np.zeros((S, 2), np.int64)
        tin = np.zeros(S, np.int64)
        for s in range(S):
            reg = [(s >> (m - k)) & 1 for k in range(1, m + 1)]  # reg[0] is the newest bit
            fb = sum(g0[k] * reg[k - 1] for k in range(1, m + 1)) & 1
            ff = sum(g1[k] * reg[k - 1] for k in range(1, m + 1)) & 1
            for b in range(2):
                a = b ^ fb
                ns[s, b] = (a << (m - 1)) | (s >> 1)
                par[s, b] = (g1[0] * a) ^ ff
            tin[s] = fb
        tw = np.zeros(S, np.int64)
        for s in range(S):
            state, w = s, 0
            for _ in range(m):
                b = tin[state]
                w += b + par[state, b]
                state = ns[state, b]
            tw[s] = w
        prev = np.full((S, 2), -1, np.int64)
        prev_par = np.zeros((S, 2), np.int64)
        for s in range(S):
            for b in range(2):
                t = ns[s, b]
                if prev[t, b] != -1:
                    raise ValueError("trellis has merging edges with equal input")
                prev[t, b] = s
                prev_par[t, b] = par[s, b]
        for arr in (ns, par, tin, tw, prev, prev_par):
            arr.setflags(write=False)
        return Trellis(ns, par, tin, tw, prev, prev_par)


@dataclass(frozen=True)
class TurboCodecConfig:
    interleaver: Permutation
    rsc: RscSpec = field(default_factory=RscSpec)
    max_iterations: int = 12
    llr_stop_threshold: float = 10.0

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.llr_stop_threshold > 0:
            raise ValueError("llr_stop_threshold must be positive")

    @property
    def L(self) -> int:
        return self.interleaver.L

    @property
    def codeword_length(self) -> int:
        return 3 * self.L + 4 * self.rsc.memory


@dataclass(frozen=True, eq=False)
class TurboCodeword:
    systematic: np.ndarray
    parity1: np.ndarray
    parity2: np.ndarray
    termination: np.ndarray

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.systematic, self.parity1, self.parity2, self.termination])

    @classmethod
    def from_array(cls, bits: np.ndarray, L: int) -> TurboCodeword:
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(bits[:L], bits[L:2 * L], bits[2 * L:3 * L], bits[3 * L:])

    @property
    def weight(self) -> int:
        return int(self.to_array().sum())


@nb.njit(cache=True)
def _rsc_run(u, ns, par, tin, out_par, out_tail):
    s = 0
    for k in range(u.shape[0]):
        b = u[k]
        out_par[k] = par[s, b]
        s = ns[s, b]
    for j in range(out_tail.shape[0]):
        b = tin[s]
        out_tail[j, 0] = b
        out_tail[j, 1] = par[s, b]
        s = ns[s, b]
    return s


@nb.njit(cache=True)
def _turbo_encode(u, perm, ns, par, tin, out):
    L = u.shape[0]
    m = (out.shape[0] - 3 * L) // 4
    v = np.empty(L, np.uint8)
    for i in range(L):
        out[i] = u[i]
        v[i] = u[perm[i]]
    t1 = np.empty((m, 2), np.uint8)
    t2 = np.empty((m, 2), np.uint8)
    p = np.empty(L, np.uint8)
    f1 = _rsc_run(u, ns, par, tin, p, t1)
    out[L:2 * L] = p
    f2 = _rsc_run(v, ns, par, tin, p, t2)
    out[2 * L:3 * L] = p
    for j in range(m):
        out[3 * L + 2 * j] = t1[j, 0]
        out[3 * L + 2 * j + 1] = t1[j, 1]
        out[3 * L + 2 * m + 2 * j] = t2[j, 0]
        out[3 * L + 2 * m + 2 * j + 1] = t2[j, 1]
    return f1, f2


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a nonempty 1-D bit sequence")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bits must be 0 or 1")
    return arr.astype(np.uint8)


def rsc_encode(bits, spec: RscSpec | None = None, terminate: bool = True):
    """Encode one constituent stream.

    Returns (parity bits, tail pairs of shape (m, 2), final state). Without
    termination the tail is empty and the final state is wherever the data left it.
    """
    spec = spec or RscSpec()
    u = _as_bits(bits)
    tr = spec.trellis
    parity = np.empty(u.size, np.uint8)
    tail = np.empty((spec.memory if terminate else 0, 2), np.uint8)
    final = _rsc_run(u, tr.next_state, tr.parity, tr.tail_input, parity, tail)
    return parity, tail, int(final)


def turbo_encode(bits, cfg: TurboCodecConfig) -> TurboCodeword:
    u = _as_bits(bits)
    if u.size != cfg.L:
        raise ValueError(f"frame has {u.size} bits, interleaver expects {cfg.L}")
    tr = cfg.rsc.trellis
    out = np.empty(cfg.codeword_length, np.uint8)
    _turbo_encode(u, cfg.interleaver.map, tr.next_state, tr.parity, tr.tail_input, out)
    return TurboCodeword.from_array(out, cfg.L)


# Half-LLRs are clipped here; beyond this the bit is decided with odds of e^300 anyway.
HALF_LLR_CLIP = 150.0
LLR_CLIP = 700.0


@nb.njit(cache=True)
def _branch_gains(h, hp):
    # exp(+-h +- hp) scaled by exp(-|h| - |hp|) so every gain lies in (0, 1]
    if h > HALF_LLR_CLIP:
        h = HALF_LLR_CLIP
    elif h < -HALF_LLR_CLIP:
        h = -HALF_LLR_CLIP
    if hp > HALF_LLR_CLIP:
        hp = HALF_LLR_CLIP
    elif hp < -HALF_LLR_CLIP:
        hp = -HALF_LLR_CLIP
    es = np.exp(-2.0 * abs(h))
    ep = np.exp(-2.0 * abs(hp))
    s0, s1 = (1.0, es) if h >= 0 else (es, 1.0)
    p0, p1 = (1.0, ep) if hp >= 0 else (ep, 1.0)
    return s0 * p0, s0 * p1, s1 * p0, s1 * p1


@nb.njit(cache=True)
def _log_map(lsys, lpar, la, tsys, tpar, ns, par, tin, alpha, beta, post):
    """Symbol-by-symbol MAP on one terminated trellis.

    The forward/backward sums are carried in the probability domain with
    per-step normalisation, which gives the same result as log-domain
    recursion with the exact max* operator, at a fraction of the cost.
    """
    L = lsys.shape[0]
    m = tsys.shape[0]
    S = ns.shape[0]
    g = np.empty(4)
    alpha[0, :] = 0.0
    alpha[0, 0] = 1.0
    for k in range(L):
        g[0], g[1], g[2], g[3] = _branch_gains(0.5 * (lsys[k] + la[k]), 0.5 * lpar[k])
        alpha[k + 1, :] = 0.0
        for s in range(S):
            a = alpha[k, s]
            if a == 0.0:
                continue
            alpha[k + 1, ns[s, 0]] += a * g[par[s, 0]]
            alpha[k + 1, ns[s, 1]] += a * g[2 + par[s, 1]]
        total = 0.0
        for s in range(S):
            total += alpha[k + 1, s]
        for s in range(S):
            alpha[k + 1, s] /= total
    nxt = np.empty(S)
    beta[:] = 0.0
    beta[0] = 1.0
    for j in range(m - 1, -1, -1):
        g[0], g[1], g[2], g[3] = _branch_gains(0.5 * tsys[j], 0.5 * tpar[j])
        total = 0.0
        for s in range(S):
            b = tin[s]
            nxt[s] = beta[ns[s, b]] * g[2 * b + par[s, b]]
            total += nxt[s]
        for s in range(S):
            beta[s] = nxt[s] / total
    for k in range(L - 1, -1, -1):
        g[0], g[1], g[2], g[3] = _branch_gains(0.5 * (lsys[k] + la[k]), 0.5 * lpar[k])
        n0 = 0.0
        n1 = 0.0
        total = 0.0
        for s in range(S):
            e0 = g[par[s, 0]] * beta[ns[s, 0]]
            e1 = g[2 + par[s, 1]] * beta[ns[s, 1]]
            n0 += alpha[k, s] * e0
            n1 += alpha[k, s] * e1
            nxt[s] = e0 + e1
            total += nxt[s]
        if n1 == 0.0:
            post[k] = LLR_CLIP
        elif n0 == 0.0:
            post[k] = -LLR_CLIP
        else:
            v = np.log(n0 / n1)
            post[k] = min(max(v, -LLR_CLIP), LLR_CLIP)
        for s in range(S):
            beta[s] = nxt[s] / total


@nb.njit(cache=True)
def _turbo_decode(llr, perm, ns, par, tin, m, max_iter, thr, bits, post):
    L = perm.shape[0]
    S = ns.shape[0]
    lsys = llr[0:L]
    lp1 = llr[L:2 * L]
    lp2 = llr[2 * L:3 * L]
    t1s = np.empty(m)
    t1p = np.empty(m)
    t2s = np.empty(m)
    t2p = np.empty(m)
    for j in range(m):
        t1s[j] = llr[3 * L + 2 * j]
        t1p[j] = llr[3 * L + 2 * j + 1]
        t2s[j] = llr[3 * L + 2 * m + 2 * j]
        t2p[j] = llr[3 * L + 2 * m + 2 * j + 1]
    lsys2 = np.empty(L)
    for i in range(L):
        lsys2[i] = lsys[perm[i]]
    la1 = np.zeros(L)
    la2 = np.empty(L)
    p1 = np.empty(L)
    p2 = np.empty(L)
    alpha = np.empty((L + 1, S))
    beta = np.empty(S)
    used = 0
    converged = False
    for it in range(max_iter):
        used = it + 1
        _log_map(lsys, lp1, la1, t1s, t1p, ns, par, tin, alpha, beta, p1)
        for i in range(L):
            la2[i] = p1[perm[i]] - lsys[perm[i]] - la1[perm[i]]
        _log_map(lsys2, lp2, la2, t2s, t2p, ns, par, tin, alpha, beta, p2)
        smallest = np.inf
        for i in range(L):
            j = perm[i]
            la1[j] = p2[i] - lsys2[i] - la2[i]
            post[j] = p2[i]
            a = abs(p2[i])
            if a < smallest:
                smallest = a
        if smallest >= thr:
            converged = True
            break
    for i in range(L):
        bits[i] = 1 if post[i] < 0 else 0
    return used, converged


@nb.njit(cache=True)
def _run_frames(u, amp, noise, sigma2, perm, ns, par, tin, m, max_iter, thr):
    # kept next to the kernels it calls: numba's on-disk cache only notices
    # edits to the module that defines a function
    B, L = u.shape
    n = amp.shape[1]
    cw = np.empty(n, np.uint8)
    llr = np.empty(n)
    bits = np.empty(L, np.uint8)
    post = np.empty(L)
    frame_errors = 0
    bit_errors = 0
    iterations = 0
    scale = 2.0 / sigma2
    for f in range(B):
        _turbo_encode(u[f], perm, ns, par, tin, cw)
        for j in range(n):
            a = amp[f, j]
            y = a * (1.0 - 2.0 * cw[j]) + noise[f, j]
            llr[j] = scale * a * y
        used, _ = _turbo_decode(llr, perm, ns, par, tin, m, max_iter, thr, bits, post)
        iterations += used
        wrong = 0
        for i in range(L):
            if bits[i] != u[f, i]:
                wrong += 1
        if wrong:
            frame_errors += 1
            bit_errors += wrong
    return frame_errors, bit_errors, iterations


def turbo_decode_llr(channel_llrs, cfg: TurboCodecConfig):
    """Iterative decoding; returns (bits, posterior LLRs, iterations used, converged)."""
    llr = np.ascontiguousarray(channel_llrs, dtype=np.float64)
    if llr.shape != (cfg.codeword_length,):
        raise ValueError(f"expected {cfg.codeword_length} channel LLRs, got shape {llr.shape}")
    tr = cfg.rsc.trellis
    bits = np.empty(cfg.L, np.uint8)
    post = np.empty(cfg.L)
    used, ok = _turbo_decode(llr, cfg.interleaver.map, tr.next_state, tr.parity, tr.tail_input,
                             cfg.rsc.memory, cfg.max_iterations, float(cfg.llr_stop_threshold),
                             bits, post)
    return bits, post, int(used), bool(ok)


def turbo_decode(channel_llrs, cfg: TurboCodecConfig):
    """Hard decisions, iterations used and whether the LLR stopping rule fired."""
    bits, _, used, ok = turbo_decode_llr(channel_llrs, cfg)
    return bits, used, ok


def constituent_posteriors(lsys, lpar, tail_llrs, spec: RscSpec | None = None, apriori=None):
    """Log-MAP a-posteriori LLRs of the data bits of one terminated constituent code.

    `tail_llrs` has shape (m, 2) holding (systematic, parity) LLRs of each tail step.
    """
    spec = spec or RscSpec()
    lsys = np.ascontiguousarray(lsys, dtype=np.float64)
    lpar = np.ascontiguousarray(lpar, dtype=np.float64)
    tail = np.asarray(tail_llrs, dtype=np.float64).reshape(spec.memory, 2)
    la = np.zeros_like(lsys) if apriori is None else np.ascontiguousarray(apriori, dtype=np.float64)
    tr = spec.trellis
    post = np.empty(lsys.size)
    alpha = np.empty((lsys.size + 1, spec.n_states))
    beta = np.empty(spec.n_states)
    _log_map(lsys, lpar, la, np.ascontiguousarray(tail[:, 0]), np.ascontiguousarray(tail[:, 1]),
             tr.next_state, tr.parity, tr.tail_input, alpha, beta, post)
    return post
