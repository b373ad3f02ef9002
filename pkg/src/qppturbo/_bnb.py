"""Numba kernels for the exact low-weight codeword search.

A search node fixes some data positions to one (status 1) or zero (status 2)
and leaves the rest free (status 0). For each constituent trellis a
count-constrained Viterbi pass gives, for every number c of extra free ones,
the cheapest parity-plus-tail weight. Adding both trellises gives a lower bound
on every codeword below the node; Lagrange multipliers on the free positions
pull the two relaxed solutions toward the same input pattern and tighten it.
"""

from __future__ import annotations

import numba as nb
import numpy as np

INF = 1 << 28


@nb.njit(cache=True, boundscheck=False)
def viterbi(status, R, start, tail, lam, sign, pr, pp, metric, dec, P):
    """P[c] = min weight of a path using exactly c extra ones on free positions.

    metric/dec are flat work arrays indexed [(k * (R + 1) + c) * S + state].
    Each free one costs 1 + sign * lam[k] on top of the parity weight.
    """
    L = status.shape[0]
    S = pr.shape[0]
    RW = (R + 1) * S
    for i in range(RW):
        metric[i] = INF
    for s in range(S):
        metric[s] = start[s]
    cmax = 0
    for k in range(L):
        st = status[k]
        base = k * RW
        nxt = base + RW
        if st == 2:
            for c in range(cmax + 1):
                o = base + c * S
                for t in range(S):
                    metric[nxt + c * S + t] = metric[o + pr[t, 0]] + pp[t, 0]
                    dec[o + t] = 0
        elif st == 1:
            for c in range(cmax + 1):
                o = base + c * S
                for t in range(S):
                    metric[nxt + c * S + t] = metric[o + pr[t, 1]] + pp[t, 1]
                    dec[o + t] = 1
        else:
            lk = sign * lam[k]
            for t in range(S):
                metric[nxt + t] = metric[base + pr[t, 0]] + pp[t, 0]
                dec[base + t] = 0
            for c in range(1, cmax + 1):
                o = base + c * S
                po = o - S
                n = nxt + c * S
                for t in range(S):
                    a = metric[o + pr[t, 0]] + pp[t, 0]
                    b = metric[po + pr[t, 1]] + pp[t, 1] + lk
                    if b < a:
                        metric[n + t] = b
                        dec[o + t] = 1
                    else:
                        metric[n + t] = a
                        dec[o + t] = 0
            if cmax < R:
                c = cmax + 1
                po = base + cmax * S
                n = nxt + c * S
                for t in range(S):
                    metric[n + t] = metric[po + pr[t, 1]] + pp[t, 1] + lk
                    dec[base + c * S + t] = 1
                cmax += 1
        for c in range(cmax + 1, R + 1):
            for t in range(S):
                metric[nxt + c * S + t] = INF
    fb = L * RW
    for c in range(R + 1):
        best = INF
        for s in range(S):
            v = metric[fb + c * S + s] + tail[s]
            if v < best:
                best = v
        P[c] = best if best < INF // 2 else INF


@nb.njit(cache=True, boundscheck=False)
def traceback(status, R, tail, pr, metric, dec, c, out):
    """Write the free positions set to one on the best path with c extras; return their count."""
    L = status.shape[0]
    S = pr.shape[0]
    RW = (R + 1) * S
    fb = L * RW
    best = INF
    s = 0
    for t in range(S):
        v = metric[fb + c * S + t] + tail[t]
        if v < best:
            best = v
            s = t
    n = 0
    for k in range(L - 1, -1, -1):
        st = status[k]
        if st == 2:
            s = pr[s, 0]
        elif st == 1:
            s = pr[s, 1]
        elif dec[k * RW + c * S + s] == 1:
            out[n] = k
            n += 1
            s = pr[s, 1]
            c -= 1
        else:
            s = pr[s, 0]
    return n


@nb.njit(cache=True, boundscheck=False)
def search(perm, wmax, T, start1, tail1, start2, tail2, st1, K, pr, pp, rec, recw, budget):
    """Depth-first enumeration of all input sets whose bounded weight is <= T.

    st1 holds the initial status of every natural position and is restored on
    exit. Every input set S met as a node is recorded in rec/recw when its
    weight (data ones plus both relaxed trellis costs) is <= T.

    Returns (nodes, records, status) with status 0 = complete, 1 = node budget
    exhausted, 2 = record buffer full.
    """
    L = perm.shape[0]
    inv = np.empty(L, np.int64)
    for i in range(L):
        inv[perm[i]] = i
    st2 = np.empty(L, np.int64)
    nones = 0
    for i in range(L):
        st2[i] = st1[perm[i]]
        if st1[i] == 1:
            nones += 1
    R = wmax
    S = pr.shape[0]
    m1 = np.empty((L + 1) * (R + 1) * S, np.int32)
    d1 = np.empty(L * (R + 1) * S, np.int8)
    m2 = np.empty((L + 1) * (R + 1) * S, np.int32)
    d2 = np.empty(L * (R + 1) * S, np.int8)
    P1 = np.empty(R + 1, np.int64)
    P2 = np.empty(R + 1, np.int64)
    o1 = np.empty(R + 1, np.int64)
    o2 = np.empty(R + 1, np.int64)
    stx = np.empty(L + 2, np.int64)
    stage = np.empty(L + 2, np.int64)
    fresh = np.empty(L + 2, np.int64)
    lamd = np.zeros((L + 2, L), np.int64)
    lam2 = np.zeros(L, np.int64)
    sp = 0
    stage[0] = 0
    fresh[0] = 1 if nones > 0 else 0
    nodes = 0
    nrec = 0
    status = 0
    while sp >= 0:
        g = stage[sp]
        if g == 0:
            nodes += 1
            if nodes > budget:
                status = 1
                break
            Rr = wmax - nones
            if sp > 0:
                for p in range(L):
                    lamd[sp, p] = lamd[sp - 1, p]
            lam = lamd[sp]
            pruned = False
            bc = -1
            n1 = 0
            n2 = 0
            for it in range(K + 1):
                for i in range(L):
                    lam2[i] = lam[perm[i]]
                viterbi(st1, Rr, start1, tail1, lam, 1, pr, pp, m1, d1, P1)
                viterbi(st2, Rr, start2, tail2, lam2, -1, pr, pp, m2, d2, P2)
                if it == 0 and fresh[sp] == 1 and P1[0] < INF and P2[0] < INF:
                    d = nones + P1[0] + P2[0]
                    if d <= T:
                        if nrec == rec.shape[0]:
                            status = 2
                            break
                        j = 0
                        for p in range(L):
                            if st1[p] == 1:
                                rec[nrec, j] = p
                                j += 1
                        for jj in range(j, rec.shape[1]):
                            rec[nrec, jj] = -1
                        recw[nrec] = d
                        nrec += 1
                best = INF
                bc = -1
                for c in range(1, Rr + 1):
                    if P1[c] >= INF or P2[c] >= INF:
                        continue
                    v = nones + c + P1[c] + P2[c]
                    if v < best:
                        best = v
                        bc = c
                if best > T:
                    pruned = True
                    break
                n2 = traceback(st2, Rr, tail2, pr, m2, d2, bc, o2)
                n1 = traceback(st1, Rr, tail1, pr, m1, d1, bc, o1)
                if it == K:
                    break
                agree = True
                for a in range(n1):
                    hit = False
                    for b in range(n2):
                        if o1[a] == perm[o2[b]]:
                            hit = True
                    if not hit:
                        lam[o1[a]] += 1
                        agree = False
                for b in range(n2):
                    hit = False
                    for a in range(n1):
                        if o1[a] == perm[o2[b]]:
                            hit = True
                    if not hit:
                        lam[perm[o2[b]]] -= 1
                        agree = False
                if agree:
                    break
            if status != 0:
                break
            if pruned:
                sp -= 1
                continue
            # branch on a free position the cheaper trellis wants set to one
            if P2[bc] < P1[bc]:
                x = perm[o2[n2 - 1]]
            else:
                x = o1[n1 - 1]
            stx[sp] = x
            stage[sp] = 1
            st1[x] = 1
            st2[inv[x]] = 1
            nones += 1
            sp += 1
            stage[sp] = 0
            fresh[sp] = 1
        elif g == 1:
            x = stx[sp]
            st1[x] = 2
            st2[inv[x]] = 2
            nones -= 1
            stage[sp] = 2
            sp += 1
            stage[sp] = 0
            fresh[sp] = 0
        else:
            x = stx[sp]
            st1[x] = 0
            st2[inv[x]] = 0
            sp -= 1
    # undo the branching decisions still on the stack
    for q in range(sp + 1):
        if stage[q] != 0:
            st1[stx[q]] = 0
    return nodes, nrec, status


@nb.njit(cache=True)
def codeword_weight(ones, perm, ns, par, tw):
    """Exact terminated turbo codeword weight; also returns both final data states."""
    L = perm.shape[0]
    u = np.zeros(L, np.int64)
    w = 0
    for p in ones:
        if p >= 0:
            u[p] = 1
            w += 1
    s = 0
    W = w
    for k in range(L):
        b = u[k]
        W += par[s, b]
        s = ns[s, b]
    f1 = s
    W += tw[s]
    s = 0
    for k in range(L):
        b = u[perm[k]]
        W += par[s, b]
        s = ns[s, b]
    W += tw[s]
    return W, f1, s


@nb.njit(cache=True)
def enumerate_weights(unit, wmax, counts, inw):
    """Tally codeword weights of every input of weight 1..wmax by XOR of unit responses.

    unit has shape (L, words) of packed uint64 codewords. counts[d] and inw[d]
    receive the number of codewords and their total input weight at weight d.
    """
    L = unit.shape[0]
    W = unit.shape[1]
    acc = np.zeros((wmax + 1, W), np.uint64)
    idx = np.empty(wmax + 1, np.int64)
    for w in range(1, wmax + 1):
        # odometer over combinations i_0 < ... < i_{w-1}
        for j in range(w):
            idx[j] = j
        level = 0
        while True:
            # rebuild partial sums from `level` upward
            for j in range(level, w):
                for q in range(W):
                    prev = acc[j, q] if j > 0 else np.uint64(0)
                    acc[j + 1, q] = prev ^ unit[idx[j], q]
            d = 0
            for q in range(W):
                x = acc[w, q]
                x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
                x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
                x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
                d += int((x * np.uint64(0x0101010101010101)) >> np.uint64(56))
            counts[d] += 1
            inw[d] += w
            j = w - 1
            while j >= 0 and idx[j] == L - w + j:
                j -= 1
            if j < 0:
                break
            idx[j] += 1
            for t in range(j + 1, w):
                idx[t] = idx[t - 1] + 1
            level = j
    return 0
