"""Compiled greedy nearest-neighbor tour construction.

The kernel owns all per-step state and is deliberately self-contained so it
can run with the GIL released: tours for distinct (ordering, subset) tasks are
built concurrently from Python threads and remain bitwise deterministic per
seed regardless of scheduling.

Data layout: points are bucketed into 16x16 blocks of the location grid and
stored block-compacted (vector rows and metadata physically grouped by block,
swap-removed on visit), so that scanning the spatial search window touches
sequential memory only.  Candidate scans walk blocks in expanding rings
around the current point, which tightens the best-so-far distance early and
lets the chunked early abort in the distance loop do its work.

Distances accumulate in float64 over float32 inputs using a fixed 8-wide tree
order per chunk.  The order is deterministic and matches a plain float64
sum-of-squares to ~1e-16 relative, so ties and near-ties resolve identically
to an independent float64 oracle; exact ties break toward the smaller point
index.
"""

import numpy as np
from numba import njit

_U64 = np.uint64
_MASK = _U64(0xFFFFFFFFFFFFFFFF)
# reassoc/contract/nsz only: keeps inf sentinels well-defined
_FASTMATH = {"reassoc", "contract", "nsz"}
_BLOCK = 16
_FALLBACK_SAMPLE = 100


@njit(cache=True, nogil=True)
def _rng_next(state):
    # splitmix64: tiny, statistically fine for tie-breaking / sampling
    state = (state + _U64(0x9E3779B97F4A7C15)) & _MASK
    z = state
    z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _MASK
    z = z ^ (z >> _U64(31))
    return state, z


@njit(cache=True, nogil=True, fastmath=_FASTMATH, inline="always")
def _dist2(bvecs, slot, cbuf, n, lim):
    d = 0.0
    q = 0
    while q + 8 <= n:
        p0 = float(bvecs[slot, q + 0]) - float(cbuf[q + 0])
        p1 = float(bvecs[slot, q + 1]) - float(cbuf[q + 1])
        p2 = float(bvecs[slot, q + 2]) - float(cbuf[q + 2])
        p3 = float(bvecs[slot, q + 3]) - float(cbuf[q + 3])
        p4 = float(bvecs[slot, q + 4]) - float(cbuf[q + 4])
        p5 = float(bvecs[slot, q + 5]) - float(cbuf[q + 5])
        p6 = float(bvecs[slot, q + 6]) - float(cbuf[q + 6])
        p7 = float(bvecs[slot, q + 7]) - float(cbuf[q + 7])
        d += ((p0 * p0 + p1 * p1) + (p2 * p2 + p3 * p3)) + (
            (p4 * p4 + p5 * p5) + (p6 * p6 + p7 * p7)
        )
        if d > lim:
            return d
        q += 8
    for t in range(q, n):
        diff = float(bvecs[slot, t]) - float(cbuf[t])
        d += diff * diff
    return d


@njit(cache=True, nogil=True, fastmath=_FASTMATH)
def greedy_tour(vectors, loc_r, loc_c, seed, branch, window, start):
    """Greedy randomized nearest-neighbor tour over all m points.

    vectors: (m, n) float32, C-contiguous.
    loc_r, loc_c: (m,) int64 nonnegative spatial coordinates (duplicates OK).
    branch: hop to a uniform choice among the `branch` nearest in-window points.
    window: half-width of the spatial search box around the current location.
    start: first point index, or -1 to draw it from the seed.

    Returns (order, length_sum): visiting order (a permutation of 0..m-1) and
    the summed Euclidean hop length.
    """
    m, n = vectors.shape
    gh = 0
    gw = 0
    for i in range(m):
        if loc_r[i] >= gh:
            gh = loc_r[i] + 1
        if loc_c[i] >= gw:
            gw = loc_c[i] + 1

    nbr = (gh + _BLOCK - 1) // _BLOCK
    nbc = (gw + _BLOCK - 1) // _BLOCK
    nb = nbr * nbc

    block_of = np.empty(m, np.int64)
    bcount = np.zeros(nb, np.int64)
    for i in range(m):
        b = (loc_r[i] // _BLOCK) * nbc + (loc_c[i] // _BLOCK)
        block_of[i] = b
        bcount[b] += 1
    boff = np.zeros(nb + 1, np.int64)
    for b in range(nb):
        boff[b + 1] = boff[b] + bcount[b]
    blen = bcount.copy()

    # block-compacted copies; pos_of maps point index -> current slot
    bvecs = np.empty((m, n), np.float32)
    blocr = np.empty(m, np.int32)
    blocc = np.empty(m, np.int32)
    bidx = np.empty(m, np.int64)
    pos_of = np.empty(m, np.int64)
    fill = boff[:-1].copy()
    for i in range(m):
        b = block_of[i]
        p = fill[b]
        for q in range(n):
            bvecs[p, q] = vectors[i, q]
        blocr[p] = loc_r[i]
        blocc[p] = loc_c[i]
        bidx[p] = i
        pos_of[i] = p
        fill[b] += 1

    # global compact unvisited list for the exhausted-window fallback
    unv = np.arange(m)
    upos = np.arange(m)
    ucount = m

    state = _U64(seed)
    if start < 0:
        state, z = _rng_next(state)
        cur = int(z % _U64(m))
    else:
        cur = start

    order = np.empty(m, np.int64)
    bestd = np.empty(branch, np.float64)
    besti = np.empty(branch, np.int64)
    cbuf = np.empty(n, np.float32)
    length_sum = 0.0

    for step in range(m):
        order[step] = cur

        # snapshot cur's row, then swap-remove it from its block and the
        # global unvisited list
        p = pos_of[cur]
        for q in range(n):
            cbuf[q] = bvecs[p, q]
        b = block_of[cur]
        last = boff[b] + blen[b] - 1
        if last != p:
            ml = bidx[last]
            for q in range(n):
                bvecs[p, q] = bvecs[last, q]
            blocr[p] = blocr[last]
            blocc[p] = blocc[last]
            bidx[p] = ml
            pos_of[ml] = p
        blen[b] -= 1
        gp = upos[cur]
        mu = unv[ucount - 1]
        unv[gp] = mu
        upos[mu] = gp
        ucount -= 1
        if ucount == 0:
            break

        r0 = loc_r[cur]
        c0 = loc_c[cur]
        rlo = r0 - window
        rhi = r0 + window
        clo = c0 - window
        chi = c0 + window
        br0 = max(0, rlo) // _BLOCK
        br1 = min(gh - 1, rhi) // _BLOCK
        bc0 = max(0, clo) // _BLOCK
        bc1 = min(gw - 1, chi) // _BLOCK

        found = 0
        for k in range(branch):
            bestd[k] = np.inf
            besti[k] = -1
        lim = np.inf

        cbi = b // nbc
        cbj = b % nbc
        maxring = max(
            max(cbi - br0, br1 - cbi), max(cbj - bc0, bc1 - cbj)
        )

        for ring in range(maxring + 1):
            for bi in range(max(br0, cbi - ring), min(br1, cbi + ring) + 1):
                on_ring_row = (bi == cbi - ring) or (bi == cbi + ring)
                inner_r = (bi * _BLOCK >= rlo) and ((bi + 1) * _BLOCK - 1 <= rhi)
                for bj in range(max(bc0, cbj - ring), min(bc1, cbj + ring) + 1):
                    if not on_ring_row and (bj != cbj - ring) and (bj != cbj + ring):
                        continue
                    bb = bi * nbc + bj
                    cnt = blen[bb]
                    if cnt == 0:
                        continue
                    base = boff[bb]
                    inner = (
                        inner_r
                        and (bj * _BLOCK >= clo)
                        and ((bj + 1) * _BLOCK - 1 <= chi)
                    )
                    for t in range(base, base + cnt):
                        if not inner:
                            rr = blocr[t]
                            if rr < rlo or rr > rhi:
                                continue
                            cc = blocc[t]
                            if cc < clo or cc > chi:
                                continue
                        d = _dist2(bvecs, t, cbuf, n, lim)
                        if d > lim:
                            continue
                        idx = bidx[t]
                        if d < lim or besti[branch - 1] == -1 or idx < besti[branch - 1]:
                            k = branch - 1
                            while k > 0 and (
                                bestd[k - 1] > d
                                or (bestd[k - 1] == d and besti[k - 1] > idx)
                            ):
                                bestd[k] = bestd[k - 1]
                                besti[k] = besti[k - 1]
                                k -= 1
                            bestd[k] = d
                            besti[k] = idx
                            if found < branch:
                                found += 1
                            if besti[branch - 1] != -1:
                                lim = bestd[branch - 1]

        if found == 0:
            # window exhausted: nearest of a bounded random sample of the
            # remaining points (all of them when few remain)
            bd = np.inf
            nxt = -1
            if ucount <= _FALLBACK_SAMPLE:
                for t in range(ucount):
                    idx = unv[t]
                    d = _dist2(bvecs, pos_of[idx], cbuf, n, bd)
                    if d < bd or (d == bd and (nxt == -1 or idx < nxt)):
                        bd = d
                        nxt = idx
            else:
                for t in range(_FALLBACK_SAMPLE):
                    state, z = _rng_next(state)
                    idx = unv[int(z % _U64(ucount))]
                    d = _dist2(bvecs, pos_of[idx], cbuf, n, bd)
                    if d < bd or (d == bd and (nxt == -1 or idx < nxt)):
                        bd = d
                        nxt = idx
            chosen_d = bd
        else:
            if found == 1:
                pick = 0
            else:
                state, z = _rng_next(state)
                pick = int(z % _U64(found))
            nxt = besti[pick]
            chosen_d = bestd[pick]

        length_sum += np.sqrt(chosen_d)
        cur = nxt

    return order, length_sum
