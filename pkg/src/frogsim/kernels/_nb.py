"""Numba kernels. Each has a numpy twin in ``_np.py`` with identical semantics."""

import numpy as np
from numba import njit

from .._hashing import GOLDEN, INV53, M1, M2, S11, S27, S30, S31, TAG_CLOCK

# kernel status codes
DONE = 0
TARGETS_REACHED = 1
NEED_CAPACITY = 2
BOX_OVERFLOW = 3


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


@njit(cache=True)
def fold(h, v):
    return mix64(h ^ (v + GOLDEN))


@njit(cache=True)
def to_unit(bits):
    return np.float64(bits >> S11) * INV53


@njit(cache=True)
def counter_bits(key, k):
    return mix64(key + np.uint64(k) * GOLDEN)


@njit(cache=True)
def hash_coords(h, coords):
    for i in range(coords.shape[0]):
        h = fold(h, np.uint64(coords[i]))
    return h


@njit(cache=True)
def decode(flat, strides, side, W, center, out):
    for i in range(strides.shape[0]):
        out[i] = (flat // strides[i]) % side - W + center[i]


@njit(cache=True)
def site_count(kind, m, inv_delta, cap_exp, twod, seed_cnt, coords):
    """Initial particle count of a site; returns (count, capped flag)."""
    if kind == 0:
        return 1, 0
    if kind == 1:
        return m, 0
    u = 1.0 - to_unit(hash_coords(seed_cnt, coords))
    nf = np.floor(u ** (-inv_delta))
    capped = 0
    if nf > cap_exp:
        nf = cap_exp
        capped = 1
    c = 1
    for _ in range(int(nf)):
        c *= twod
    return c, capped


# ----------------------------------------------------------------------------
# discrete time, coupled (per-particle) mode
# ----------------------------------------------------------------------------


@njit(cache=True)
def advance_coupled(awake, target_mask, offsets, strides, W, center, seed_pk, seed_cnt,
                    kind, m, inv_delta, cap_exp, pos, key, ksteps, origin, jidx,
                    pend_site, pend_count, scal, t_end):
    """Advance the coupled engine to time ``t_end`` (or until targets are awake).

    ``scal`` = [time, n_active, n_pending, remaining_targets, cap_events, has_targets].
    Sites awakened during a step are queued as pending and their sleepers join
    the active list before the next step, so they first move one step later.
    """
    d = strides.shape[0]
    twod = 2 * d
    utwod = np.uint64(twod)
    side = 2 * W + 1
    cap = pos.shape[0]
    time = scal[0]
    n_act = scal[1]
    n_pend = scal[2]
    remaining = scal[3]
    cap_events = scal[4]
    has_t = scal[5]
    coords = np.empty(d, np.int64)
    status = DONE
    while True:
        if n_pend > 0:
            need = 0
            for q in range(n_pend):
                need += pend_count[q]
            if n_act + need > cap:
                status = NEED_CAPACITY
                break
            for q in range(n_pend):
                s = pend_site[q]
                decode(s, strides, side, W, center, coords)
                h = hash_coords(seed_pk, coords)
                for j in range(pend_count[q]):
                    key[n_act] = fold(h, np.uint64(j))
                    pos[n_act] = s
                    ksteps[n_act] = 0
                    origin[n_act] = s
                    jidx[n_act] = j
                    n_act += 1
            n_pend = 0
        if has_t != 0 and remaining == 0:
            status = TARGETS_REACHED
            break
        if time >= t_end:
            status = DONE
            break
        time += 1
        for i in range(n_act):
            kk = ksteps[i] + 1
            ksteps[i] = kk
            b = counter_bits(key[i], kk)
            p = pos[i] + offsets[np.int64(b % utwod)]
            pos[i] = p
            if awake[p] < 0:
                awake[p] = time
                decode(p, strides, side, W, center, coords)
                c, capped = site_count(kind, m, inv_delta, cap_exp, twod, seed_cnt, coords)
                cap_events += capped
                pend_site[n_pend] = p
                pend_count[n_pend] = c
                n_pend += 1
                if has_t != 0 and target_mask[p] != 0:
                    remaining -= 1
    scal[0] = time
    scal[1] = n_act
    scal[2] = n_pend
    scal[3] = remaining
    scal[4] = cap_events
    return status


# ----------------------------------------------------------------------------
# discrete time, aggregated (per-site counts) mode
# ----------------------------------------------------------------------------


@njit(cache=True)
def aggregated_step(awake, target_mask, offsets, strides, W, center, seed_cnt, rng,
                    kind, m, inv_delta, cap_exp, cnt, nxt, occ, newocc, scal):
    """One step of per-site multinomial dispersal, drawing from ``rng``.

    ``scal`` = [time, n_occupied, remaining_targets, cap_events, has_targets].
    Each site's count is split by sequential binomials over the 2d
    directions (numpy's multinomial scheme; BTPE keeps huge counts O(1)).
    """
    d = strides.shape[0]
    twod = 2 * d
    side = 2 * W + 1
    time = scal[0] + 1
    n_occ = scal[1]
    coords = np.empty(d, np.int64)
    pr = 1.0 / twod
    n_new = 0
    for q in range(n_occ):
        s = occ[q]
        rem = cnt[s]
        cnt[s] = 0
        remaining_p = 1.0
        for r in range(twod):
            if rem <= 0:
                break
            if r == twod - 1:
                x = rem
            else:
                x = rng.binomial(rem, pr / remaining_p)
                remaining_p -= pr
            if x > 0:
                t = s + offsets[r]
                if nxt[t] == 0:
                    newocc[n_new] = t
                    n_new += 1
                nxt[t] += x
                rem -= x
    for q in range(n_new):
        t = newocc[q]
        cnt[t] = nxt[t]
        nxt[t] = 0
        if awake[t] < 0:
            awake[t] = time
            decode(t, strides, side, W, center, coords)
            c, capped = site_count(kind, m, inv_delta, cap_exp, twod, seed_cnt, coords)
            scal[3] += capped
            cnt[t] += c
            if scal[4] != 0 and target_mask[t] != 0:
                scal[2] -= 1
        occ[q] = t
    scal[0] = time
    scal[1] = n_new


# ----------------------------------------------------------------------------
# continuous time, coupled mode
# ----------------------------------------------------------------------------


@njit(cache=True)
def _heap_push(ht, hs, n, t, s):
    i = n
    ht[i] = t
    hs[i] = s
    while i > 0:
        parent = (i - 1) >> 1
        if ht[parent] <= ht[i]:
            break
        ht[parent], ht[i] = ht[i], ht[parent]
        hs[parent], hs[i] = hs[i], hs[parent]
        i = parent
    return n + 1


@njit(cache=True)
def _heap_pop(ht, hs, n):
    t = ht[0]
    s = hs[0]
    n -= 1
    ht[0] = ht[n]
    hs[0] = hs[n]
    i = 0
    while True:
        lft = 2 * i + 1
        if lft >= n:
            break
        c = lft
        if lft + 1 < n and ht[lft + 1] < ht[lft]:
            c = lft + 1
        if ht[i] <= ht[c]:
            break
        ht[c], ht[i] = ht[i], ht[c]
        hs[c], hs[i] = hs[i], hs[c]
        i = c
    return t, s, n


@njit(cache=True)
def ct_solve(awake_t, hops, strides, offsets, W, center, start, seed_pk, seed_cnt,
             kind, m, inv_delta, cap_exp, t_end, p_pos, p_key, p_jumps, p_origin, p_j,
             order, scal):
    """Continuous-time awakening times by label-setting over sites.

    A site's awakening time is the earliest visit by any particle from an
    already-awakened site. Sites are settled in increasing time from a binary
    heap of tentative (time, site) events; when a site settles, each of its
    particles' walks is realized over [T(site), t_end] and offers tentative
    times to the sites it visits. Particle ``(x, j)`` makes its k-th jump in
    direction ``counter_bits(key, k) % 2d`` after an Exp(1) holding time drawn
    from the clock stream, so the embedded jump chain equals the discrete walk.

    ``scal`` = [n_settled, n_particles, cap_events]. Status BOX_OVERFLOW or
    NEED_CAPACITY asks the caller to rerun with larger buffers.
    """
    d = strides.shape[0]
    twod = 2 * d
    utwod = np.uint64(twod)
    side = 2 * W + 1
    size = awake_t.shape[0]
    cap = p_pos.shape[0]
    tent = np.full(size, np.inf)
    tent_h = np.zeros(size, np.int64)
    hcap = 1024
    ht = np.empty(hcap, np.float64)
    hs = np.empty(hcap, np.int64)
    hn = 0
    tent[start] = 0.0
    settled = np.zeros(size, np.uint8)  # compact copy of isfinite(awake_t), cache friendly
    hn = _heap_push(ht, hs, hn, 0.0, start)
    coords = np.empty(d, np.int64)
    cur = np.empty(d, np.int64)
    n_set = 0
    n_p = 0
    cap_events = 0
    while hn > 0:
        t, s, hn = _heap_pop(ht, hs, hn)
        if t > tent[s] or settled[s] != 0:
            continue
        awake_t[s] = t
        settled[s] = 1
        hops[s] = tent_h[s]
        order[n_set] = s
        n_set += 1
        decode(s, strides, side, W, center, coords)
        c, capped = site_count(kind, m, inv_delta, cap_exp, twod, seed_cnt, coords)
        cap_events += capped
        if n_p + c > cap:
            scal[0] = n_set
            scal[1] = n_p
            scal[2] = cap_events
            return NEED_CAPACITY
        h0 = hash_coords(seed_pk, coords)
        for j in range(c):
            key = fold(h0, np.uint64(j))
            ckey = key ^ TAG_CLOCK
            p = s
            for i in range(d):
                cur[i] = coords[i]
            clock = t
            k = 0
            while True:
                clock += -np.log(1.0 - to_unit(counter_bits(ckey, k + 1)))
                if clock > t_end:
                    break
                k += 1
                r = np.int64(counter_bits(key, k) % utwod)
                ax = r >> 1
                if r & 1:
                    cur[ax] -= 1
                else:
                    cur[ax] += 1
                if abs(cur[ax] - center[ax]) > W:
                    scal[0] = n_set
                    scal[1] = n_p
                    scal[2] = cap_events
                    return BOX_OVERFLOW
                p += offsets[r]
                if settled[p] == 0 and clock < tent[p]:
                    tent[p] = clock
                    tent_h[p] = hops[s] + k
                    if hn == hcap:
                        hcap *= 2
                        nt = np.empty(hcap, np.float64)
                        ns = np.empty(hcap, np.int64)
                        nt[:hn] = ht[:hn]
                        ns[:hn] = hs[:hn]
                        ht = nt
                        hs = ns
                    hn = _heap_push(ht, hs, hn, clock, p)
            p_pos[n_p] = p
            p_key[n_p] = key
            p_jumps[n_p] = k
            p_origin[n_p] = s
            p_j[n_p] = j
            n_p += 1
    scal[0] = n_set
    scal[1] = n_p
    scal[2] = cap_events
    return DONE


# ----------------------------------------------------------------------------
# single-walk Monte Carlo
# ----------------------------------------------------------------------------


@njit(cache=True)
def walk_endpoints(keys, n, d, out):
    utwod = np.uint64(2 * d)
    for r in range(keys.shape[0]):
        for i in range(d):
            out[r, i] = 0
        for k in range(1, n + 1):
            dr = np.int64(counter_bits(keys[r], k) % utwod)
            if dr & 1:
                out[r, dr >> 1] -= 1
            else:
                out[r, dr >> 1] += 1


@njit(cache=True)
def walk_hitting_times(keys, n, target, out):
    """First k <= n with S_k = target (walk from 0), else -1."""
    d = target.shape[0]
    utwod = np.uint64(2 * d)
    cur = np.empty(d, np.int64)
    for r in range(keys.shape[0]):
        for i in range(d):
            cur[i] = 0
        hit = -1
        at = True
        for i in range(d):
            if target[i] != 0:
                at = False
        if at:
            hit = 0
        k = 0
        while hit < 0 and k < n:
            k += 1
            dr = np.int64(counter_bits(keys[r], k) % utwod)
            if dr & 1:
                cur[dr >> 1] -= 1
            else:
                cur[dr >> 1] += 1
            at = True
            for i in range(d):
                if cur[i] != target[i]:
                    at = False
                    break
            if at:
                hit = k
        out[r] = hit


@njit(cache=True)
def walk_sup_sq(keys, n, d, out):
    """max_{k<=n} |S_k|^2 per walk."""
    utwod = np.uint64(2 * d)
    cur = np.empty(d, np.int64)
    for r in range(keys.shape[0]):
        for i in range(d):
            cur[i] = 0
        best = 0
        sq = 0
        for k in range(1, n + 1):
            dr = np.int64(counter_bits(keys[r], k) % utwod)
            ax = dr >> 1
            old = cur[ax]
            if dr & 1:
                cur[ax] = old - 1
            else:
                cur[ax] = old + 1
            sq += cur[ax] * cur[ax] - old * old
            if sq > best:
                best = sq
        out[r] = best


@njit(cache=True)
def walk_ranges(keys, n, d, out):
    """Number of distinct sites visited by S_0..S_n, via an open-addressing set."""
    utwod = np.uint64(2 * d)
    tsize = 1
    while tsize < 2 * (n + 1):
        tsize *= 2
    mask = tsize - 1
    table = np.zeros(tsize, np.int64)
    base = 2 * n + 1
    cur = np.empty(d, np.int64)
    for r in range(keys.shape[0]):
        table[:] = 0
        for i in range(d):
            cur[i] = 0
        distinct = 0
        for k in range(0, n + 1):
            if k > 0:
                dr = np.int64(counter_bits(keys[r], k) % utwod)
                if dr & 1:
                    cur[dr >> 1] -= 1
                else:
                    cur[dr >> 1] += 1
            code = 0
            for i in range(d - 1, -1, -1):
                code = code * base + (cur[i] + n)
            code += 1
            slot = np.int64(mix64(np.uint64(code)) & np.uint64(mask))
            while True:
                v = table[slot]
                if v == 0:
                    table[slot] = code
                    distinct += 1
                    break
                if v == code:
                    break
                slot = (slot + 1) & mask
        out[r] = distinct
