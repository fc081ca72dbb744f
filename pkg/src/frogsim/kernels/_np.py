"""Pure-numpy kernels, semantically identical to ``_nb.py``.

The coupled and walk kernels reproduce the numba results bit for bit (the
randomness is the same counter hash); only the order in which particles sit
in the registry differs. The aggregated kernel uses numpy's own multinomial
sampler, so it agrees with the numba version in law, not per realization.
"""

import heapq

import numpy as np

from .._hashing import TAG_CLOCK, counter_bits_np, fold_np, to_unit_np

DONE = 0
TARGETS_REACHED = 1
NEED_CAPACITY = 2
BOX_OVERFLOW = 3

_CHUNK = 1 << 22  # elements per vectorized block in the walk kernels


def _step_vectors(d):
    out = np.zeros((2 * d, d), dtype=np.int64)
    for i in range(d):
        out[2 * i, i] = 1
        out[2 * i + 1, i] = -1
    return out


def decode(flat, strides, side, W, center):
    flat = np.asarray(flat, dtype=np.int64)
    out = np.empty(flat.shape + (len(strides),), dtype=np.int64)
    for i, s in enumerate(strides):
        out[..., i] = (flat // s) % side - W + center[i]
    return out


def hash_coords(h0, coords):
    h = np.full(coords.shape[0], h0, dtype=np.uint64)
    for i in range(coords.shape[1]):
        h = fold_np(h, coords[:, i].astype(np.int64).view(np.uint64))
    return h


def site_counts(kind, m, inv_delta, cap_exp, twod, seed_cnt, coords):
    k = coords.shape[0]
    if kind == 0:
        return np.ones(k, dtype=np.int64), 0
    if kind == 1:
        return np.full(k, m, dtype=np.int64), 0
    u = 1.0 - to_unit_np(hash_coords(seed_cnt, coords))
    with np.errstate(over="ignore", divide="ignore"):
        nf = np.floor(u ** (-inv_delta))
    capped = nf > cap_exp
    nf = np.where(capped, cap_exp, nf).astype(np.int64)
    return np.power(np.int64(twod), nf), int(capped.sum())


def advance_coupled(awake, target_mask, offsets, strides, W, center, seed_pk, seed_cnt,
                    kind, m, inv_delta, cap_exp, pos, key, ksteps, origin, jidx,
                    pend_site, pend_count, scal, t_end):
    d = len(strides)
    twod = 2 * d
    utwod = np.uint64(twod)
    side = 2 * W + 1
    cap = pos.shape[0]
    time, n_act, n_pend, remaining, cap_events, has_t = (int(v) for v in scal[:6])
    status = DONE
    while True:
        if n_pend > 0:
            counts = pend_count[:n_pend]
            need = int(counts.sum())
            if n_act + need > cap:
                status = NEED_CAPACITY
                break
            sites = pend_site[:n_pend]
            h = hash_coords(seed_pk, decode(sites, strides, side, W, center))
            j = np.arange(need, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
            sl = slice(n_act, n_act + need)
            key[sl] = fold_np(np.repeat(h, counts), j.view(np.uint64))
            pos[sl] = np.repeat(sites, counts)
            ksteps[sl] = 0
            origin[sl] = pos[sl]
            jidx[sl] = j
            n_act += need
            n_pend = 0
        if has_t and remaining == 0:
            status = TARGETS_REACHED
            break
        if time >= t_end:
            break
        time += 1
        a = slice(0, n_act)
        ksteps[a] += 1
        b = counter_bits_np(key[a], ksteps[a])
        pos[a] += offsets[(b % utwod).astype(np.int64)]
        p = pos[a]
        fresh = p[awake[p] < 0]
        if fresh.size:
            sites = np.unique(fresh)
            awake[sites] = time
            counts, capped = site_counts(kind, m, inv_delta, cap_exp, twod, seed_cnt,
                                         decode(sites, strides, side, W, center))
            cap_events += capped
            n_pend = sites.size
            pend_site[:n_pend] = sites
            pend_count[:n_pend] = counts
            if has_t:
                remaining -= int(target_mask[sites].sum())
    scal[:5] = (time, n_act, n_pend, remaining, cap_events)
    return status


def aggregated_step(awake, target_mask, offsets, strides, W, center, seed_cnt, rng,
                    kind, m, inv_delta, cap_exp, cnt, nxt, occ, newocc, scal):
    d = len(strides)
    twod = 2 * d
    side = 2 * W + 1
    time = int(scal[0]) + 1
    n_occ = int(scal[1])
    s = occ[:n_occ]
    c = cnt[s]
    cnt[s] = 0
    splits = rng.multinomial(c, np.full(twod, 1.0 / twod)).ravel()
    dest = (s[:, None] + offsets[None, :]).ravel()
    keep = splits > 0
    np.add.at(nxt, dest[keep], splits[keep])
    new = np.unique(dest[keep])
    cnt[new] = nxt[new]
    nxt[new] = 0
    fresh = new[awake[new] < 0]
    if fresh.size:
        awake[fresh] = time
        counts, capped = site_counts(kind, m, inv_delta, cap_exp, twod, seed_cnt,
                                     decode(fresh, strides, side, W, center))
        scal[3] += capped
        cnt[fresh] += counts
        if scal[4]:
            scal[2] -= int(target_mask[fresh].sum())
    occ[: new.size] = new
    scal[0] = time
    scal[1] = new.size


def _trajectory(key, t0, t_end, d):
    """Jump clock times (> t0, <= t_end) and direction indices of one particle."""
    ckey = key ^ TAG_CLOCK
    n = max(16, int(2 * (t_end - t0)) + 16)
    while True:
        k = np.arange(1, n + 1, dtype=np.uint64)
        hold = -np.log(1.0 - to_unit_np(counter_bits_np(ckey, k)))
        clocks = np.cumsum(np.concatenate(([t0], hold)))[1:]
        if clocks[-1] > t_end:
            break
        n *= 2
    nj = int(np.searchsorted(clocks, t_end, side="right"))
    dirs = (counter_bits_np(key, k[:nj]) % np.uint64(2 * d)).astype(np.int64)
    return clocks[:nj], dirs


def ct_solve(awake_t, hops, strides, offsets, W, center, start, seed_pk, seed_cnt,
             kind, m, inv_delta, cap_exp, t_end, p_pos, p_key, p_jumps, p_origin, p_j,
             order, scal):
    d = len(strides)
    twod = 2 * d
    side = 2 * W + 1
    cap = p_pos.shape[0]
    steps = _step_vectors(d)
    tent = np.full(awake_t.shape[0], np.inf)
    tent_h = np.zeros(awake_t.shape[0], dtype=np.int64)
    tent[start] = 0.0
    heap = [(0.0, int(start))]
    n_set = n_p = cap_events = 0
    while heap:
        t, s = heapq.heappop(heap)
        if t > tent[s] or awake_t[s] <= t_end:
            continue
        awake_t[s] = t
        hops[s] = tent_h[s]
        order[n_set] = s
        n_set += 1
        coords = decode(np.array([s]), strides, side, W, center)
        counts, capped = site_counts(kind, m, inv_delta, cap_exp, twod, seed_cnt, coords)
        c = int(counts[0])
        cap_events += capped
        if n_p + c > cap:
            scal[:3] = (n_set, n_p, cap_events)
            return NEED_CAPACITY
        keys = fold_np(np.repeat(hash_coords(seed_pk, coords), c), np.arange(c, dtype=np.uint64))
        for j in range(c):
            clocks, dirs = _trajectory(keys[j], t, t_end, d)
            path = coords[0] + np.cumsum(steps[dirs], axis=0)
            if path.size and np.any(np.abs(path - center) > W):
                scal[:3] = (n_set, n_p, cap_events)
                return BOX_OVERFLOW
            flats = (path - center + W) @ strides
            if flats.size:
                uniq, first = np.unique(flats, return_index=True)
                ft = clocks[first]
                better = (awake_t[uniq] > t_end) & (ft < tent[uniq])
                for site, tt, kk in zip(uniq[better], ft[better], first[better] + 1):
                    tent[site] = tt
                    tent_h[site] = hops[s] + kk
                    heapq.heappush(heap, (float(tt), int(site)))
                p_pos[n_p] = flats[-1]
            else:
                p_pos[n_p] = s
            p_key[n_p] = keys[j]
            p_jumps[n_p] = dirs.size
            p_origin[n_p] = s
            p_j[n_p] = j
            n_p += 1
    scal[:3] = (n_set, n_p, cap_events)
    return DONE


def _paths(keys, n, d, k0=1):
    """Positions S_k0..S_n (k0 >= 1) for each key; shape (R, n - k0 + 1, d)."""
    k = np.arange(k0, n + 1, dtype=np.uint64)
    dirs = (counter_bits_np(keys[:, None], k[None, :]) % np.uint64(2 * d)).astype(np.int64)
    return np.cumsum(_step_vectors(d)[dirs], axis=1)


def _row_chunks(R, n, d):
    per = max(1, _CHUNK // max(1, n * d))
    for lo in range(0, R, per):
        yield slice(lo, min(R, lo + per))


def walk_endpoints(keys, n, d, out):
    out[:] = 0
    if n == 0:
        return
    for sl in _row_chunks(len(keys), n, d):
        out[sl] = _paths(keys[sl], n, d)[:, -1, :]


def walk_hitting_times(keys, n, target, out):
    d = target.shape[0]
    if not np.any(target):
        out[:] = 0
        return
    out[:] = -1
    if n == 0:
        return
    for sl in _row_chunks(len(keys), n, d):
        hit = np.all(_paths(keys[sl], n, d) == target, axis=2)
        any_hit = hit.any(axis=1)
        out[sl] = np.where(any_hit, hit.argmax(axis=1) + 1, -1)


def walk_sup_sq(keys, n, d, out):
    out[:] = 0
    if n == 0:
        return
    for sl in _row_chunks(len(keys), n, d):
        out[sl] = (_paths(keys[sl], n, d) ** 2).sum(axis=2).max(axis=1)


def walk_ranges(keys, n, d, out):
    base = 2 * n + 1
    weights = base ** np.arange(d, dtype=np.int64)
    for sl in _row_chunks(len(keys), n + 1, d):
        rows = keys[sl]
        codes = np.zeros((len(rows), n + 1), dtype=np.int64)
        if n > 0:
            codes[:, 1:] = (_paths(rows, n, d) + n) @ weights
        codes[:, 0] = n * weights.sum()
        codes.sort(axis=1)
        out[sl] = 1 + (np.diff(codes, axis=1) != 0).sum(axis=1)
