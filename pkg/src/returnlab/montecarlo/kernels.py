"""Numba kernels for walk simulation.

Each kernel handles a contiguous trial range ``[lo, hi)`` and seeds trial
``i`` from ``(key0, i)``, so any split of the range across workers produces
the same per-trial output. Neighbor choice is ``floor(u * deg)`` with ``u``
a 53-bit uniform.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .rng import STATE_SIZE, init_state, next_index

_STREAM_X = np.uint64(0)
_STREAM_Y = np.uint64(1)


@njit(cache=True, inline="always")
def _step(indptr, indices, x, state):
    d = indptr[x + 1] - indptr[x]
    return indices[indptr[x] + next_index(state, d)]


@njit(cache=True)
def hit_times(indptr, indices, start, target_mask, cap, key0, lo, hi, stream):
    """First time t >= 1 the walk from ``start`` is in the target; -1 if > cap."""
    out = np.empty(hi - lo, np.int64)
    state = np.zeros(STATE_SIZE, np.uint64)
    for i in range(lo, hi):
        init_state(state, key0, np.uint64(i), np.uint64(stream))
        x = start
        res = -1
        for t in range(1, cap + 1):
            x = _step(indptr, indices, x, state)
            if target_mask[x]:
                res = t
                break
        out[i - lo] = res
    return out


@njit(cache=True)
def excursion_visits(indptr, indices, v, cap, key0, lo, hi):
    """Per-vertex sum and sum of squares of visit counts during one excursion from v.

    Visits at times 1..tau_v are counted (the return itself counts for v).
    Excursions longer than ``cap`` are discarded and counted as censored.
    """
    n = len(indptr) - 1
    sums = np.zeros(n)
    sumsq = np.zeros(n)
    counts = np.zeros(n, np.int64)
    path = np.empty(cap, np.int64)
    state = np.zeros(STATE_SIZE, np.uint64)
    censored = 0
    for i in range(lo, hi):
        init_state(state, key0, np.uint64(i), _STREAM_X)
        x = v
        length = 0
        done = False
        for t in range(cap):
            x = _step(indptr, indices, x, state)
            path[length] = x
            length += 1
            counts[x] += 1
            if x == v:
                done = True
                break
        if done:
            for k in range(length):
                u = path[k]
                c = counts[u]
                if c > 0:
                    sums[u] += c
                    sumsq[u] += c * c
                    counts[u] = 0
        else:
            censored += 1
            for k in range(length):
                counts[path[k]] = 0
    return sums, sumsq, censored


@njit(cache=True)
def collide_before_exit(indptr, indices, u1, u2, exit_vertex, horizon, key0, lo, hi):
    """1 if two independent walkers meet at some 1 <= t <= horizon before
    (or at) the first time either reaches ``exit_vertex``."""
    out = np.zeros(hi - lo, np.uint8)
    sx = np.zeros(STATE_SIZE, np.uint64)
    sy = np.zeros(STATE_SIZE, np.uint64)
    for i in range(lo, hi):
        init_state(sx, key0, np.uint64(i), _STREAM_X)
        init_state(sy, key0, np.uint64(i), _STREAM_Y)
        x = u1
        y = u2
        for t in range(1, horizon + 1):
            x = _step(indptr, indices, x, sx)
            y = _step(indptr, indices, y, sy)
            if x == y:
                out[i - lo] = 1
                break
            if x == exit_vertex or y == exit_vertex:
                break
    return out


@njit(cache=True)
def one_step_counts(indptr, indices, v, count, key0, trial):
    n = len(indptr) - 1
    out = np.zeros(n, np.int64)
    state = np.zeros(STATE_SIZE, np.uint64)
    init_state(state, key0, np.uint64(trial), _STREAM_X)
    for _ in range(count):
        out[_step(indptr, indices, v, state)] += 1
    return out


# comb products ------------------------------------------------------------
#
# A comb walker is a pair (b, w): b on the base, w on the tooth. Either
# factor may be Z, stored as a plain integer with neighbors b - 1, b + 1;
# otherwise it is a CSR vertex id. At the attachment vertex the walker picks
# uniformly among deg_base(b) + deg_tooth(attach) moves.

@njit(cache=True, inline="always")
def _deg(is_z, ptr, x):
    if is_z:
        return 2
    return ptr[x + 1] - ptr[x]


@njit(cache=True, inline="always")
def _nbr(is_z, ptr, ind, x, r):
    if is_z:
        return x - 1 if r == 0 else x + 1
    return ind[ptr[x] + r]


@njit(cache=True)
def comb_step(b, w, state, b_is_z, b_ptr, b_ind, t_is_z, t_ptr, t_ind, attach):
    """One comb step; returns (b, w, moved_on_base)."""
    dt = _deg(t_is_z, t_ptr, w)
    if w == attach:
        db = _deg(b_is_z, b_ptr, b)
        r = next_index(state, db + dt)
        if r < db:
            return _nbr(b_is_z, b_ptr, b_ind, b, r), w, True
        return b, _nbr(t_is_z, t_ptr, t_ind, w, r - db), False
    return b, _nbr(t_is_z, t_ptr, t_ind, w, next_index(state, dt)), False


@njit(cache=True)
def comb_step_samples(b, w, count, key0, trial, b_is_z, b_ptr, b_ind, t_is_z, t_ptr, t_ind, attach):
    bs = np.empty(count, np.int64)
    ws = np.empty(count, np.int64)
    state = np.zeros(STATE_SIZE, np.uint64)
    init_state(state, key0, np.uint64(trial), _STREAM_X)
    for k in range(count):
        nb, nw, _ = comb_step(b, w, state, b_is_z, b_ptr, b_ind, t_is_z, t_ptr, t_ind, attach)
        bs[k] = nb
        ws[k] = nw
    return bs, ws


@njit(cache=True)
def comb_collisions(key0, lo, hi, total_steps, b_is_z, b_ptr, b_ind, b_start,
                    t_is_z, t_ptr, t_ind, t_start, attach, expander_id,
                    win_end, ck_time, ck_window):
    """Two independent walkers on a comb, both started at (b_start, t_start).

    Windows are the half-open time ranges (win_end[i-1], win_end[i]] with
    win_end[-1] = 0. Per trial and window this records the number of times
    t with X_t = Y_t and the number of checkpoints where both walkers share a
    base point while both teeth coordinates lie in the expander of that
    window's scale (``expander_id`` per tooth vertex; pass an empty array to
    skip). At each checkpoint it also records, per walker, the number of base
    moves taken since the window opened.
    """
    n_win = len(win_end)
    n_ck = len(ck_time)
    ntr = hi - lo
    coll = np.zeros((ntr, n_win), np.int64)
    ihits = np.zeros((ntr, n_win), np.int64)
    ell = np.zeros((ntr, 2, n_ck), np.int64)
    in_exp = np.zeros((ntr, 2, n_ck), np.uint8)
    final = np.zeros((ntr, 4), np.int64)
    use_exp = len(expander_id) > 0
    sx = np.zeros(STATE_SIZE, np.uint64)
    sy = np.zeros(STATE_SIZE, np.uint64)
    for i in range(lo, hi):
        row = i - lo
        init_state(sx, key0, np.uint64(i), _STREAM_X)
        init_state(sy, key0, np.uint64(i), _STREAM_Y)
        bx = b_start
        wx = t_start
        by = b_start
        wy = t_start
        lx = 0
        ly = 0
        lx0 = 0
        ly0 = 0
        win = 0
        ck = 0
        for t in range(1, total_steps + 1):
            if t > win_end[win]:
                win += 1
                lx0 = lx
                ly0 = ly
            bx, wx, mx = comb_step(bx, wx, sx, b_is_z, b_ptr, b_ind, t_is_z, t_ptr, t_ind, attach)
            by, wy, my = comb_step(by, wy, sy, b_is_z, b_ptr, b_ind, t_is_z, t_ptr, t_ind, attach)
            if mx:
                lx += 1
            if my:
                ly += 1
            if bx == by and wx == wy:
                coll[row, win] += 1
            if ck < n_ck and t == ck_time[ck]:
                ell[row, 0, ck] = lx - lx0
                ell[row, 1, ck] = ly - ly0
                if use_exp:
                    sc = ck_window[ck]
                    ex = expander_id[wx] == sc
                    ey = expander_id[wy] == sc
                    in_exp[row, 0, ck] = ex
                    in_exp[row, 1, ck] = ey
                    if ex and ey and bx == by:
                        ihits[row, sc] += 1
                ck += 1
        final[row, 0] = bx
        final[row, 1] = wx
        final[row, 2] = by
        final[row, 3] = wy
    return coll, ihits, ell, in_exp, final
