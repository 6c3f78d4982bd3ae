# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; operation-for-operation mirror of ``_pure.py``.

Any change here must be applied to the pure-python source as well; tests
assert bit-identical outputs across the two backends.  No fast-math flags
are used, so IEEE semantics match CPython float arithmetic exactly.
"""

from libc.math cimport isfinite

import numpy as np

cdef int SIR_BASIC = 0, SIS = 1, SIR_DEATH_SIT2 = 2, SIR_DEATH_SIT13 = 3
cdef int SIR_SLEEP = 4, SIR_VITAL = 5, SIR_GLOBAL = 6
cdef int METHOD_RK4 = 0
cdef int WORKING = 0, PROBING = 1, SLEEPING = 2, LOCKED = 3
cdef int COMP_S = 0, COMP_I = 1, COMP_R = 2
cdef int R1 = 1, R2 = 2, R3 = 3
cdef int TIE_LOWEST_ID = 0


cdef inline void _rhs(int variant, const double* p, const double* y, double* out) noexcept nogil:
    cdef double b = p[0], c = p[1], m = p[2], mp = p[3], l = p[4]
    cdef double ls = p[5], lw = p[6], ks = p[7], kw = p[8], a = p[9]
    cdef double s = y[0], i = y[1], r = y[2], ss = y[3], ii = y[4], rr = y[5]
    out[3] = 0.0
    out[4] = 0.0
    out[5] = 0.0
    if variant == SIR_BASIC:
        out[0] = -(b * i * s)
        out[1] = b * i * s - c * i
        out[2] = c * i
    elif variant == SIS:
        out[0] = b * i - a * s * i
        out[1] = a * s * i - b * i
        out[2] = 0.0
    elif variant == SIR_DEATH_SIT2:
        out[0] = -(b * i * s) - m * s
        out[1] = b * i * s - c * i
        out[2] = c * i + m * s
    elif variant == SIR_DEATH_SIT13:
        out[0] = -(b * i * s) - m * s
        out[1] = b * i * s - c * i - mp * i
        out[2] = c * i - m * r
    elif variant == SIR_SLEEP:
        out[0] = ls * ss - lw * s - b * i * s - m * s
        out[1] = ls * ii - lw * i + b * i * s - c * i - m * i
        out[2] = ls * rr - lw * r + c * i - m * r
        out[3] = -(ls * ss) + lw * s
        out[4] = -(ls * ii) + lw * i
        out[5] = -(ls * rr) + lw * r
    elif variant == SIR_VITAL:
        out[0] = l - b * i * s - m * s
        out[1] = b * i * s - c * i - m * i
        out[2] = c * i - m * r
    else:
        out[0] = l + ks * ss - kw * s - b * i * s - m * s
        out[1] = ks * ii - kw * i + b * i * s - c * i - m * i
        out[2] = ks * rr - kw * r + c * i - m * r
        out[3] = -(ks * ss) + kw * s
        out[4] = -(ks * ii) + kw * i
        out[5] = -(ks * rr) + kw * r


def integrate_loop(int variant, double[::1] params, double[::1] y0, double dt,
                   long n_steps, int method, long record_every,
                   double[::1] times, double[:, ::1] states):
    """See ``_pure.integrate_loop``."""
    cdef double p[10]
    cdef double y[6]
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double yt[6]
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef long rec = 0, step
    cdef int j
    cdef bint ok

    for j in range(10):
        p[j] = params[j]
    for j in range(6):
        y[j] = y0[j]

    times[rec] = 0.0
    for j in range(6):
        states[rec, j] = y[j]
    rec += 1

    for step in range(1, n_steps + 1):
        if method == METHOD_RK4:
            _rhs(variant, p, y, k1)
            for j in range(6):
                yt[j] = y[j] + half * k1[j]
            _rhs(variant, p, yt, k2)
            for j in range(6):
                yt[j] = y[j] + half * k2[j]
            _rhs(variant, p, yt, k3)
            for j in range(6):
                yt[j] = y[j] + dt * k3[j]
            _rhs(variant, p, yt, k4)
            for j in range(6):
                y[j] = y[j] + sixth * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        else:
            _rhs(variant, p, y, k1)
            for j in range(6):
                y[j] = y[j] + dt * k1[j]
        ok = True
        for j in range(6):
            if not isfinite(y[j]):
                ok = False
        if not ok:
            return step
        if step % record_every == 0 or step == n_steps:
            times[rec] = step * dt
            for j in range(6):
                states[rec, j] = y[j]
            rec += 1
    return -1


# ---------------------------------------------------------------------------
# Central-daemon scheduler
# ---------------------------------------------------------------------------

cdef inline unsigned long long _splitmix64(unsigned long long* st) noexcept nogil:
    st[0] = st[0] + 0x9E3779B97F4A7C15ULL
    cdef unsigned long long z = st[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void _probing_preds(long v, const long[::1] indptr, const long[::1] indices,
                                const signed char* state, const signed char* comp,
                                bint* a, bint* w, bint* pst) noexcept nogil:
    cdef long k, u
    cdef signed char su
    a[0] = False
    w[0] = False
    pst[0] = False
    for k in range(indptr[v], indptr[v + 1]):
        u = indices[k]
        if comp[u] == COMP_R:
            a[0] = True
        su = state[u]
        if su == WORKING:
            w[0] = True
        elif su == PROBING and u < v:
            pst[0] = True


cdef inline bint _is_enabled(long v, const long[::1] indptr, const long[::1] indices,
                             const signed char* state, const signed char* comp) noexcept nogil:
    cdef signed char st = state[v]
    cdef bint a, w, pst
    cdef long k, u
    if st == PROBING:
        _probing_preds(v, indptr, indices, state, comp, &a, &w, &pst)
        return w or a or not pst
    if st == WORKING:
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if u < v and state[u] == WORKING:
                return True
    return False


def run_central(long[::1] indptr, long[::1] indices,
                signed char[::1] state_arr, signed char[::1] comp_arr,
                int tie_break, unsigned long long seed, long max_moves,
                long[::1] mv_node, signed char[::1] mv_rule,
                signed char[::1] mv_sb, signed char[::1] mv_sa,
                signed char[::1] mv_cb, signed char[::1] mv_ca,
                signed char[::1] mv_flags,
                long[::1] lk_move, long[::1] lk_node):
    """See ``_pure.run_central``."""
    cdef long n = indptr.shape[0] - 1
    if n == 0:
        return 0, 0, True
    cdef signed char* state = &state_arr[0]
    cdef signed char* comp = &comp_arr[0]
    cdef long n_moves = 0, n_locks = 0, n_enabled = 0
    cdef long v, u, k, kk, cand, pick, d, nd
    cdef unsigned long long rng = seed
    cdef bint a, w, pst, transfer, was, now
    cdef int rule
    cdef signed char sb, cb, st, flags

    enabled_np = np.zeros(n, dtype=np.int8)
    # Worst case per move: v, N(v), and the neighborhoods of every node v
    # locks; the latter sum is bounded by the total directed edge count.
    dirty_np = np.zeros(n + indices.shape[0] + 2, dtype=np.int64)
    cdef signed char[::1] enabled = enabled_np
    cdef long[::1] dirty = dirty_np

    for v in range(n):
        if _is_enabled(v, indptr, indices, state, comp):
            enabled[v] = 1
            n_enabled += 1

    while n_enabled > 0 and n_moves < max_moves:
        if tie_break == TIE_LOWEST_ID:
            pick = 0
        else:
            pick = <long>(_splitmix64(&rng) % <unsigned long long>n_enabled)
        v = -1
        for cand in range(n):
            if enabled[cand]:
                if pick == 0:
                    v = cand
                    break
                pick -= 1

        st = state[v]
        sb = st
        cb = comp[v]
        nd = 0
        dirty[nd] = v
        nd += 1
        for k in range(indptr[v], indptr[v + 1]):
            dirty[nd] = indices[k]
            nd += 1

        a = False
        flags = 0
        if st == PROBING:
            _probing_preds(v, indptr, indices, state, comp, &a, &w, &pst)
            flags = (1 if a else 0) | (2 if w else 0)
            if a:
                rule = R2
            elif w:
                rule = R1
            else:
                rule = R2
        else:
            rule = R3

        if rule == R1:
            transfer = False
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if state[u] == WORKING and comp[u] == COMP_I:
                    transfer = True
                    break
            if transfer:
                comp[v] = COMP_I
            state[v] = SLEEPING
        elif rule == R2:
            if a:
                for k in range(indptr[v], indptr[v + 1]):
                    u = indices[k]
                    if comp[u] == COMP_R and state[u] != LOCKED:
                        state[u] = LOCKED
                        lk_move[n_locks] = n_moves
                        lk_node[n_locks] = u
                        n_locks += 1
                        for kk in range(indptr[u], indptr[u + 1]):
                            dirty[nd] = indices[kk]
                            nd += 1
            state[v] = WORKING
        else:
            transfer = False
            if comp[v] == COMP_S:
                for k in range(indptr[v], indptr[v + 1]):
                    u = indices[k]
                    if u < v and state[u] == WORKING and comp[u] == COMP_I:
                        transfer = True
                        break
            if transfer:
                comp[v] = COMP_I
            state[v] = SLEEPING

        mv_node[n_moves] = v
        mv_rule[n_moves] = rule
        mv_sb[n_moves] = sb
        mv_sa[n_moves] = state[v]
        mv_cb[n_moves] = cb
        mv_ca[n_moves] = comp[v]
        mv_flags[n_moves] = flags
        n_moves += 1

        for k in range(nd):
            d = dirty[k]
            was = enabled[d] != 0
            now = _is_enabled(d, indptr, indices, state, comp)
            if was != now:
                enabled[d] = 1 if now else 0
                n_enabled += 1 if now else -1

    return n_moves, n_locks, n_enabled == 0
