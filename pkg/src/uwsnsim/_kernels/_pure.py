"""Pure-python kernels, operation-for-operation mirrors of ``_core.pyx``.

Any change here must be applied to the Cython source as well (and vice
versa); tests assert bit-identical outputs across the two backends.
"""

from __future__ import annotations

# Model variant codes (order matches models.Variant / _core.pyx).
SIR_BASIC, SIS, SIR_DEATH_SIT2, SIR_DEATH_SIT13, SIR_SLEEP, SIR_VITAL, SIR_GLOBAL = range(7)

# Integration methods.
METHOD_RK4, METHOD_EULER = 0, 1

# Protocol node states / compartments / rules.
WORKING, PROBING, SLEEPING, LOCKED = 0, 1, 2, 3
COMP_S, COMP_I, COMP_R = 0, 1, 2
R1, R2, R3 = 1, 2, 3
TIE_LOWEST_ID, TIE_SEEDED_RANDOM = 0, 1

_M64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# ODE stepping
# ---------------------------------------------------------------------------

def _rhs(variant, p, y):
    b, c, m, mp, l, ls, lw, ks, kw, a = p
    s, i, r, ss, ii, rr = y
    if variant == SIR_BASIC:
        return (-(b * i * s), b * i * s - c * i, c * i, 0.0, 0.0, 0.0)
    if variant == SIS:
        return (b * i - a * s * i, a * s * i - b * i, 0.0, 0.0, 0.0, 0.0)
    if variant == SIR_DEATH_SIT2:
        return (-(b * i * s) - m * s, b * i * s - c * i, c * i + m * s, 0.0, 0.0, 0.0)
    if variant == SIR_DEATH_SIT13:
        return (-(b * i * s) - m * s, b * i * s - c * i - mp * i, c * i - m * r,
                0.0, 0.0, 0.0)
    if variant == SIR_SLEEP:
        return (ls * ss - lw * s - b * i * s - m * s,
                ls * ii - lw * i + b * i * s - c * i - m * i,
                ls * rr - lw * r + c * i - m * r,
                -(ls * ss) + lw * s,
                -(ls * ii) + lw * i,
                -(ls * rr) + lw * r)
    if variant == SIR_VITAL:
        return (l - b * i * s - m * s, b * i * s - c * i - m * i, c * i - m * r,
                0.0, 0.0, 0.0)
    if variant == SIR_GLOBAL:
        return (l + ks * ss - kw * s - b * i * s - m * s,
                ks * ii - kw * i + b * i * s - c * i - m * i,
                ks * rr - kw * r + c * i - m * r,
                -(ks * ss) + kw * s,
                -(ks * ii) + kw * i,
                -(ks * rr) + kw * r)
    raise ValueError(f"unknown variant code {variant}")


def _finite(y):
    for v in y:
        # NaN fails both comparisons; infinities fail the range check.
        if not (-1.7976931348623157e308 <= v <= 1.7976931348623157e308):
            return False
    return True


def integrate_loop(variant, params, y0, dt, n_steps, method, record_every,
                   times, states):
    """Fixed-step integration; fills ``times``/``states`` rows.

    Returns -1 on success, else the 1-based step index at which the state
    became non-finite (the recorded rows before it stay valid).
    """
    p = tuple(float(v) for v in params)
    y = [float(v) for v in y0]
    half = 0.5 * dt
    sixth = dt / 6.0

    rec = 0
    times[rec] = 0.0
    for j in range(6):
        states[rec, j] = y[j]
    rec += 1

    for step in range(1, n_steps + 1):
        if method == METHOD_RK4:
            k1 = _rhs(variant, p, y)
            yt = [y[j] + half * k1[j] for j in range(6)]
            k2 = _rhs(variant, p, yt)
            yt = [y[j] + half * k2[j] for j in range(6)]
            k3 = _rhs(variant, p, yt)
            yt = [y[j] + dt * k3[j] for j in range(6)]
            k4 = _rhs(variant, p, yt)
            y = [y[j] + sixth * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                 for j in range(6)]
        else:
            k1 = _rhs(variant, p, y)
            y = [y[j] + dt * k1[j] for j in range(6)]
        if not _finite(y):
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

def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, z ^ (z >> 31)


def run_central(indptr, indices, state_arr, comp_arr, tie_break, seed,
                max_moves, mv_node, mv_rule, mv_sb, mv_sa, mv_cb, mv_ca,
                mv_flags, lk_move, lk_node):
    """One central-daemon episode: fire one enabled rule per step until
    quiescence or ``max_moves``.

    ``state_arr``/``comp_arr`` are mutated in place; the mv_*/lk_* arrays
    receive the move trace and the (move index, locked node) pairs.
    ``mv_flags`` records the fire-time guard context (bit0: A held,
    bit1: W held); the trace scans key on it.  Returns
    (n_moves, n_locks, quiescent).
    """
    n = len(indptr) - 1
    indptr = [int(v) for v in indptr]
    indices = [int(v) for v in indices]
    state = [int(v) for v in state_arr]
    comp = [int(v) for v in comp_arr]

    def probing_preds(v):
        a = w = pst = False
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if comp[u] == COMP_R:
                a = True
            su = state[u]
            if su == WORKING:
                w = True
            elif su == PROBING and u < v:
                pst = True
        return a, w, pst

    def is_enabled(v):
        st = state[v]
        if st == PROBING:
            a, w, pst = probing_preds(v)
            return w or a or not pst
        if st == WORKING:
            for k in range(indptr[v], indptr[v + 1]):
                u = indices[k]
                if u < v and state[u] == WORKING:
                    return True
        return False

    enabled = [is_enabled(v) for v in range(n)]
    n_enabled = sum(enabled)

    rng = seed & _M64
    n_moves = 0
    n_locks = 0
    while n_enabled > 0 and n_moves < max_moves:
        if tie_break == TIE_LOWEST_ID:
            pick = 0
        else:
            rng, draw = _splitmix64(rng)
            pick = draw % n_enabled
        v = -1
        for cand in range(n):
            if enabled[cand]:
                if pick == 0:
                    v = cand
                    break
                pick -= 1

        st = state[v]
        sb, cb = st, comp[v]
        dirty = [v]
        for k in range(indptr[v], indptr[v + 1]):
            dirty.append(indices[k])

        flags = 0
        if st == PROBING:
            a, w, pst = probing_preds(v)
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
                            dirty.append(indices[kk])
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

        for d in dirty:
            was = enabled[d]
            now = is_enabled(d)
            if was != now:
                enabled[d] = now
                n_enabled += 1 if now else -1

    for v in range(n):
        state_arr[v] = state[v]
        comp_arr[v] = comp[v]
    return n_moves, n_locks, n_enabled == 0
