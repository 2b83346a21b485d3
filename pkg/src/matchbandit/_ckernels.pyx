# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every kernel consumes caller-supplied uniforms so that the pure-Python
fallback in ``_pykernels`` reproduces its output bit for bit.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, INFINITY, fabs

cnp.import_array()

# reward kinds (mirrored in _pykernels)
DEF DET = 0
DEF BERN = 1
DEF UNIF = 2
DEF BETA = 3


cdef inline double _draw(long kind, double p0, double p1, long tid,
                         double u, const double[:, ::1] tables,
                         bint *hit) noexcept nogil:
    cdef long g, j
    cdef double x, f
    if kind == DET:
        hit[0] = p0 > 0.0
        return p0
    if kind == BERN:
        if u < p0:
            hit[0] = True
            return p1
        hit[0] = False
        return 0.0
    if kind == UNIF:
        x = p0 + (p1 - p0) * u
        hit[0] = x > 0.0
        return x
    g = tables.shape[1] - 1
    x = u * g
    j = <long>x
    if j >= g:
        j = g - 1
    f = x - j
    x = tables[tid, j] + f * (tables[tid, j + 1] - tables[tid, j])
    hit[0] = x > 0.0
    return x


cdef inline long _next_state(const double[:] row, double u) noexcept nogil:
    cdef long s = 0
    cdef long last = row.shape[0] - 1
    while s < last and u >= row[s]:
        s += 1
    return s


def greedy_scan(const long[::1] order, const long[::1] class_of,
                const long[::1] capacities, long m_agents, long m_incentives):
    """Run the capacitated greedy pass over edges given in priority order."""
    cdef long n = order.shape[0]
    cdef cnp.ndarray[cnp.uint8_t] agent_used = np.zeros(m_agents, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t] inc_used = np.zeros(m_incentives, dtype=np.uint8)
    cdef cnp.ndarray[long] count = np.zeros(capacities.shape[0], dtype=np.int64)
    cdef cnp.ndarray[long] chosen = np.empty(min(m_agents, m_incentives), dtype=np.int64)
    cdef long k, e, a, i, c, n_chosen = 0
    for k in range(n):
        e = order[k]
        a = e // m_incentives
        i = e - a * m_incentives
        if agent_used[a] or inc_used[i]:
            continue
        c = class_of[e]
        if count[c] < capacities[c]:
            agent_used[a] = 1
            inc_used[i] = 1
            count[c] += 1
            chosen[n_chosen] = e
            n_chosen += 1
    return chosen[:n_chosen]


def simulate_epoch(const double[:, :, ::1] cum, long[::1] states,
                   const long[:, ::1] kind, const double[:, ::1] p0,
                   const double[:, ::1] p1, const long[:, ::1] table_id,
                   const double[:, ::1] tables,
                   const double[:, ::1] u_trans, const double[:, ::1] u_rew,
                   double delta, long patience, double[::1] sums, long[::1] hits,
                   long t_offset, long streak):
    """Play ``e`` independent arms for one block of iterations.

    ``states``, ``sums`` and ``hits`` are updated in place; ``t_offset`` and
    ``streak`` carry the early-stop bookkeeping across blocks.
    Returns (iterations used in this block, streak, stopped).
    """
    cdef long e = cum.shape[0]
    cdef long block = u_trans.shape[0]
    cdef long lt, t, j, s, used = 0
    cdef double r, prev, cur
    cdef bint hit, steady, stopped = False
    cdef bint early = patience > 0
    with nogil:
        for lt in range(block):
            t = t_offset + lt
            steady = True
            for j in range(e):
                s = states[j]
                r = _draw(kind[j, s], p0[j, s], p1[j, s], table_id[j, s],
                          u_rew[lt, j], tables, &hit)
                if early and t > 0:
                    prev = sums[j] / t
                    cur = (sums[j] + r) / (t + 1)
                    if fabs(cur - prev) > delta:
                        steady = False
                sums[j] += r
                if hit:
                    hits[j] += 1
                states[j] = _next_state(cum[j, s], u_trans[lt, j])
            used = lt + 1
            if early and t > 0:
                if steady:
                    streak += 1
                    if streak >= patience:
                        stopped = True
                        break
                else:
                    streak = 0
    return used, streak, stopped


def cucb_epoch(const double[:, :, ::1] cum, const long[:, ::1] kind,
               const double[:, ::1] p0, const double[:, ::1] p1,
               const long[:, ::1] table_id, const double[:, ::1] tables,
               const long[::1] class_of, const long[::1] capacities,
               long m_agents, long m_incentives, long[::1] agent_state,
               double[::1] sums, long[::1] counts, long t_start,
               const double[:, ::1] u_trans, const double[:, ::1] u_rew,
               const unsigned char[::1] reference, long[::1] plays,
               double coef):
    """Classical per-iteration UCB over a block of iterations.

    Arrays indexed by flat edge ``a * m_incentives + i``. ``agent_state``,
    ``sums``, ``counts`` and ``plays`` are updated in place.
    Returns (total_reward, iterations_on_reference, t_end).
    """
    cdef long n_edges = cum.shape[0]
    cdef long tau = u_trans.shape[0]
    cdef long n_classes = capacities.shape[0]
    cdef cnp.ndarray[double] index_arr = np.empty(n_edges, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t] alive_arr = np.empty(n_edges, dtype=np.uint8)
    cdef cnp.ndarray[long] chosen_arr = np.empty(min(m_agents, m_incentives), dtype=np.int64)
    cdef cnp.ndarray[long] class_count_arr = np.empty(n_classes, dtype=np.int64)
    cdef double[::1] index = index_arr
    cdef unsigned char[::1] alive = alive_arr
    cdef long[::1] chosen = chosen_arr
    cdef long[::1] class_count = class_count_arr
    cdef long n_ref = 0
    cdef long n_reference = 0
    cdef long t = t_start
    cdef long it, e, best, a, i, c, k, n_chosen, s
    cdef double lt, total = 0.0, r
    cdef bint hit, same
    for e in range(n_edges):
        if reference[e]:
            n_reference += 1
    with nogil:
        for it in range(tau):
            t += 1
            lt = log(<double>t)
            for e in range(n_edges):
                if counts[e] == 0:
                    index[e] = INFINITY
                else:
                    index[e] = sums[e] / counts[e] + sqrt(coef * lt / counts[e])
                alive[e] = 1
            for c in range(n_classes):
                class_count[c] = 0
            n_chosen = 0
            while True:
                best = -1
                for e in range(n_edges):
                    if alive[e] and (best < 0 or index[e] > index[best]):
                        best = e
                if best < 0:
                    break
                c = class_of[best]
                if class_count[c] < capacities[c]:
                    class_count[c] += 1
                    chosen[n_chosen] = best
                    n_chosen += 1
                    a = best // m_incentives
                    i = best - a * m_incentives
                    for k in range(m_incentives):
                        alive[a * m_incentives + k] = 0
                    for k in range(m_agents):
                        alive[k * m_incentives + i] = 0
                else:
                    alive[best] = 0
            same = n_chosen == n_reference
            for k in range(n_chosen):
                e = chosen[k]
                if not reference[e]:
                    same = False
                a = e // m_incentives
                s = agent_state[a]
                r = _draw(kind[e, s], p0[e, s], p1[e, s], table_id[e, s],
                          u_rew[it, a], tables, &hit)
                sums[e] += r
                counts[e] += 1
                plays[e] += 1
                total += r
                agent_state[a] = _next_state(cum[e, s], u_trans[it, a])
            if same:
                n_ref += 1
    return total, n_ref, t
