"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels``.

Same signatures, same uniform consumption, same floating-point operation
order, so both backends return identical results.
"""
import math

import numpy as np

DET, BERN, UNIF, BETA = 0, 1, 2, 3


def _draw(kind, p0, p1, tid, u, tables):
    """Vectorised reward draw; returns (reward, hit)."""
    r = np.where(kind == DET, p0, 0.0)
    bern = kind == BERN
    if bern.any():
        r = np.where(bern & (u < p0), p1, r)
    unif = kind == UNIF
    if unif.any():
        r = np.where(unif, p0 + (p1 - p0) * u, r)
    beta = kind == BETA
    if beta.any():
        g = tables.shape[1] - 1
        x = u * g
        j = np.minimum(x.astype(np.int64), g - 1)
        f = x - j
        t = np.where(beta, tid, 0)
        lo = tables[t, j]
        hi = tables[t, j + 1]
        r = np.where(beta, lo + f * (hi - lo), r)
    hit = np.where(bern, u < p0, r > 0.0)
    return r, hit


def _next_state(rows, u):
    return (u[:, None] >= rows[:, :-1]).sum(axis=1)


def greedy_scan(order, class_of, capacities, m_agents, m_incentives):
    agent_used = [False] * m_agents
    inc_used = [False] * m_incentives
    count = [0] * len(capacities)
    chosen = []
    for e in order:
        a, i = divmod(int(e), m_incentives)
        if agent_used[a] or inc_used[i]:
            continue
        c = class_of[e]
        if count[c] < capacities[c]:
            agent_used[a] = inc_used[i] = True
            count[c] += 1
            chosen.append(int(e))
    return np.asarray(chosen, dtype=np.int64)


def simulate_epoch(cum, states, kind, p0, p1, table_id, tables,
                   u_trans, u_rew, delta, patience, sums, hits, t_offset, streak):
    e = cum.shape[0]
    block = u_trans.shape[0]
    idx = np.arange(e)
    used = 0
    stopped = False
    early = patience > 0
    for lt in range(block):
        t = t_offset + lt
        s = states.copy()
        r, hit = _draw(kind[idx, s], p0[idx, s], p1[idx, s], table_id[idx, s],
                       u_rew[lt], tables)
        steady = True
        if early and t > 0:
            prev = sums / t
            cur = (sums + r) / (t + 1)
            steady = bool(np.all(np.abs(cur - prev) <= delta))
        sums += r
        hits += hit
        states[:] = _next_state(cum[idx, s], u_trans[lt])
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


def cucb_epoch(cum, kind, p0, p1, table_id, tables, class_of, capacities,
               m_agents, m_incentives, agent_state, sums, counts, t_start,
               u_trans, u_rew, reference, plays, coef):
    n_edges = cum.shape[0]
    tau = u_trans.shape[0]
    ref_set = {int(e) for e in np.flatnonzero(reference)}
    total = 0.0
    n_ref = 0
    t = t_start
    for it in range(tau):
        t += 1
        lt = math.log(t)
        index = [math.inf if counts[e] == 0
                 else sums[e] / counts[e] + math.sqrt(coef * lt / counts[e])
                 for e in range(n_edges)]
        alive = [True] * n_edges
        class_count = [0] * len(capacities)
        chosen = []
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
                chosen.append(best)
                a, i = divmod(best, m_incentives)
                for k in range(m_incentives):
                    alive[a * m_incentives + k] = False
                for k in range(m_agents):
                    alive[k * m_incentives + i] = False
            else:
                alive[best] = False
        for e in chosen:
            a = e // m_incentives
            s = agent_state[a]
            r, _ = _draw(kind[e:e + 1, s], p0[e:e + 1, s], p1[e:e + 1, s],
                         table_id[e:e + 1, s], u_rew[it, a:a + 1], tables)
            r = float(r[0])
            sums[e] += r
            counts[e] += 1
            plays[e] += 1
            total += r
            agent_state[a] = int(_next_state(cum[e:e + 1, s], u_trans[it, a:a + 1])[0])
        if set(chosen) == ref_set:
            n_ref += 1
    return total, n_ref, t
