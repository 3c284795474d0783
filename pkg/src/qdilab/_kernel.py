"""Compiled settle loop; same event semantics as ``Simulator._settle_python``.

Gate delays are small bounded integers, so the pending-event queue is a
timing wheel with one slot per future timestamp. Within a slot, events keep
insertion order. At most one event per net can target a given timestamp
(each net has a single driver with a fixed delay), so each slot holds at
most ``n_nets`` events.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OK, OVERFLOW = 0, 1


@njit(cache=True)
def settle_kernel(kind, in_ptr, in_idx, out, delay, fo_ptr, fo_idx,
                  vals, proj, wheel_net, wheel_val, wheel_len, t0,
                  log_t, log_n, log_v, budget):
    """Run to quiescence from time ``t0`` (pending events already in the wheel).

    Returns ``(status, n_logged, last_time)``.
    """
    W = wheel_len.shape[0]
    n_gates = kind.shape[0]
    mark = np.zeros(n_gates, np.uint8)
    touched = np.empty(n_gates, np.int32)
    pending = 0
    for s in range(W):
        pending += wheel_len[s]
    t = t0
    last = t0
    count = 0
    while pending > 0:
        slot = t % W
        m = wheel_len[slot]
        if m == 0:
            t += 1
            continue
        wheel_len[slot] = 0
        pending -= m
        nt = 0
        moved = False
        for j in range(m):
            net = wheel_net[slot, j]
            v = wheel_val[slot, j]
            if vals[net] != v:
                vals[net] = v
                moved = True
                if count >= budget:
                    return OVERFLOW, count, t
                log_t[count] = t
                log_n[count] = net
                log_v[count] = v
                count += 1
                for k in range(fo_ptr[net], fo_ptr[net + 1]):
                    g = fo_idx[k]
                    if mark[g] == 0:
                        mark[g] = 1
                        touched[nt] = g
                        nt += 1
        if moved:
            last = t
        if nt > 0:
            gates = np.sort(touched[:nt])
            for q in range(nt):
                g = gates[q]
                mark[g] = 0
                kd = kind[g]
                lo = in_ptr[g]
                hi = in_ptr[g + 1]
                o = out[g]
                if kd == 1:      # AND
                    v = 1
                    for k in range(lo, hi):
                        if vals[in_idx[k]] == 0:
                            v = 0
                            break
                elif kd == 2:    # OR
                    v = 0
                    for k in range(lo, hi):
                        if vals[in_idx[k]] != 0:
                            v = 1
                            break
                elif kd == 3:    # C
                    v = vals[in_idx[lo]]
                    for k in range(lo + 1, hi):
                        if vals[in_idx[k]] != v:
                            v = proj[o]
                            break
                else:            # NOT
                    v = 1 - vals[in_idx[lo]]
                if v != proj[o]:
                    proj[o] = v
                    s2 = (t + delay[g]) % W
                    p = wheel_len[s2]
                    wheel_net[s2, p] = o
                    wheel_val[s2, p] = v
                    wheel_len[s2] = p + 1
                    pending += 1
        t += 1
    return OK, count, last
