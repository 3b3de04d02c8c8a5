"""Jitted horizon loop for the dynamic schedulers.

The per-slot logic mirrors `scheduler.centralized_step` /
`scheduler.distributed_step` exactly (an equivalence test drives both
off one random stream); this version exists so that million-slot
stability sweeps run in seconds.  Virtual queues are FIFOs of packet
ids, realised as a single linked-list array, so the real action behind
a scheduled link always knows which packet it moves.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .virtual_network import SHARE, STORE

MODE_CENTRALIZED = 0
MODE_DISTRIBUTED = 1
MODE_NO_GROUPING = 2

CHANNELS_IID = 0
CHANNELS_MARKOV = 1


@njit(cache=True)
def run_horizon(
    horizon,
    mode,
    n_users,
    arrival_rate,
    # network structure
    link_src,
    link_dst,
    link_kind,
    link_user,
    on_table,
    n_nodes,
    dest_id,
    share_link_of_user,
    pair_index,
    n_pairs,
    # channels
    channel_model,
    p_on,
    zeta_01,
    zeta_10,
    init_states,
    # randomness: uniforms[t, :n_users] channel draws, uniforms[t, n_users] arrival draw
    uniforms,
    # stats shape
    n_batches,
):
    n_links = link_src.shape[0]
    full = (1 << n_users) - 1
    max_pkts = horizon + 1

    pkt_arrival = np.zeros(max_pkts, dtype=np.int64)
    pkt_bitmap = np.zeros(max_pkts, dtype=np.int64)
    pkt_next = np.full(max_pkts, -1, dtype=np.int64)
    q_head = np.full(n_nodes, -1, dtype=np.int64)
    q_tail = np.full(n_nodes, -1, dtype=np.int64)
    q_size = np.zeros(n_nodes, dtype=np.int64)

    h = np.zeros(n_pairs, dtype=np.int64)
    states = init_states.copy()

    n_pkts = 0
    inflight = 0
    arrived = 0
    completed = 0
    shared = 0
    violations = 0
    pending = -1
    sum_delay = 0.0
    sumsq_delay = 0.0
    sum_inflight = 0.0
    batch_sums = np.zeros(n_batches, dtype=np.float64)
    # Second-half drift regression accumulators (x centred at 3/4 horizon).
    reg_t0 = horizon // 2
    x_centre = (horizon - 1 + reg_t0) / 2.0
    sxx = 0.0
    sxy = 0.0

    for t in range(horizon):
        # Channel state for the slot.
        s_mask = 0
        if channel_model == CHANNELS_IID:
            for u in range(n_users):
                if uniforms[t, u] < p_on[u]:
                    s_mask |= 1 << u
        else:
            for u in range(n_users):
                if states[u] == 0:
                    if uniforms[t, u] < zeta_01[u]:
                        states[u] = 1
                else:
                    if uniforms[t, u] < zeta_10[u]:
                        states[u] = 0
                if states[u] == 1:
                    s_mask |= 1 << u

        if pending >= 0:
            # Forced local broadcast: the user stored a packet last slot.
            link = share_link_of_user[pending]
            src = link_src[link]
            pid = q_head[src]
            q_head[src] = pkt_next[pid]
            if q_head[src] < 0:
                q_tail[src] = -1
            q_size[src] -= 1
            pkt_bitmap[pid] = full
            inflight -= 1
            completed += 1
            shared += 1
            delay = float(t - pkt_arrival[pid])
            sum_delay += delay
            sumsq_delay += delay * delay
            pending = -1
        else:
            best_val = 0.0
            best = -1
            for l in range(n_links):
                kind = link_kind[l]
                if mode == MODE_DISTRIBUTED and kind == SHARE:
                    continue
                if mode == MODE_NO_GROUPING and (kind == SHARE or kind == STORE):
                    continue
                if not on_table[s_mask, l]:
                    continue
                src = link_src[l]
                if q_size[src] == 0:
                    continue
                dst = link_dst[l]
                v_dst = 0 if dst == dest_id else q_size[dst]
                w = q_size[src] - v_dst
                if w < 0:
                    w = 0
                if mode == MODE_DISTRIBUTED and kind == STORE:
                    val = 0.5 * w
                else:
                    val = float(w)
                if kind == STORE:
                    i = link_user[l]
                    for j in range(n_users):
                        if j != i and not (s_mask >> j) & 1:
                            if i < j:
                                val -= h[pair_index[i, j]]
                            else:
                                val += h[pair_index[j, i]]
                if val > best_val:
                    best_val = val
                    best = l

            if best >= 0:
                src = link_src[best]
                dst = link_dst[best]
                kind = link_kind[best]
                pid = q_head[src]
                q_head[src] = pkt_next[pid]
                if q_head[src] < 0:
                    q_tail[src] = -1
                q_size[src] -= 1

                if kind == SHARE:
                    pkt_bitmap[pid] = full
                else:
                    pkt_bitmap[pid] |= s_mask

                if kind == STORE:
                    i = link_user[best]
                    for j in range(n_users):
                        if j != i and not (s_mask >> j) & 1:
                            if i < j:
                                h[pair_index[i, j]] += 1
                            else:
                                h[pair_index[j, i]] -= 1
                    if mode == MODE_DISTRIBUTED:
                        pending = i

                if dst == dest_id:
                    if pkt_bitmap[pid] != full:
                        violations += 1
                    inflight -= 1
                    completed += 1
                    if kind == SHARE:
                        shared += 1
                    delay = float(t - pkt_arrival[pid])
                    sum_delay += delay
                    sumsq_delay += delay * delay
                else:
                    pkt_next[pid] = -1
                    if q_tail[dst] < 0:
                        q_head[dst] = pid
                    else:
                        pkt_next[q_tail[dst]] = pid
                    q_tail[dst] = pid
                    q_size[dst] += 1

        # Bernoulli arrival at the end of the slot.
        if uniforms[t, n_users] < arrival_rate:
            pid = n_pkts
            n_pkts += 1
            pkt_arrival[pid] = t
            pkt_bitmap[pid] = 0
            pkt_next[pid] = -1
            if q_tail[0] < 0:
                q_head[0] = pid
            else:
                pkt_next[q_tail[0]] = pid
            q_tail[0] = pid
            q_size[0] += 1
            inflight += 1
            arrived += 1

        sum_inflight += inflight
        batch_sums[t * n_batches // horizon] += inflight
        if t >= reg_t0:
            x = t - x_centre
            sxx += x * x
            sxy += x * inflight

    slope = sxy / sxx if sxx > 0.0 else 0.0
    return (
        arrived,
        completed,
        shared,
        violations,
        sum_delay,
        sumsq_delay,
        sum_inflight,
        batch_sums,
        h,
        slope,
        q_size,
        inflight,
    )
