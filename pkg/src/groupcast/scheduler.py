"""On-line schedulers for streaming common-interest packets.

Each slot, at most one virtual link of the delivery network is served
(all links interfere).  The centralized scheduler picks the ON link with
the largest backlog differential, corrected by signed reciprocity
counters so that the exchange between every user pair stays balanced:

    value(link u->d) = max(0, V_u - V_d) * mu
                       + sum_{i<j} H_ij * (n_ji - n_ij)

where n_ij = 1 exactly when the link stores a fresh packet at user i
while user j's channel is OFF (user i now owes a share toward j), and
H_ij accumulates n_ij - n_ji over time.  Ties break to the lowest link
id in the canonical network order, and idling beats any non-positive
value.

The distributed variant removes the explicitly scheduled local
broadcasts: storing a packet at a user forces that user to broadcast it
in the next slot, unconditionally, so group members need no per-slot
coordination message.  Store links are discounted (mu = 1/2) because a
stored packet consumes the forced slot as well.  The no-grouping
baseline removes the local-sharing links altogether.

Packets are tracked individually through the virtual queues, alongside a
shadow reception bitmap fed by the real broadcasts; a packet counted
complete must have a full bitmap, which the million-slot kernel verifies
on every completion.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel
from .channels import IidChannel, MarkovChannel, markov_steady_state
from .seeding import substream
from .virtual_network import SHARE, STORE, VirtualNetwork, build, state_to_mask

CENTRALIZED = "centralized"
DISTRIBUTED = "distributed"
NO_GROUPING = "no-grouping"
MODES = (CENTRALIZED, DISTRIBUTED, NO_GROUPING)

_MODE_CODE = {
    CENTRALIZED: _kernel.MODE_CENTRALIZED,
    DISTRIBUTED: _kernel.MODE_DISTRIBUTED,
    NO_GROUPING: _kernel.MODE_NO_GROUPING,
}

#: Second-half queue-growth slope above which a run is called unstable
#: (packets/slot; far above the noise floor at the horizons used here).
UNSTABLE_SLOPE = 1e-3

N_BATCHES = 50


@dataclass(frozen=True)
class DynamicConfig:
    """One dynamic-arrivals run: channels, Bernoulli arrival rate, horizon, mode."""

    channels: tuple
    arrival_rate: float
    horizon: int
    mode: str = CENTRALIZED
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.arrival_rate <= 1.0:
            raise ValueError(f"arrival_rate must be in [0, 1], got {self.arrival_rate}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.channels) < 2:
            raise ValueError("need at least 2 users")


@dataclass
class DynamicReport:
    """Summary of one run; queue sizes count in-flight packets."""

    mode: str
    arrival_rate: float
    horizon: int
    arrived: int
    completed: int
    shared: int
    avg_queue: float
    avg_queue_se: float
    avg_completion: float
    avg_completion_se: float
    sharing_probability: float
    h_final: np.ndarray
    h_drift: np.ndarray
    queue_slope: float
    stable: bool
    bitmap_violations: int
    final_inflight: int


@dataclass
class SchedulerState:
    """Mutable per-run state for the step-level API."""

    net: VirtualNetwork
    mode: str = CENTRALIZED
    t: int = 0
    pending_share: int = -1
    queues: list = None
    h: np.ndarray = None
    pkt_arrival: dict = field(default_factory=dict)
    pkt_bitmap: dict = field(default_factory=dict)
    next_pid: int = 0
    arrived: int = 0
    completed: int = 0
    shared: int = 0
    delays: list = field(default_factory=list)
    inflight_trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.queues is None:
            self.queues = [deque() for _ in self.net.nodes]
        if self.h is None:
            n = self.net.n_users
            self.h = np.zeros(n * (n - 1) // 2, dtype=np.int64)

    def queue_sizes(self) -> list[int]:
        return [len(q) for q in self.queues]

    def total_queue(self) -> int:
        return sum(len(q) for q in self.queues)

    def add_arrival(self, slot: int | None = None):
        """Append an arrival at the end of `slot` (it becomes servable next slot)."""
        pid = self.next_pid
        self.next_pid += 1
        self.pkt_arrival[pid] = self.t - 1 if slot is None else slot
        self.pkt_bitmap[pid] = 0
        self.queues[self.net.arrival_id].append(pid)
        self.arrived += 1
        return pid


def pair_index_matrix(n: int) -> np.ndarray:
    """Index of the (i, j) reciprocity counter, i < j, in canonical pair order."""
    idx = np.full((n, n), -1, dtype=np.int64)
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            idx[i, j] = k
            k += 1
    return idx


@dataclass(frozen=True)
class StepRecord:
    t: int
    link_id: int | None
    value: float
    completed_pid: int | None
    n_events: tuple  # (i, j) pairs with n_ij = 1 this slot


def _store_adjustment(h, pair_idx, user, s_mask, n_users):
    adj = 0.0
    for j in range(n_users):
        if j != user and not (s_mask >> j) & 1:
            if user < j:
                adj -= h[pair_idx[user, j]]
            else:
                adj += h[pair_idx[j, user]]
    return adj


def _choose_link(state: SchedulerState, s_mask: int):
    net = state.net
    mode = state.mode
    pair_idx = pair_index_matrix(net.n_users)
    best_val = 0.0
    best = None
    for link in net.links:
        if mode == DISTRIBUTED and link.kind == SHARE:
            continue
        if mode == NO_GROUPING and link.kind in (SHARE, STORE):
            continue
        if not link.is_on(s_mask):
            continue
        if not state.queues[link.upstream]:
            continue
        v_dst = 0 if link.downstream == net.destination_id else len(state.queues[link.downstream])
        w = max(0, len(state.queues[link.upstream]) - v_dst)
        mu = 0.5 if (mode == DISTRIBUTED and link.kind == STORE) else 1.0
        val = w * mu
        if link.kind == STORE:
            val += _store_adjustment(state.h, pair_idx, link.user, s_mask, net.n_users)
        if val > best_val:
            best_val = val
            best = link
    return best, best_val


def _complete(state: SchedulerState, pid: int, via_share: bool):
    full = (1 << state.net.n_users) - 1
    if state.pkt_bitmap[pid] != full:
        raise AssertionError(f"packet {pid} counted complete with bitmap {state.pkt_bitmap[pid]:b}")
    state.completed += 1
    if via_share:
        state.shared += 1
    state.delays.append(state.t - state.pkt_arrival[pid])


def _serve(state: SchedulerState, link, s_mask: int):
    net = state.net
    full = (1 << net.n_users) - 1
    pair_idx = pair_index_matrix(net.n_users)
    pid = state.queues[link.upstream].popleft()
    n_events = []
    if link.kind == SHARE:
        state.pkt_bitmap[pid] = full
    else:
        state.pkt_bitmap[pid] |= s_mask
    if link.kind == STORE:
        i = link.user
        for j in range(net.n_users):
            if j != i and not (s_mask >> j) & 1:
                n_events.append((i, j))
                if i < j:
                    state.h[pair_idx[i, j]] += 1
                else:
                    state.h[pair_idx[j, i]] -= 1
        if state.mode == DISTRIBUTED:
            state.pending_share = i
    if link.downstream == net.destination_id:
        _complete(state, pid, via_share=link.kind == SHARE)
        return pid, n_events, True
    state.queues[link.downstream].append(pid)
    return pid, n_events, False


def _forced_share(state: SchedulerState):
    net = state.net
    user_node = net.user_ids[state.pending_share]
    link = next(
        l for l in net.links if l.kind == SHARE and l.upstream == user_node
    )
    if not state.queues[user_node]:
        raise AssertionError("forced share with an empty user queue")
    state.pending_share = -1
    pid = state.queues[link.upstream].popleft()
    state.pkt_bitmap[pid] = (1 << net.n_users) - 1
    _complete(state, pid, via_share=True)
    return StepRecord(state.t, link.link_id, math.nan, pid, ())


def centralized_step(state: SchedulerState, channel_state) -> StepRecord:
    """One slot of the centralized reciprocity-aware max-weight schedule.

    Computes every ON link's backlog-differential value (with the
    reciprocity adjustment on store links), serves the best strictly
    positive one, applies the real-network receptions to the served
    packet's bitmap, and updates the H counters.  Does not process
    arrivals; callers append them after the step.
    """
    if state.mode not in (CENTRALIZED, NO_GROUPING):
        raise ValueError(f"state.mode is {state.mode!r}")
    s_mask = state_to_mask(channel_state)
    link, val = _choose_link(state, s_mask)
    rec_pid = None
    n_events = ()
    if link is not None:
        pid, n_events, done = _serve(state, link, s_mask)
        rec_pid = pid if done else None
    rec = StepRecord(state.t, link.link_id if link else None, val, rec_pid, tuple(n_events))
    state.t += 1
    return rec


def distributed_step(state: SchedulerState, channel_state) -> StepRecord:
    """One slot of the distributed variant.

    A pending forced share preempts everything: the user that stored a
    packet last slot broadcasts it now, with no optimisation and no
    coordination message.  Otherwise the max-weight choice runs over the
    restricted link set (no standalone share links, store links
    discounted by 1/2), and choosing a store link arms the forced share
    for the next slot.
    """
    if state.mode != DISTRIBUTED:
        raise ValueError(f"state.mode is {state.mode!r}")
    s_mask = state_to_mask(channel_state)
    if state.pending_share >= 0:
        rec = _forced_share(state)
        state.t += 1
        return rec
    link, val = _choose_link(state, s_mask)
    rec_pid = None
    n_events = ()
    if link is not None:
        pid, n_events, done = _serve(state, link, s_mask)
        rec_pid = pid if done else None
    rec = StepRecord(state.t, link.link_id if link else None, val, rec_pid, tuple(n_events))
    state.t += 1
    return rec


def _channel_arrays(channels):
    n = len(channels)
    if all(isinstance(c, IidChannel) for c in channels):
        model = _kernel.CHANNELS_IID
        p_on = np.array([1.0 - c.error_prob for c in channels])
        z01 = np.zeros(n)
        z10 = np.zeros(n)
    elif all(isinstance(c, MarkovChannel) for c in channels):
        model = _kernel.CHANNELS_MARKOV
        p_on = np.zeros(n)
        z01 = np.array([c.zeta_01 for c in channels])
        z10 = np.array([c.zeta_10 for c in channels])
    else:
        raise ValueError("channels must be all i.i.d. or all Markov")
    return model, p_on, z01, z10


def _init_markov_states(channels, rng):
    states = np.zeros(len(channels), dtype=np.int64)
    for i, c in enumerate(channels):
        if isinstance(c, MarkovChannel):
            if c.current_state is not None:
                states[i] = c.current_state
            else:
                pi_0, _ = markov_steady_state(c)
                states[i] = 0 if rng.random() < pi_0 else 1
    return states


def _compiled(net: VirtualNetwork):
    link_src = np.array([l.upstream for l in net.links], dtype=np.int64)
    link_dst = np.array([l.downstream for l in net.links], dtype=np.int64)
    link_kind = np.array([l.kind for l in net.links], dtype=np.int64)
    link_user = np.array([l.user for l in net.links], dtype=np.int64)
    on_table = net.on_table()
    share_link = np.full(net.n_users, -1, dtype=np.int64)
    for l in net.links:
        if l.kind == SHARE:
            share_link[l.user] = l.link_id
    return link_src, link_dst, link_kind, link_user, on_table, share_link


def run_dynamic(cfg: DynamicConfig) -> DynamicReport:
    """Simulate the full horizon with the jitted kernel and summarise it."""
    n = len(cfg.channels)
    net = build(n)
    link_src, link_dst, link_kind, link_user, on_table, share_link = _compiled(net)
    model, p_on, z01, z10 = _channel_arrays(cfg.channels)

    rng = substream(cfg.seed)
    init_states = _init_markov_states(cfg.channels, rng)
    uniforms = rng.random((cfg.horizon, n + 1))

    (
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
    ) = _kernel.run_horizon(
        cfg.horizon,
        _MODE_CODE[cfg.mode],
        n,
        cfg.arrival_rate,
        link_src,
        link_dst,
        link_kind,
        link_user,
        on_table,
        len(net.nodes),
        net.destination_id,
        share_link,
        pair_index_matrix(n),
        n * (n - 1) // 2,
        model,
        p_on,
        z01,
        z10,
        init_states,
        uniforms,
        N_BATCHES,
    )
    if arrived != completed + inflight or inflight != int(q_size.sum()):
        raise AssertionError("virtual packet conservation violated")
    return _report(cfg, arrived, completed, shared, violations, sum_delay, sumsq_delay, sum_inflight, batch_sums, h, slope, inflight)


def _report(cfg, arrived, completed, shared, violations, sum_delay, sumsq_delay, sum_inflight, batch_sums, h, slope, inflight):
    horizon = cfg.horizon
    avg_queue = sum_inflight / horizon
    batch_len = horizon / N_BATCHES
    batch_means = np.asarray(batch_sums) / batch_len
    avg_queue_se = float(batch_means.std(ddof=1) / math.sqrt(N_BATCHES))
    if completed > 0:
        avg_completion = sum_delay / completed
        var = max(0.0, sumsq_delay / completed - avg_completion**2)
        avg_completion_se = math.sqrt(var / completed)
    else:
        avg_completion = math.nan
        avg_completion_se = math.nan
    h = np.asarray(h, dtype=np.int64)
    return DynamicReport(
        mode=cfg.mode,
        arrival_rate=cfg.arrival_rate,
        horizon=horizon,
        arrived=arrived,
        completed=completed,
        shared=shared,
        avg_queue=avg_queue,
        avg_queue_se=avg_queue_se,
        avg_completion=avg_completion,
        avg_completion_se=avg_completion_se,
        sharing_probability=shared / arrived if arrived else 0.0,
        h_final=h,
        h_drift=np.abs(h) / horizon,
        queue_slope=slope,
        stable=slope <= UNSTABLE_SLOPE,
        bitmap_violations=violations,
        final_inflight=inflight,
    )


def run_dynamic_reference(cfg: DynamicConfig, trace: bool = False):
    """Pure-Python horizon loop over the step functions.

    Consumes the same random stream as `run_dynamic`, so both produce
    identical decisions; used for tracing and as the kernel's
    correctness reference.  Returns (report, trace_rows); trace rows are
    (t, link_id, queue_sizes, h) tuples when requested.
    """
    n = len(cfg.channels)
    net = build(n)
    model, p_on, z01, z10 = _channel_arrays(cfg.channels)
    rng = substream(cfg.seed)
    states = _init_markov_states(cfg.channels, rng)
    uniforms = rng.random((cfg.horizon, n + 1))

    state = SchedulerState(net=net, mode=cfg.mode)
    step = distributed_step if cfg.mode == DISTRIBUTED else centralized_step
    rows = []
    sum_inflight = 0.0
    batch_sums = np.zeros(N_BATCHES)
    reg_t0 = cfg.horizon // 2
    x_centre = (cfg.horizon - 1 + reg_t0) / 2.0
    sxx = sxy = 0.0
    inflight = 0

    for t in range(cfg.horizon):
        s_mask = 0
        if model == _kernel.CHANNELS_IID:
            for u in range(n):
                if uniforms[t, u] < p_on[u]:
                    s_mask |= 1 << u
        else:
            for u in range(n):
                if states[u] == 0:
                    if uniforms[t, u] < z01[u]:
                        states[u] = 1
                else:
                    if uniforms[t, u] < z10[u]:
                        states[u] = 0
                if states[u]:
                    s_mask |= 1 << u
        rec = step(state, s_mask)
        if rec.completed_pid is not None:
            inflight -= 1
        if uniforms[t, n] < cfg.arrival_rate:
            state.add_arrival(slot=t)
            inflight += 1
        sum_inflight += inflight
        batch_sums[t * N_BATCHES // cfg.horizon] += inflight
        if t >= reg_t0:
            x = t - x_centre
            sxx += x * x
            sxy += x * inflight
        if trace:
            rows.append((t, rec.link_id, tuple(state.queue_sizes()), tuple(int(v) for v in state.h)))

    delays = np.array(state.delays, dtype=float)
    report = _report(
        cfg,
        state.arrived,
        state.completed,
        state.shared,
        0,
        float(delays.sum()),
        float((delays**2).sum()),
        sum_inflight,
        batch_sums,
        state.h.copy(),
        sxy / sxx if sxx > 0 else 0.0,
        inflight,
    )
    return report, rows


@dataclass
class StabilityEstimate:
    boundary: float | None
    reports: list


def estimate_stability_boundary(cfg: DynamicConfig, lambda_grid) -> StabilityEstimate:
    """Classify each arrival rate as stable/unstable and return the largest stable one.

    Rates run in ascending order with per-rate derived seeds; the
    classifier is the second-half queue-growth slope against
    `UNSTABLE_SLOPE`.
    """
    lams = sorted(float(l) for l in lambda_grid)
    reports = []
    boundary = None
    for k, lam in enumerate(lams):
        rep = run_dynamic(replace(cfg, arrival_rate=lam, seed=cfg.seed + 7919 * (k + 1)))
        reports.append(rep)
        if rep.stable:
            boundary = lam
    return StabilityEstimate(boundary=boundary, reports=reports)
