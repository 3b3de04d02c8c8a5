import numpy as np
import pytest

from groupcast import scheduler as sch
from groupcast import virtual_network as vn
from groupcast.channels import IidChannel, MarkovChannel


def fresh_state(n=2, mode=sch.CENTRALIZED):
    return sch.SchedulerState(net=vn.build(n), mode=mode)


def test_empty_queues_idle():
    state = fresh_state()
    rec = sch.centralized_step(state, (1, 1))
    assert rec.link_id is None
    assert state.t == 1
    assert state.total_queue() == 0


def test_share_link_serves_stored_packet():
    state = fresh_state()
    pid = state.add_arrival(slot=-1)
    # Move the packet to user 1's queue by hand: it owes a share.
    state.queues[state.net.arrival_id].clear()
    state.queues[state.net.user_ids[0]].append(pid)
    state.pkt_bitmap[pid] = 0b01
    rec = sch.centralized_step(state, (0, 0))  # only share links are ON
    link = state.net.links[rec.link_id]
    assert link.kind == vn.SHARE and link.user == 0
    assert rec.completed_pid == pid
    assert state.completed == 1 and state.shared == 1


def test_store_link_updates_reciprocity_counter():
    state = fresh_state()
    for _ in range(2):
        state.add_arrival(slot=-1)
    # Back up the direct status route so storing at user 1 wins.
    extra = state.add_arrival(slot=-1)
    state.queues[state.net.arrival_id].remove(extra)
    state.queues[state.net.status_ids[0b01]].append(extra)
    rec = sch.centralized_step(state, (1, 0))
    link = state.net.links[rec.link_id]
    assert link.kind == vn.STORE and link.user == 0
    assert rec.n_events == ((0, 1),)
    assert state.h[0] == 1
    # The stored packet's bitmap reflects the real broadcast reception.
    stored = state.queues[state.net.user_ids[0]][0]
    assert state.pkt_bitmap[stored] == 0b01


def test_direct_delivery_when_both_channels_on():
    state = fresh_state()
    pid = state.add_arrival(slot=-1)
    rec = sch.centralized_step(state, (1, 1))
    link = state.net.links[rec.link_id]
    assert link.kind == vn.BS_EXACT and link.downstream == state.net.destination_id
    assert rec.completed_pid == pid
    assert state.shared == 0


def test_distributed_never_schedules_share_links():
    state = fresh_state(mode=sch.DISTRIBUTED)
    pid = state.add_arrival(slot=-1)
    state.queues[state.net.arrival_id].clear()
    state.queues[state.net.user_ids[0]].append(pid)
    state.pkt_bitmap[pid] = 0b01
    rec = sch.distributed_step(state, (1, 1))
    assert rec.link_id is None  # share links are outside the candidate set


def test_distributed_forced_share_next_slot():
    state = fresh_state(mode=sch.DISTRIBUTED)
    for _ in range(3):
        state.add_arrival(slot=-1)
    # Back up the status route enough to beat the 1/2-discounted store value.
    for _ in range(2):
        extra = state.add_arrival(slot=-1)
        state.queues[state.net.arrival_id].remove(extra)
        state.queues[state.net.status_ids[0b01]].append(extra)
    rec = sch.distributed_step(state, (1, 0))
    link = state.net.links[rec.link_id]
    assert link.kind == vn.STORE and state.pending_share == 0
    # Next slot is forced regardless of the channel state.
    rec2 = sch.distributed_step(state, (0, 0))
    link2 = state.net.links[rec2.link_id]
    assert link2.kind == vn.SHARE and link2.user == 0
    assert rec2.completed_pid is not None
    assert state.pending_share == -1


def test_no_grouping_never_shares():
    chans = (IidChannel(0.4), IidChannel(0.4))
    cfg = sch.DynamicConfig(channels=chans, arrival_rate=0.3, horizon=50_000, mode=sch.NO_GROUPING, seed=5)
    rep = sch.run_dynamic(cfg)
    assert rep.shared == 0
    assert rep.sharing_probability == 0.0
    assert rep.stable


@pytest.mark.parametrize("mode", sch.MODES)
def test_kernel_matches_reference(mode):
    chans = (IidChannel(0.5), IidChannel(0.3))
    cfg = sch.DynamicConfig(channels=chans, arrival_rate=0.45, horizon=30_000, mode=mode, seed=8)
    kernel = sch.run_dynamic(cfg)
    ref, _ = sch.run_dynamic_reference(cfg)
    assert kernel.arrived == ref.arrived
    assert kernel.completed == ref.completed
    assert kernel.shared == ref.shared
    assert kernel.avg_queue == pytest.approx(ref.avg_queue, abs=1e-9)
    assert kernel.avg_completion == pytest.approx(ref.avg_completion, abs=1e-9)
    assert np.array_equal(kernel.h_final, ref.h_final)
    assert kernel.queue_slope == pytest.approx(ref.queue_slope, abs=1e-12)


def test_kernel_matches_reference_three_users_markov():
    chans = tuple(MarkovChannel(0.3, 0.2) for _ in range(3))
    cfg = sch.DynamicConfig(channels=chans, arrival_rate=0.35, horizon=20_000, mode=sch.CENTRALIZED, seed=9)
    kernel = sch.run_dynamic(cfg)
    ref, _ = sch.run_dynamic_reference(cfg)
    assert kernel.arrived == ref.arrived
    assert kernel.completed == ref.completed
    assert kernel.avg_queue == pytest.approx(ref.avg_queue, abs=1e-9)
    assert np.array_equal(kernel.h_final, ref.h_final)


def test_packet_conservation_and_bitmaps():
    chans = tuple(IidChannel(p) for p in (0.2, 0.4, 0.6))
    cfg = sch.DynamicConfig(channels=chans, arrival_rate=0.5, horizon=200_000, mode=sch.CENTRALIZED, seed=10)
    rep = sch.run_dynamic(cfg)
    assert rep.bitmap_violations == 0
    assert rep.arrived == rep.completed + rep.final_inflight
    assert rep.sharing_probability > 0.2


def test_zero_arrivals_zero_everything():
    chans = (IidChannel(0.5), IidChannel(0.5))
    cfg = sch.DynamicConfig(channels=chans, arrival_rate=0.0, horizon=10_000, mode=sch.CENTRALIZED, seed=11)
    rep = sch.run_dynamic(cfg)
    assert rep.arrived == 0
    assert rep.avg_queue == 0.0
    assert rep.sharing_probability == 0.0


def test_distributed_stable_below_its_bound():
    # The distributed bound for p_e=0.5 is 0.5; 0.45 must keep queues flat.
    chans = (IidChannel(0.5), IidChannel(0.5))
    cfg = sch.DynamicConfig(channels=chans, arrival_rate=0.45, horizon=400_000, mode=sch.DISTRIBUTED, seed=15)
    rep = sch.run_dynamic(cfg)
    assert rep.stable
    assert rep.avg_queue < 100


def test_reciprocity_counters_stay_balanced_inside_region():
    chans = (IidChannel(0.5), IidChannel(0.5))
    cfg = sch.DynamicConfig(channels=chans, arrival_rate=0.45, horizon=400_000, mode=sch.CENTRALIZED, seed=12)
    rep = sch.run_dynamic(cfg)
    assert rep.stable
    assert float(rep.h_drift.max()) < 0.01


def test_trace_rows_record_schedule():
    chans = (IidChannel(0.5), IidChannel(0.5))
    cfg = sch.DynamicConfig(channels=chans, arrival_rate=0.4, horizon=500, mode=sch.CENTRALIZED, seed=13)
    rep, rows = sch.run_dynamic_reference(cfg, trace=True)
    assert len(rows) == 500
    t, link, qsizes, h = rows[0]
    assert t == 0 and len(qsizes) == len(vn.build(2).nodes) and len(h) == 1
    assert any(r[1] is not None for r in rows)


def test_stability_estimate_brackets_boundary():
    chans = (IidChannel(0.5), IidChannel(0.5))
    cfg = sch.DynamicConfig(channels=chans, arrival_rate=0.5, horizon=150_000, mode=sch.CENTRALIZED, seed=14)
    est = sch.estimate_stability_boundary(cfg, [0.3, 0.5, 0.9])
    assert est.boundary == 0.5
    flags = {rep.arrival_rate: rep.stable for rep in est.reports}
    assert flags[0.3] and flags[0.5] and not flags[0.9]


def test_config_validation():
    chans = (IidChannel(0.5), IidChannel(0.5))
    with pytest.raises(ValueError):
        sch.DynamicConfig(channels=chans, arrival_rate=1.5, horizon=100)
    with pytest.raises(ValueError):
        sch.DynamicConfig(channels=chans, arrival_rate=0.5, horizon=0)
    with pytest.raises(ValueError):
        sch.DynamicConfig(channels=chans, arrival_rate=0.5, horizon=10, mode="bogus")
    with pytest.raises(ValueError):
        sch.DynamicConfig(channels=(IidChannel(0.5),), arrival_rate=0.5, horizon=10)
