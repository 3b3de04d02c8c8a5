import pytest

from groupcast import virtual_network as vn


def test_node_counts():
    net2 = vn.build(2)
    assert len(net2.nodes) == 6  # va, v1, v2, r10, r01, dest
    net3 = vn.build(3)
    status = [n for n in net3.nodes if n.kind == vn.STATUS]
    assert len(status) == 6  # 2^3 - 2 partial reception vectors
    assert len(net3.nodes) == 11
    with pytest.raises(ValueError):
        vn.build(1)


def test_link_counts():
    assert len(vn.build(2).links) == 9
    assert len(vn.build(3).links) == 25


def test_exactly_one_arrival_and_destination():
    for n in (2, 3, 4):
        net = vn.build(n)
        kinds = [node.kind for node in net.nodes]
        assert kinds.count(vn.ARRIVAL) == 1
        assert kinds.count(vn.DESTINATION) == 1
        assert kinds.count(vn.USER) == n
        assert not net.nodes[net.destination_id].has_queue
        assert all(net.nodes[i].has_queue for i in range(net.destination_id))


def test_on_links_all_channels_up():
    net = vn.build(3)
    on = {net.links[l] for l in net.on_links((1, 1, 1))}
    stores = {l for l in on if l.kind == vn.STORE}
    assert {l.user for l in stores} == {0, 1, 2}
    exact = [l for l in on if l.kind == vn.BS_EXACT]
    assert len(exact) == 1 and exact[0].downstream == net.destination_id
    retransmit = [l for l in on if l.kind == vn.RETRANSMIT]
    assert len(retransmit) == 6  # every status node can finish
    assert all(l.downstream == net.destination_id for l in retransmit)
    shares = [l for l in on if l.kind == vn.SHARE]
    assert len(shares) == 3


def test_on_links_all_channels_down():
    net = vn.build(3)
    on = [net.links[l] for l in net.on_links((0, 0, 0))]
    assert all(l.kind == vn.SHARE for l in on)
    assert len(on) == 3


def test_on_links_partial_state_two_users():
    net = vn.build(2)
    names = {
        f"{net.node_name(net.links[l].upstream)}->{net.node_name(net.links[l].downstream)}"
        for l in net.on_links((1, 0))
    }
    assert names == {"va->v1", "va->r10", "r01->dest", "v1->dest", "v2->dest"}


def test_retransmission_links_point_forward():
    # Acyclicity: every retransmission hop strictly grows the reception set.
    for n in (2, 3, 4):
        net = vn.build(n)
        for link in net.links:
            if link.kind == vn.RETRANSMIT:
                assert link.to_mask & link.from_mask == link.from_mask
                assert link.to_mask != link.from_mask
            assert link.upstream != link.downstream
            assert link.upstream != net.destination_id
            assert link.downstream != net.arrival_id


def test_no_all_zero_status_node():
    net = vn.build(3)
    assert 0 not in net.status_ids
    assert all(0 < mask < (1 << 3) - 1 for mask in net.status_ids)


def test_on_table_matches_predicates():
    net = vn.build(3)
    table = net.on_table()
    for s in range(8):
        on = set(net.on_links(s))
        for link in net.links:
            assert table[s, link.link_id] == (link.link_id in on)


def test_on_links_deterministic():
    net = vn.build(3)
    assert net.on_links((1, 0, 1)) == net.on_links((1, 0, 1))
    with pytest.raises(ValueError):
        net.on_links((1, 2, 0))


def test_canonical_link_order_blocks():
    net = vn.build(3)
    kinds = [l.kind for l in net.links]
    first_store = kinds.index(vn.STORE)
    first_retx = kinds.index(vn.RETRANSMIT)
    first_share = kinds.index(vn.SHARE)
    assert all(k == vn.BS_EXACT for k in kinds[:first_store])
    assert first_store < first_retx < first_share
    retx = [l for l in net.links if l.kind == vn.RETRANSMIT]
    assert [(l.from_mask, l.to_mask) for l in retx] == sorted(
        (l.from_mask, l.to_mask) for l in retx
    )


def test_edge_list_dump():
    net = vn.build(2)
    text = net.to_edge_list()
    assert "va -> v1 [store] s1==1" in text
    assert "va -> dest [bs-exact] s==11" in text
    assert "r10 -> dest [retransmit] s2==1" in text
    assert "v2 -> dest [share] always" in text
    assert len(text.splitlines()) == len(net.links)
