"""Virtual queueing network for streaming common-interest delivery.

Scheduling a lossy broadcast downlink plus local sharing is reduced to
scheduling a wireline-style network of virtual queues:

* an arrival node holding packets the base station has not sent yet;
* one node per user, holding packets that user stored and owes the
  group (draining one is a local broadcast that completes the packet);
* one node per partial reception vector r (some but not all users hold
  the packet), holding packets awaiting retransmission;
* a queueless destination node; a virtual packet arriving there means
  the real packet reached everyone.

Links carry ON conditions over the slot's channel-state vector.  The
arrival->user and user->destination links form the local-sharing part;
the arrival->status and status->status links form the retransmission
part.  All links interfere (the users are half-duplex and single-radio),
so a schedule picks at most one link per slot.

A fully failed broadcast moves no virtual packet, so there is no
all-zeros status node; the slot is simply lost, which is what the
completion-time analysis assumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ARRIVAL = "arrival"
USER = "user"
STATUS = "status"
DESTINATION = "destination"

# Link kinds, in canonical scheduling-priority order of their blocks.
BS_EXACT = 0  # arrival -> status/destination: broadcast of a fresh packet
STORE = 1  # arrival -> user: fresh broadcast, receiving user keeps a copy to share
RETRANSMIT = 2  # status -> status/destination: broadcast of a partially delivered packet
SHARE = 3  # user -> destination: local broadcast, reaches the whole group

_KIND_NAMES = {BS_EXACT: "bs-exact", STORE: "store", RETRANSMIT: "retransmit", SHARE: "share"}


@dataclass(frozen=True)
class VirtualNode:
    node_id: int
    kind: str
    user: int = -1  # user index for USER nodes
    mask: int = -1  # reception bitmask for STATUS/DESTINATION nodes

    @property
    def has_queue(self) -> bool:
        return self.kind != DESTINATION


@dataclass(frozen=True)
class VirtualLink:
    link_id: int
    upstream: int
    downstream: int
    kind: int
    user: int = -1  # user index for STORE/SHARE links
    from_mask: int = -1  # upstream reception mask for RETRANSMIT links
    to_mask: int = -1  # target mask for BS_EXACT/RETRANSMIT links

    def is_on(self, state_mask: int) -> bool:
        if self.kind == BS_EXACT:
            return state_mask == self.to_mask
        if self.kind == STORE:
            return bool(state_mask >> self.user & 1)
        if self.kind == RETRANSMIT:
            missing = ~self.from_mask
            return (state_mask & missing) == (self.to_mask & missing)
        return True  # SHARE rides the noiseless local link


@dataclass
class VirtualNetwork:
    n_users: int
    nodes: list[VirtualNode]
    links: list[VirtualLink]
    arrival_id: int
    destination_id: int
    user_ids: list[int]
    status_ids: dict[int, int] = field(default_factory=dict)  # mask -> node id

    def node_name(self, node_id: int) -> str:
        node = self.nodes[node_id]
        if node.kind == ARRIVAL:
            return "va"
        if node.kind == USER:
            return f"v{node.user + 1}"
        if node.kind == DESTINATION:
            return "dest"
        bits = "".join(str(node.mask >> i & 1) for i in range(self.n_users))
        return f"r{bits}"

    def link_condition(self, link: VirtualLink) -> str:
        if link.kind == BS_EXACT:
            bits = "".join(str(link.to_mask >> i & 1) for i in range(self.n_users))
            return f"s=={bits}"
        if link.kind == STORE:
            return f"s{link.user + 1}==1"
        if link.kind == RETRANSMIT:
            need = [
                f"s{i + 1}=={link.to_mask >> i & 1}"
                for i in range(self.n_users)
                if not link.from_mask >> i & 1
            ]
            return " & ".join(need)
        return "always"

    def to_edge_list(self) -> str:
        """One line per link: `name upstream downstream kind condition`."""
        lines = []
        for link in self.links:
            lines.append(
                f"L{link.link_id:02d} {self.node_name(link.upstream)} -> "
                f"{self.node_name(link.downstream)} [{_KIND_NAMES[link.kind]}] {self.link_condition(link)}"
            )
        return "\n".join(lines)

    def on_links(self, state) -> list[int]:
        """Ids of the links whose ON condition holds for this channel state."""
        mask = state_to_mask(state)
        return [link.link_id for link in self.links if link.is_on(mask)]

    def on_table(self) -> np.ndarray:
        """bool[2^n, n_links]: ON-ness of each link for each channel-state mask."""
        table = np.zeros((1 << self.n_users, len(self.links)), dtype=bool)
        for s in range(1 << self.n_users):
            for link in self.links:
                table[s, link.link_id] = link.is_on(s)
        return table


def state_to_mask(state) -> int:
    if isinstance(state, (int, np.integer)):
        return int(state)
    mask = 0
    for i, s in enumerate(state):
        if s not in (0, 1):
            raise ValueError(f"channel state entries must be 0/1, got {s!r}")
        mask |= int(s) << i
    return mask


def build(n_users: int) -> VirtualNetwork:
    """Construct the virtual network for `n_users` group members.

    Link ids follow the canonical scheduling order used for
    deterministic tie-breaking: fresh-broadcast links to status nodes and
    the destination (by target vector), then fresh-broadcast links to
    user nodes, then retransmission links (by source, target vectors),
    then local-share links.
    """
    if n_users < 2:
        raise ValueError(f"need at least 2 users, got {n_users}")
    full = (1 << n_users) - 1

    nodes = [VirtualNode(0, ARRIVAL)]
    user_ids = []
    for i in range(n_users):
        user_ids.append(len(nodes))
        nodes.append(VirtualNode(user_ids[-1], USER, user=i))
    status_ids = {}
    for mask in range(1, full):
        status_ids[mask] = len(nodes)
        nodes.append(VirtualNode(status_ids[mask], STATUS, mask=mask))
    destination_id = len(nodes)
    nodes.append(VirtualNode(destination_id, DESTINATION, mask=full))

    def status_or_dest(mask):
        return destination_id if mask == full else status_ids[mask]

    links = []

    def add(upstream, downstream, kind, **kw):
        links.append(VirtualLink(len(links), upstream, downstream, kind, **kw))

    for mask in range(1, full + 1):
        add(0, status_or_dest(mask), BS_EXACT, to_mask=mask)
    for i in range(n_users):
        add(0, user_ids[i], STORE, user=i)
    for mask in range(1, full):
        for target in range(mask + 1, full + 1):
            if target & mask == mask:
                add(status_ids[mask], status_or_dest(target), RETRANSMIT, from_mask=mask, to_mask=target)
    for i in range(n_users):
        add(user_ids[i], destination_id, SHARE, user=i)

    return VirtualNetwork(
        n_users=n_users,
        nodes=nodes,
        links=links,
        arrival_id=0,
        destination_id=destination_id,
        user_ids=user_ids,
        status_ids=status_ids,
    )
