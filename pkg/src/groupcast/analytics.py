"""Closed-form completion times, sharing optima, and related ratios.

All formulas describe a single common packet that a base station must
deliver to every user in a neighbourhood group over per-user ON/OFF
downlinks, optionally helped by local device-to-device (D2D) broadcast
sharing.  "Completion time" is the expected number of slots until every
user holds the packet.

Naming convention used throughout:

* ``t_eq``     broadcast downlink only, no local sharing;
* ``t_neq``    per-user unicast (the packet is not recognised as common);
* ``t_union``  broadcast downlink plus reciprocal local sharing, with the
               sharing probabilities chosen optimally under the
               equal-exchange (reciprocity) constraint;
* ``t_full``   every user always shares, ignoring reciprocity -- the
               cooperation benchmark.

Endpoint parameters that make a time infinite (an always-OFF channel)
return ``math.inf`` rather than raising, so parameter sweeps can cross
them.  Formula identities hold to 1e-12 in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channels import MarkovChannel, markov_steady_state


@dataclass(frozen=True)
class CompletionTimes:
    """Expected slot counts for the delivery disciplines that apply to a scenario."""

    t_eq: float
    t_union: float
    t_neq: float | None = None
    t_full: float | None = None


@dataclass(frozen=True)
class UtilityBreakdown:
    """Per-user expected download/upload packet counts and their difference."""

    download: float
    upload: float

    @property
    def utility(self) -> float:
        return self.download - self.upload

    @property
    def ratio(self) -> float:
        """Download-to-upload ratio; > 1 means membership pays off."""
        return self.download / self.upload


def _check_prob(p, name, allow_one=False):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {p!r}")
    if not allow_one and p >= 1.0:
        # Callers that tolerate the p=1 endpoint check it themselves and
        # return inf; reaching here is a misuse.
        raise ValueError(f"{name} must be < 1, got {p!r}")
    return p


def t_eq_two_symmetric(p_e: float) -> float:
    """Broadcast-only completion time for two users with equal error probability.

    Both users listen to the same broadcast; a slot is wasted only when
    both channels are OFF, and a lone straggler needs a geometric number
    of retransmissions.
    """
    if p_e == 1.0:
        return math.inf
    _check_prob(p_e, "p_e")
    return (2.0 * p_e + 1.0) / (1.0 - p_e * p_e)


def t_neq_two_symmetric(p_e: float) -> float:
    """Unicast completion time for two users requesting the same packet separately.

    The scheduler is opportunistic (it serves a user whose channel is ON),
    but each user must be served by its own transmission.
    """
    if p_e == 1.0:
        return math.inf
    _check_prob(p_e, "p_e")
    return (p_e + 2.0) / (1.0 - p_e * p_e)


def improvement_ratio_identify(p_e: float) -> float:
    """t_neq / t_eq: the speedup from recognising a packet as common.

    Equals 2 on perfect channels and decays convexly to 1 as the channels
    degrade, so recognising common interests alone is not enough on bad
    channels.
    """
    _check_prob(p_e, "p_e", allow_one=True)
    return (p_e + 2.0) / (2.0 * p_e + 1.0)


def t_union_two_symmetric(p_e: float) -> float:
    """Completion time for two symmetric users with optimal reciprocal sharing.

    With equal error probabilities the reciprocity constraint costs
    nothing: both sharing probabilities are optimally 1, and a slot where
    exactly one user receives is always followed by one local broadcast.
    """
    if p_e == 1.0:
        return math.inf
    _check_prob(p_e, "p_e")
    return (-2.0 * p_e * p_e + 2.0 * p_e + 1.0) / (1.0 - p_e * p_e)


def improvement_ratio_social(p_e: float) -> float:
    """t_eq / t_union: the speedup from forming the sharing group (two users)."""
    if p_e == 1.0:
        return 3.0  # limit of (2p+1)/(-2p^2+2p+1)
    _check_prob(p_e, "p_e")
    return (2.0 * p_e + 1.0) / (-2.0 * p_e * p_e + 2.0 * p_e + 1.0)


def t_eq_n_symmetric(p_e: float, n_users: int) -> float:
    """Broadcast-only completion time for `n_users` symmetric users.

    Solves the recursion over the number of users that missed the first
    broadcast.  The self-referential all-miss term is isolated
    algebraically:

        T(n) = [sum_{i<n} C(n,i) p^i (1-p)^(n-i) (1 + T(i)) + p^n] / (1 - p^n)

    with T(0) = 0.
    """
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")
    if p_e == 1.0:
        return math.inf
    _check_prob(p_e, "p_e")
    t = [0.0] * (n_users + 1)
    for n in range(1, n_users + 1):
        acc = p_e**n
        for i in range(n):
            acc += math.comb(n, i) * p_e**i * (1.0 - p_e) ** (n - i) * (1.0 + t[i])
        t[n] = acc / (1.0 - p_e**n)
    return t[n_users]


def t_eq_asym(p_e) -> float:
    """Broadcast-only completion time for heterogeneous users (no sharing).

    Exact subset recursion over the set of users still missing the
    packet; per slot each remaining user independently stays remaining
    with its own error probability, and the self-referential
    nobody-received term is isolated algebraically.  Reduces to
    `t_eq_n_symmetric` for equal probabilities.
    """
    probs = [float(p) for p in p_e]
    if not probs:
        raise ValueError("need at least one user")
    for p in probs:
        if p == 1.0:
            return math.inf
        _check_prob(p, "p_e")
    n = len(probs)
    t = {0: 0.0}
    for size in range(1, n + 1):
        for remaining in range(1, 1 << n):
            if bin(remaining).count("1") != size:
                continue
            members = [i for i in range(n) if remaining >> i & 1]
            stay_all = math.prod(probs[i] for i in members)
            acc = 1.0
            # Transitions to strict subsets (at least one member received).
            for sub in range(remaining):
                if sub & ~remaining or sub == 0:
                    continue
                pr = 1.0
                for i in members:
                    pr *= probs[i] if sub >> i & 1 else 1.0 - probs[i]
                acc += pr * t[sub]
            t[remaining] = acc / (1.0 - stay_all)
    return t[(1 << n) - 1]


def t_union_n_symmetric(p_e: float, n_users: int) -> float:
    """Completion time for `n_users` symmetric users under uniform reciprocal sharing.

    Each user that received the first broadcast shares with probability
    1/(number of holders), so whenever anyone received, one local
    broadcast finishes the job in the next slot:

        T = 1 + (1 - (1-p)^N) / (1 - p^N)

    Constant 2 at p_e = 0.5 and tends to 2 as the group grows, whatever
    the error probability.
    """
    if n_users < 1:
        raise ValueError(f"n_users must be >= 1, got {n_users}")
    if p_e == 1.0:
        return math.inf
    _check_prob(p_e, "p_e")
    return 1.0 + (1.0 - (1.0 - p_e) ** n_users) / (1.0 - p_e**n_users)


def optimal_share_prob_asym(p_e1: float, p_e2: float) -> tuple[float, float]:
    """Optimal reciprocal sharing probabilities for two users with p_e1 <= p_e2.

    The worse user always shares; the better user shares just often enough
    to return the same expected amount of content:

        p_{1->2} = (1-p_e2) p_e1 / ((1-p_e1) p_e2),   p_{2->1} = 1.

    When p_e2 = 0 the sharing event has probability zero, leaving the
    probability unconstrained; it is fixed to 1.
    """
    if p_e1 > p_e2:
        raise ValueError(f"expected p_e1 <= p_e2, got {p_e1} > {p_e2}")
    if p_e2 == 0.0 or p_e1 == 1.0:
        return 1.0, 1.0
    return (1.0 - p_e2) * p_e1 / ((1.0 - p_e1) * p_e2), 1.0


def asym_two_user(p_e1: float, p_e2: float) -> tuple[CompletionTimes, float, float]:
    """Completion times and optimal sharing probabilities for two asymmetric users.

    Requires p_e1 <= p_e2 < 1 (callers sort first).  Returns the no-sharing
    time, the optimal reciprocal-sharing time and the full-cooperation
    benchmark, together with (p_{1->2}, p_{2->1}).
    """
    if p_e1 > p_e2:
        raise ValueError(f"expected p_e1 <= p_e2 (sorted), got {p_e1} > {p_e2}")
    _check_prob(p_e1, "p_e1", allow_one=True)
    _check_prob(p_e2, "p_e2", allow_one=True)
    if p_e2 == 1.0:
        p12, p21 = optimal_share_prob_asym(p_e1, p_e2)
        return CompletionTimes(math.inf, math.inf, t_full=math.inf), p12, p21
    q1, q2 = 1.0 - p_e1, 1.0 - p_e2
    denom = 1.0 - p_e1 * p_e2
    base = p_e1 * p_e2 + q1 * q2

    t_eq = (base + p_e1 * q2 * (1.0 + 1.0 / q1) + p_e2 * q1 * (1.0 + 1.0 / q2)) / denom
    t_full = (base + p_e1 * q2 * 2.0 + p_e2 * q1 * 2.0) / denom

    p12, p21 = optimal_share_prob_asym(p_e1, p_e2)
    if p_e2 == 0.0:
        t_union = t_full
    else:
        # User 2 (worse channel) always shares; user 1 shares with
        # probability p12, otherwise user 2 waits for retransmissions.
        decline = (p_e2 - p_e1) / (q1 * p_e2)
        t_union = (
            base + q2 * p_e1 * 2.0 + q1 * p_e2 * (p12 * 2.0 + decline * (1.0 + 1.0 / q2))
        ) / denom
    return CompletionTimes(t_eq=t_eq, t_union=t_union, t_full=t_full), p12, p21


def asym_loss_vs_full(p_e1: float, p_e2: float) -> float:
    """Reciprocity price t_union - t_full in closed form, via the gap Delta = p_e2 - p_e1.

        loss = Delta / (1 - p_e1 p_e2) * (1/(1-p_e2) - 1)

    Zero iff the users are symmetric, and increasing in Delta at fixed p_e2.
    """
    if p_e1 > p_e2:
        raise ValueError(f"expected p_e1 <= p_e2 (sorted), got {p_e1} > {p_e2}")
    if p_e2 == 1.0:
        return math.inf
    delta = p_e2 - p_e1
    return delta / (1.0 - (p_e2 - delta) * p_e2) * (1.0 / (1.0 - p_e2) - 1.0)


def markov_two_symmetric(zeta_01: float, zeta_10: float) -> tuple[float, float, float]:
    """Completion times for two symmetric users on two-state Markov downlinks.

    Evaluated at the steady state (pi_0, pi_1).  The renewal recursion
    treats an all-OFF first slot as a restart, while a lone straggler's
    wait is the chain's OFF->ON hitting time 1/zeta_01:

        t_eq    = (1 + 2 pi_0 (1-pi_0) / zeta_01) / (1 - pi_0^2)
        t_union = (-2 pi_0^2 + 2 pi_0 + 1) / (1 - pi_0^2)

    Returns (t_eq, t_union, t_eq / t_union).  Both times are infinite when
    zeta_01 = 0 (the OFF state is absorbing).
    """
    ch = MarkovChannel(zeta_01, zeta_10)
    pi_0, _ = markov_steady_state(ch)
    if zeta_01 == 0.0:
        return math.inf, math.inf, math.nan
    denom = 1.0 - pi_0 * pi_0
    t_eq = (1.0 + 2.0 * pi_0 * (1.0 - pi_0) / zeta_01) / denom
    t_union = (-2.0 * pi_0 * pi_0 + 2.0 * pi_0 + 1.0) / denom
    return t_eq, t_union, t_eq / t_union


def unreliable_local_two_symmetric(p_e: float, gamma: float) -> tuple[float, float, float]:
    """Optimal sharing with a lossy local link (OFF with probability gamma).

    A user keeps a copy only when told to share, and a failed local
    broadcast is retried by the same user, costing 1/(1-gamma) slots.
    Sharing beats waiting for retransmissions only while gamma <= p_e;
    otherwise nobody shares and the time degenerates to the
    broadcast-only value.

    Returns (p_star, t_union, t_eq / t_union).
    """
    _check_prob(p_e, "p_e")
    _check_prob(gamma, "gamma")
    t_eq = t_eq_two_symmetric(p_e)
    if gamma > p_e:
        return 0.0, t_eq, 1.0
    t_union = (1.0 + 2.0 * p_e * (1.0 - p_e) / (1.0 - gamma)) / (1.0 - p_e * p_e)
    ratio = (2.0 * p_e + 1.0) / (2.0 * p_e * (1.0 - p_e) / (1.0 - gamma) + 1.0)
    return 1.0, t_union, ratio


def utility_n_symmetric(p_e: float, n_users: int) -> UtilityBreakdown:
    """Per-user download/upload accounting under uniform reciprocal sharing.

    Per first-broadcast round: the user downloads from the group when its
    own channel failed but somebody received (probability
    p_e (1 - p_e^(N-1))), and uploads when it received and is the one
    picked, uniformly among the i+1 holders, to do the local broadcast:

        U = (1-p_e) sum_{i=0}^{N-1} C(N-1,i) (1-p_e)^i p_e^(N-1-i) / (i+1)

    Note the i = N-1 term: the holder count is drawn even in the round
    where everyone already received, which is how the accounting is
    defined (the designated user simply has nobody left to serve).
    """
    if n_users < 2:
        raise ValueError(f"n_users must be >= 2, got {n_users}")
    _check_prob(p_e, "p_e", allow_one=True)
    download = p_e * (1.0 - p_e ** (n_users - 1))
    upload = 0.0
    for i in range(n_users):
        upload += (
            math.comb(n_users - 1, i)
            * (1.0 - p_e) ** i
            * p_e ** (n_users - 1 - i)
            / (i + 1.0)
        )
    upload *= 1.0 - p_e
    return UtilityBreakdown(download=download, upload=upload)


def stability_bounds_two_symmetric(p_e: float) -> tuple[float, float, float]:
    """Arrival-rate bounds of the reciprocal-sharing scheduler analysis (two symmetric users).

    Returns (centralized bound 1 - p_e^2, distributed bound
    (1 - p_e^2) / (1 + 2 p_e - 2 p_e^2), and their ratio
    1 + 2 p_e - 2 p_e^2, which peaks at p_e = 1/2).
    """
    _check_prob(p_e, "p_e", allow_one=True)
    centralized = 1.0 - p_e * p_e
    ratio = 1.0 + 2.0 * p_e - 2.0 * p_e * p_e
    return centralized, centralized / ratio, ratio
