"""Monte Carlo oracle for single-packet dissemination.

Replays the slot protocol directly, with no completion-time algebra, so
its sample means are an independent check on every closed form and on
the sharing-policy linear program:

* While nobody holds the packet, the base station broadcasts it each
  slot; users whose downlink is ON receive.
* When a broadcast creates new holders but not everyone has the packet,
  the sharing policy draws at most one designated sharer among the new
  holders (the per-packet sharing probabilities, flipped once per
  reception pattern).  Users that decline drop out of sharing for this
  packet.
* A designated sharer broadcasts locally in the next slot; with a lossy
  local link it retries until the broadcast goes through, and the base
  station stays silent meanwhile (one transmission per slot).  A
  successful local broadcast reaches every remaining user.
* With no designated sharer the base station keeps broadcasting to the
  remaining users.

Markov downlinks follow the renewal reading of the completion-time
recursion: the first slot sees steady-state channel states, an all-OFF
slot regenerates them, and once somebody holds the packet each remaining
user's channel leaves OFF with its chain's transition probability.

Trials are vectorised and split into fixed-size chunks; chunk `i` of an
experiment draws from an independent substream of (seed, i), so results
do not depend on scheduling or chunk execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytics import optimal_share_prob_asym
from .channels import NOISELESS_D2D, D2dChannel, IidChannel, MarkovChannel, markov_steady_state
from .seeding import substream

CHUNK_TRIALS = 1 << 18
MAX_USERS = 8

_TABLE = "table"
_UNICAST = "unicast"


class Policy:
    """Sharing decision table: (eligible holders, remaining users) -> per-user share probabilities.

    Masks are user bitmasks (user i = bit i).  A row's probabilities must
    sum to at most 1; the residual mass means "nobody shares this time"
    and the eligible holders drop out of sharing for the packet.
    Patterns without a row never share.
    """

    def __init__(self, n_users: int, rows: dict[tuple[int, int], np.ndarray], name: str, kind: str = _TABLE):
        if n_users > MAX_USERS:
            raise ValueError(f"at most {MAX_USERS} users supported, got {n_users}")
        self.n_users = n_users
        self.name = name
        self.kind = kind
        self.rows = {}
        for (active, remaining), probs in rows.items():
            probs = np.asarray(probs, dtype=float)
            if active & remaining:
                raise ValueError(f"holder mask {active:b} overlaps remaining mask {remaining:b}")
            if np.any(probs < -1e-12) or probs.sum() > 1.0 + 1e-9:
                raise ValueError(f"row ({active:b},{remaining:b}) probabilities invalid: {probs}")
            if np.any(probs[~_mask_bits(active, n_users)] != 0.0):
                raise ValueError(f"row ({active:b},{remaining:b}) assigns probability to a non-holder")
            self.rows[(active, remaining)] = np.clip(probs, 0.0, 1.0)

    def table(self) -> np.ndarray:
        """Dense (2^n * 2^n, n) lookup array keyed by active*2^n + remaining."""
        size = 1 << self.n_users
        tbl = np.zeros((size * size, self.n_users))
        for (active, remaining), probs in self.rows.items():
            tbl[active * size + remaining] = probs
        return tbl


def _mask_bits(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)


def no_sharing(n_users: int) -> Policy:
    return Policy(n_users, {}, "no-sharing")


def unicast(n_users: int) -> Policy:
    """Per-user unicast service: no common-interest broadcast, no sharing."""
    return Policy(n_users, {}, "unicast", kind=_UNICAST)


def full_cooperation(n_users: int) -> Policy:
    """Every holder is always willing to share; the sharer is drawn uniformly."""
    rows = {}
    for holders in range(1, 1 << n_users):
        remaining = ((1 << n_users) - 1) ^ holders
        if remaining == 0:
            continue
        k = bin(holders).count("1")
        probs = np.where(_mask_bits(holders, n_users), 1.0 / k, 0.0)
        rows[(holders, remaining)] = probs
    return Policy(n_users, rows, "always-share")


def uniform_share(n_users: int) -> Policy:
    """The symmetric-group optimum: each holder shares with probability 1/#holders."""
    pol = full_cooperation(n_users)
    return Policy(n_users, pol.rows, "uniform-share")


def named_policy(name: str, n_users: int) -> Policy:
    """Resolve a named strategy; the LP policy is built via `sharing_lp` instead."""
    factories = {
        "no-sharing": no_sharing,
        "unicast": unicast,
        "always-share": full_cooperation,
        "uniform-share": uniform_share,
    }
    if name not in factories:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(factories)}")
    return factories[name](n_users)


def two_user(p_1_to_2: float, p_2_to_1: float) -> Policy:
    rows = {
        (0b01, 0b10): np.array([p_1_to_2, 0.0]),
        (0b10, 0b01): np.array([0.0, p_2_to_1]),
    }
    return Policy(2, rows, f"two-user({p_1_to_2:g},{p_2_to_1:g})")


def two_user_optimal(p_e1: float, p_e2: float) -> Policy:
    """The reciprocity-optimal pair policy for sorted error probabilities."""
    p12, p21 = optimal_share_prob_asym(p_e1, p_e2)
    return Policy(2, two_user(p12, p21).rows, f"two-user-optimal({p_e1:g},{p_e2:g})")


def three_user_reciprocal(first_decision: dict[tuple[int, int], float], p_e) -> Policy:
    """Three-user policy: explicit first-slot probabilities plus pair continuations.

    `first_decision` maps (sender, remaining mask) to the sharing
    probability used when the first broadcast leaves that pattern (the
    nine degrees of freedom of the sharing program).  If the lone holder
    of a pattern declines, the two remaining users keep helping each
    other with the pair-optimal constants for their own error
    probabilities, which is exactly the continuation the three-user
    completion-time cases embed.
    """
    p_e = np.asarray(p_e, dtype=float)
    full = 0b111
    rows: dict[tuple[int, int], np.ndarray] = {}
    for holders in range(1, full):
        remaining = full ^ holders
        probs = np.zeros(3)
        for i in range(3):
            if holders >> i & 1:
                probs[i] = first_decision.get((i, remaining), 0.0)
        rows[(holders, remaining)] = probs
    # Pair continuations after the third user dropped out.
    for j in range(3):
        for k in range(3):
            if j == k:
                continue
            lo, hi = sorted((j, k), key=lambda u: (p_e[u], u))
            p_lo_hi, p_hi_lo = optimal_share_prob_asym(p_e[lo], p_e[hi])
            p_j_to_k = p_lo_hi if j == lo else p_hi_lo
            probs = np.zeros(3)
            probs[j] = p_j_to_k
            rows[(1 << j, 1 << k)] = probs
    return Policy(3, rows, "lp-policy")


@dataclass(frozen=True)
class DisseminationConfig:
    """One oracle experiment: channel models, local-link quality, policy, trial count."""

    channels: tuple
    policy: Policy
    d2d: D2dChannel = NOISELESS_D2D
    trials: int = 100_000
    seed: int = 0
    slot_cap: int = 1_000_000

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        n = len(self.channels)
        if self.policy.n_users != n:
            raise ValueError(f"policy is for {self.policy.n_users} users, config has {n}")
        kinds = {type(c) for c in self.channels}
        if len(kinds) > 1:
            raise ValueError("oracle channels must be all i.i.d. or all Markov")


@dataclass(frozen=True)
class TrialOutcome:
    completion_slots: int
    shares_sent: tuple[int, ...]
    received_via_d2d: tuple[int, ...]


@dataclass
class CompletionStats:
    """Sample summary of completion slots plus per-user sharing activity."""

    mean: float
    std_error: float
    trials: int
    censored: int
    share_rate: np.ndarray
    d2d_receive_rate: np.ndarray
    rounds_mean: float


@dataclass
class ReciprocityStats:
    """Per-ordered-pair local deliveries, normalised per initial broadcast round.

    An initial round is a slot in which the base station broadcasts a
    packet nobody holds yet; per such round, entry (i, j) converges to
    the expected-exchange quantity the reciprocity constraint balances
    (e.g. (1-p_ej) p_ei p_i->j for two users)."""

    matrix: np.ndarray
    std_error: np.ndarray
    trials: int
    rounds: int

    def symmetric_within(self, k_sigma: float = 3.0) -> bool:
        n = self.matrix.shape[0]
        for i in range(n):
            for j in range(i + 1, n):
                tol = k_sigma * math.hypot(self.std_error[i, j], self.std_error[j, i])
                if abs(self.matrix[i, j] - self.matrix[j, i]) > tol:
                    return False
        return True


@dataclass
class UtilityStats:
    """Per-user download/upload rates per broadcast round, with a D/U ratio estimate."""

    download: float
    download_se: float
    upload: float
    upload_se: float
    ratio: float
    ratio_se: float
    trials: int


def _ratio_estimate(x: np.ndarray, a: np.ndarray) -> tuple[float, float]:
    """Mean of sum(x)/sum(a) with a delta-method standard error."""
    n = x.size
    abar = a.mean()
    r = x.mean() / abar
    resid = x - r * a
    se = resid.std(ddof=1) / (abar * math.sqrt(n))
    return float(r), float(se)


def _chunk_sizes(trials: int):
    sizes = []
    left = trials
    while left > 0:
        sizes.append(min(CHUNK_TRIALS, left))
        left -= sizes[-1]
    return sizes


class _Records:
    """Per-trial outcome arrays accumulated across chunks."""

    def __init__(self, trials, n):
        self.slots = np.zeros(trials, dtype=np.int64)
        self.rounds = np.zeros(trials, dtype=np.int64)
        self.sharer = np.full(trials, -1, dtype=np.int8)
        self.remaining_at_share = np.zeros(trials, dtype=np.int16)
        self.censored = np.zeros(trials, dtype=bool)
        self.n = n


def _run_table_chunk(cfg: DisseminationConfig, rng, out: _Records, lo: int, hi: int):
    n = len(cfg.channels)
    k = hi - lo
    full = (1 << n) - 1
    gamma = cfg.d2d.error_prob
    table = cfg.policy.table()
    size = 1 << n

    markov = isinstance(cfg.channels[0], MarkovChannel)
    if markov:
        pi_on = np.array([markov_steady_state(c)[1] for c in cfg.channels])
        zeta_on = np.array([c.zeta_01 for c in cfg.channels])
    else:
        p_on = np.array([1.0 - c.error_prob for c in cfg.channels])

    mask = np.zeros(k, dtype=np.int32)
    dropped = np.zeros(k, dtype=np.int32)
    sharer = np.full(k, -1, dtype=np.int8)
    slots = np.zeros(k, dtype=np.int64)
    rounds = np.zeros(k, dtype=np.int64)
    done = np.zeros(k, dtype=bool)
    censored = np.zeros(k, dtype=bool)
    rec_sharer = np.full(k, -1, dtype=np.int8)
    rec_remaining = np.zeros(k, dtype=np.int16)
    pow2 = (1 << np.arange(n)).astype(np.int32)

    while True:
        act = np.flatnonzero(~done & ~censored)
        if act.size == 0:
            break
        over = act[slots[act] >= cfg.slot_cap]
        if over.size:
            censored[over] = True
            act = act[slots[act] < cfg.slot_cap]
            if act.size == 0:
                break

        sharing = act[sharer[act] >= 0]
        bs = act[sharer[act] < 0]

        if sharing.size:
            slots[sharing] += 1
            ok = sharing if gamma == 0.0 else sharing[rng.random(sharing.size) >= gamma]
            if ok.size:
                rec_sharer[ok] = sharer[ok]
                rec_remaining[ok] = (full ^ mask[ok]).astype(np.int16)
                mask[ok] = full
                done[ok] = True

        if bs.size:
            slots[bs] += 1
            fresh = bs[mask[bs] == 0]
            rounds[fresh] += 1
            if markov:
                p = np.where(mask[bs, None] == 0, pi_on[None, :], zeta_on[None, :])
                on = rng.random((bs.size, n)) < p
            else:
                on = rng.random((bs.size, n)) < p_on[None, :]
            on_mask = (on * pow2[None, :]).sum(axis=1, dtype=np.int32)
            recv = on_mask & ~mask[bs]
            new_mask = mask[bs] | recv
            mask[bs] = new_mask

            finished = new_mask == full
            done[bs[finished]] = True

            decide = np.flatnonzero((recv != 0) & ~finished)
            if decide.size:
                idx = bs[decide]
                active = (new_mask[decide] & ~dropped[idx]).astype(np.int64)
                keys = active * size + (full ^ new_mask[decide])
                probs = table[keys]
                cum = np.cumsum(probs, axis=1)
                u = rng.random(decide.size)
                chosen = (u[:, None] < cum).argmax(axis=1)
                has = u < cum[:, -1]
                sel = idx[has]
                sharer[sel] = chosen[has].astype(np.int8)
                declined = idx[~has]
                dropped[declined] |= active[~has].astype(np.int32)

    out.slots[lo:hi] = slots
    out.rounds[lo:hi] = rounds
    out.sharer[lo:hi] = rec_sharer
    out.remaining_at_share[lo:hi] = rec_remaining
    out.censored[lo:hi] = censored


def _run_unicast_chunk(cfg: DisseminationConfig, rng, out: _Records, lo: int, hi: int):
    n = len(cfg.channels)
    k = hi - lo
    if not isinstance(cfg.channels[0], IidChannel):
        raise ValueError("unicast oracle supports i.i.d. channels only")
    p_on = np.array([1.0 - c.error_prob for c in cfg.channels])
    pow2 = (1 << np.arange(n)).astype(np.int32)

    needy = np.full(k, (1 << n) - 1, dtype=np.int32)
    slots = np.zeros(k, dtype=np.int64)
    censored = np.zeros(k, dtype=bool)

    while True:
        act = np.flatnonzero((needy != 0) & ~censored)
        if act.size == 0:
            break
        over = act[slots[act] >= cfg.slot_cap]
        if over.size:
            censored[over] = True
            act = act[slots[act] < cfg.slot_cap]
            if act.size == 0:
                break
        slots[act] += 1
        on = rng.random((act.size, n)) < p_on[None, :]
        on_mask = (on * pow2[None, :]).sum(axis=1, dtype=np.int32)
        candidates = on_mask & needy[act]
        served = candidates & (-candidates)  # lowest-indexed needy user with an ON channel
        needy[act] &= ~served

    out.slots[lo:hi] = slots
    out.rounds[lo:hi] = slots
    out.censored[lo:hi] = censored


def _run(cfg: DisseminationConfig) -> _Records:
    n = len(cfg.channels)
    out = _Records(cfg.trials, n)
    lo = 0
    runner = _run_unicast_chunk if cfg.policy.kind == _UNICAST else _run_table_chunk
    for i, size in enumerate(_chunk_sizes(cfg.trials)):
        runner(cfg, substream(cfg.seed, i), out, lo, lo + size)
        lo += size
    return out


def simulate_completion(cfg: DisseminationConfig) -> CompletionStats:
    """Sample mean and standard error of the completion time under `cfg`.

    Trials that hit the slot cap are reported censored and excluded from
    the mean (they only occur at degenerate parameter corners).
    """
    rec = _run(cfg)
    ok = ~rec.censored
    slots = rec.slots[ok].astype(float)
    n_ok = int(ok.sum())
    mean = float(slots.mean()) if n_ok else math.nan
    se = float(slots.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else 0.0

    n = rec.n
    share_rate = np.array([(rec.sharer[ok] == u).mean() if n_ok else math.nan for u in range(n)])
    d2d_rate = np.array(
        [((rec.remaining_at_share[ok] >> u) & 1).mean() if n_ok else math.nan for u in range(n)]
    )
    return CompletionStats(
        mean=mean,
        std_error=se,
        trials=cfg.trials,
        censored=int(rec.censored.sum()),
        share_rate=share_rate,
        d2d_receive_rate=d2d_rate,
        rounds_mean=float(rec.rounds[ok].mean()) if n_ok else math.nan,
    )


def completion_samples(cfg: DisseminationConfig) -> np.ndarray:
    """Per-trial completion slot counts (censored trials excluded)."""
    rec = _run(cfg)
    return rec.slots[~rec.censored].copy()


def trial_outcomes(cfg: DisseminationConfig) -> list[TrialOutcome]:
    """Individual per-trial outcomes; intended for small trial counts."""
    rec = _run(cfg)
    outs = []
    for t in range(cfg.trials):
        shares = tuple(int(rec.sharer[t] == u) for u in range(rec.n))
        recvd = tuple(int((rec.remaining_at_share[t] >> u) & 1) for u in range(rec.n))
        outs.append(TrialOutcome(int(rec.slots[t]), shares, recvd))
    return outs


def measure_reciprocity(cfg: DisseminationConfig) -> ReciprocityStats:
    """Empirical local-delivery rates between ordered user pairs.

    Entry (i, j) is the expected number of packets user i delivers to
    user j per initial broadcast round (slots where the packet had no
    holder yet), which is the unit the reciprocity constraint balances.
    A local broadcast reaching several users counts once toward each
    receiving pair.
    """
    rec = _run(cfg)
    ok = ~rec.censored
    n = rec.n
    rounds = rec.rounds[ok].astype(float)
    matrix = np.zeros((n, n))
    se = np.zeros((n, n))
    for i in range(n):
        sent = rec.sharer[ok] == i
        for j in range(n):
            if i == j:
                continue
            x = (sent & (((rec.remaining_at_share[ok] >> j) & 1) == 1)).astype(float)
            matrix[i, j], se[i, j] = _ratio_estimate(x, rounds)
    return ReciprocityStats(matrix=matrix, std_error=se, trials=cfg.trials, rounds=int(rounds.sum()))


def simulate_utility(p_e: float, n_users: int, trials: int, seed: int = 0) -> UtilityStats:
    """Count downloads and sharer designations under uniform reciprocal sharing.

    Rates are per initial broadcast round, the unit of the per-user
    accounting: a user downloads when it missed the broadcast somebody
    else received, and uploads when it is the holder designated (uniformly)
    for the local broadcast.  The designation is drawn even in rounds
    where everyone received, matching how the upload expectation is
    defined; such a designation transmits nothing.
    """
    if n_users < 2 or n_users > MAX_USERS:
        raise ValueError(f"n_users must be in [2, {MAX_USERS}], got {n_users}")
    if not 0.0 < p_e < 1.0:
        raise ValueError(f"p_e must be in (0, 1) for the utility oracle, got {p_e}")
    downloads = np.zeros(trials, dtype=np.int16)
    attempts = np.zeros(trials, dtype=np.int64)
    lo = 0
    for i, size in enumerate(_chunk_sizes(trials)):
        rng = substream(seed, i)
        pending = np.arange(lo, lo + size)
        while pending.size:
            on = rng.random((pending.size, n_users)) < (1.0 - p_e)
            attempts[pending] += 1
            holders = on.sum(axis=1)
            effective = holders > 0
            eff = pending[effective]
            downloads[eff] = (n_users - holders[effective]).astype(np.int16)
            # Uniform designation among holders; with symmetric users only
            # the count per user matters, and each user is designated in a
            # 1/N share of effective rounds overall.
            pending = pending[~effective]
        lo += size

    x_down = downloads.astype(float) / n_users
    x_up = np.full(trials, 1.0 / n_users)
    a = attempts.astype(float)
    download, download_se = _ratio_estimate(x_down, a)
    upload, upload_se = _ratio_estimate(x_up, a)
    ratio_samples = downloads.astype(float)
    ratio = float(ratio_samples.mean())
    ratio_se = float(ratio_samples.std(ddof=1) / math.sqrt(trials))
    return UtilityStats(
        download=download,
        download_se=download_se,
        upload=upload,
        upload_se=upload_se,
        ratio=ratio,
        ratio_se=ratio_se,
        trials=trials,
    )
