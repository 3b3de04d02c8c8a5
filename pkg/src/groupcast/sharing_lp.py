"""Optimal reciprocal sharing for three asymmetric users, via a small LP.

With three users the completion time is an affine function of nine
sharing probabilities (who shares, toward which remaining set), indexed
by the channel-state pattern of the first broadcast.  Minimising it
subject to the pairwise equal-exchange constraints is a linear program;
this module builds that program, solves it, and also answers the
"should a newcomer be brought into the group at all" comparison.

Users are 0-indexed in code; variable names are rendered 1-based
("p1->23" is user 1 sharing with users 2 and 3 when it is the only
holder).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytics import asym_two_user, optimal_share_prob_asym
from .simplex import OPTIMAL, LinearProgram, LpSolution, solve_lp
from . import simulate

#: LP variable order: pairwise sharing probabilities, then lone-holder ones.
VAR_NAMES = (
    "p1->2",
    "p1->3",
    "p2->1",
    "p2->3",
    "p3->1",
    "p3->2",
    "p1->23",
    "p2->13",
    "p3->12",
)

#: Sentinel for the all-OFF case, whose time is the completion time itself
#: (its renewal is absorbed into the objective's denominator).
CASE_8_SELF = "self-referential"


@dataclass(frozen=True)
class Affine:
    """const + sum(coeffs[name] * x[name]); the shape of every case time."""

    const: float
    coeffs: dict[str, float]

    def value(self, policy: dict[str, float]) -> float:
        return self.const + sum(c * policy[name] for name, c in self.coeffs.items())


def _check_sorted_triple(p_e):
    p = tuple(float(v) for v in p_e)
    if len(p) != 3:
        raise ValueError(f"expected three error probabilities, got {len(p)}")
    if not (0.0 <= p[0] <= p[1] <= p[2]):
        raise ValueError(f"error probabilities must be sorted ascending, got {p}")
    if p[2] >= 1.0:
        raise ValueError(f"error probabilities must be < 1, got {p}")
    return p


def case_probabilities(p_e) -> np.ndarray:
    """P(case 1..8): the eight first-slot channel patterns in case order.

    Case order: (0,1,1), (1,0,1), (1,1,0), (0,0,1), (0,1,0), (1,0,0),
    (1,1,1), (0,0,0) -- 1 marks a user whose channel was ON.
    """
    p1, p2, p3 = p_e
    q1, q2, q3 = 1.0 - p1, 1.0 - p2, 1.0 - p3
    return np.array(
        [
            p1 * q2 * q3,
            q1 * p2 * q3,
            q1 * q2 * p3,
            p1 * p2 * q3,
            p1 * q2 * p3,
            q1 * p2 * p3,
            q1 * q2 * q3,
            p1 * p2 * p3,
        ]
    )


def case_completion_times(p_e, policy: dict[str, float] | None = None):
    """The eight per-case completion times, affine in the sharing probabilities.

    Cases 1, 2 and 4 finish in two slots because their constraints pin the
    total sharing probability toward the lone remaining user to one; case
    7 needs a single slot; case 3 mixes one local broadcast against
    retransmissions to the worst user; cases 5 and 6 mix a lone holder's
    group broadcast against the remaining pair helping each other with
    their own pair-optimal constants.  Case 8 (all OFF) is the
    self-referential renewal.

    With `policy` given, returns numbers instead of affine forms (case 8
    stays the sentinel).
    """
    p = _check_sorted_triple(p_e)
    p1, p2, p3 = p
    q3 = 1.0 - p3

    pair_13 = 1.0 + asym_two_user(p1, p3)[0].t_union
    pair_23 = 1.0 + asym_two_user(p2, p3)[0].t_union

    times = [
        Affine(2.0, {}),
        Affine(2.0, {}),
        Affine(1.0 + 1.0 / q3, {"p1->3": 1.0 - 1.0 / q3, "p2->3": 1.0 - 1.0 / q3}),
        Affine(2.0, {}),
        Affine(pair_13, {"p2->13": 2.0 - pair_13}),
        Affine(pair_23, {"p1->23": 2.0 - pair_23}),
        Affine(1.0, {}),
        CASE_8_SELF,
    ]
    if policy is None:
        return times
    return [t if t is CASE_8_SELF else t.value(policy) for t in times]


def build_three_user_lp(p_e) -> LinearProgram:
    """The sharing-probability program for a sorted error-probability triple.

    Objective: expected completion time over the eight first-slot cases,
    with the all-OFF renewal folded into the denominator.  Constraints:

    * three pairwise equal-exchange equalities (expected deliveries
      between each pair balance, as printed in the source analysis);
    * the total sharing probability toward each of the two better users
      equals one, and toward the worst user is at most one;
    * the worst user always broadcasts when it is the lone holder;
    * every probability lies in [0, 1].
    """
    p = _check_sorted_triple(p_e)
    p1, p2, p3 = p
    q1, q2, q3 = 1.0 - p1, 1.0 - p2, 1.0 - p3
    idx = {name: i for i, name in enumerate(VAR_NAMES)}
    n = len(VAR_NAMES)

    probs = case_probabilities(p)
    times = case_completion_times(p)
    denom = 1.0 - p1 * p2 * p3

    objective = np.zeros(n)
    constant = probs[7]  # the all-OFF slot itself
    for pr, t in zip(probs[:7], times[:7]):
        constant += pr * t.const
        for name, coef in t.coeffs.items():
            objective[idx[name]] += pr * coef
    objective /= denom
    constant /= denom

    a_eq = np.zeros((6, n))
    b_eq = np.zeros(6)
    # Exchange balance user 1 <-> user 2.
    a_eq[0, idx["p1->23"]] = q1 * p2 * p3
    a_eq[0, idx["p1->2"]] = q1 * p2 * q3
    a_eq[0, idx["p2->13"]] = -p1 * q2 * p3
    a_eq[0, idx["p2->1"]] = -p1 * q2 * q3
    # Exchange balance user 1 <-> user 3.
    a_eq[1, idx["p1->23"]] = q1 * p3 * p2
    a_eq[1, idx["p1->3"]] = q1 * p3 * q2
    a_eq[1, idx["p3->12"]] = -p1 * q3 * p2
    a_eq[1, idx["p3->1"]] = -p1 * q3 * q2
    # Exchange balance user 2 <-> user 3 (prefactors as printed in the analysis).
    a_eq[2, idx["p2->13"]] = q2 * p3 * p1
    a_eq[2, idx["p2->3"]] = q2 * p3 * q1
    a_eq[2, idx["p3->12"]] = -p3 * q2 * p1
    a_eq[2, idx["p3->2"]] = -p3 * q2 * q1
    # Cases 1 and 2 finish in two slots: full sharing mass toward users 1 and 2.
    a_eq[3, idx["p2->1"]] = 1.0
    a_eq[3, idx["p3->1"]] = 1.0
    b_eq[3] = 1.0
    a_eq[4, idx["p1->2"]] = 1.0
    a_eq[4, idx["p3->2"]] = 1.0
    b_eq[4] = 1.0
    # Worst user always shares as the lone holder (case 4 finishes in two slots).
    a_eq[5, idx["p3->12"]] = 1.0
    b_eq[5] = 1.0

    a_ub = np.zeros((1, n))
    a_ub[0, idx["p1->3"]] = 1.0
    a_ub[0, idx["p2->3"]] = 1.0
    b_ub = np.ones(1)

    return LinearProgram(
        variables=list(VAR_NAMES),
        objective=objective,
        constant=constant,
        a_eq=a_eq,
        b_eq=b_eq,
        a_ub=a_ub,
        b_ub=b_ub,
    )


def solve_three_user(p_e) -> tuple[LpSolution, dict[str, float]]:
    """Solve the sharing program; raises if the instance is not optimal."""
    lp = build_three_user_lp(p_e)
    sol = solve_lp(lp)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"sharing LP for p_e={tuple(p_e)} ended {sol.status}:\n{lp.to_text()}")
    return sol, dict(zip(VAR_NAMES, (float(v) for v in sol.x)))


def reciprocity_residuals(p_e, policy: dict[str, float]) -> np.ndarray:
    """Absolute residuals of the three pairwise exchange equalities at `policy`."""
    lp = build_three_user_lp(p_e)
    x = np.array([policy[name] for name in VAR_NAMES])
    return np.abs(lp.a_eq[:3] @ x - lp.b_eq[:3])


def policy_for_simulation(p_e, policy: dict[str, float]) -> simulate.Policy:
    """Convert an LP policy into the oracle's decision table (with pair continuations)."""
    first = {}
    for name, value in policy.items():
        sender = int(name[1]) - 1
        targets = name.split(">")[1]
        remaining = 0
        for ch in targets:
            remaining |= 1 << (int(ch) - 1)
        first[(sender, remaining)] = value
    return simulate.three_user_reciprocal(first, p_e)


def _pair_chain_states():
    # Pair progress: nobody / holder-will-share / holder-declined (x2) / done.
    return ("empty", "share1", "wait2", "share2", "wait1", "done")


def grouping_time_separate(p_e) -> float:
    """Expected delivery time when the worst user stays outside the group.

    The base station broadcasts to every uncompleted user each slot.  The
    grouped pair helps each other with their pair-optimal sharing
    probabilities; the outsider cannot decode local broadcasts and is
    served by the base station alone.  Computed exactly as the absorption
    time of the product chain (pair progress x outsider progress).
    """
    p1, p2, p3 = _check_sorted_triple(p_e)
    q1, q2, q3 = 1.0 - p1, 1.0 - p2, 1.0 - p3
    p12, p21 = optimal_share_prob_asym(p1, p2)

    pair_states = _pair_chain_states()
    pair_next = {s: {} for s in pair_states}
    pair_next["empty"] = {
        "done": q1 * q2,
        "share1": q1 * p2 * p12,
        "wait2": q1 * p2 * (1.0 - p12),
        "share2": p1 * q2 * p21,
        "wait1": p1 * q2 * (1.0 - p21),
        "empty": p1 * p2,
    }
    pair_next["share1"] = {"done": 1.0}
    pair_next["share2"] = {"done": 1.0}
    pair_next["wait2"] = {"done": q2, "wait2": p2}
    pair_next["wait1"] = {"done": q1, "wait1": p1}
    pair_next["done"] = {"done": 1.0}

    # Product states (pair, outsider_has) excluding the absorbing (done, True).
    transient = [(s, h) for s in pair_states for h in (False, True) if not (s == "done" and h)]
    index = {s: i for i, s in enumerate(transient)}
    m = len(transient)
    trans = np.zeros((m, m))
    for (ps, h), i in index.items():
        for ps2, pr in pair_next[ps].items():
            if pr == 0.0:
                continue
            if h:
                if (ps2, True) in index:
                    trans[i, index[(ps2, True)]] += pr
            else:
                # The outsider listens to the broadcast every slot.
                if (ps2, True) in index:
                    trans[i, index[(ps2, True)]] += pr * q3
                trans[i, index[(ps2, False)]] += pr * p3
    hit = np.linalg.solve(np.eye(m) - trans, np.ones(m))
    return float(hit[index[("empty", False)]])


def grouping_compare(p_e) -> tuple[float, float, float]:
    """Delivery times with the worst user outside vs inside the group.

    Returns (t_separate, t_grouped, t_separate / t_grouped).  A ratio of
    at least one means admitting the newcomer never hurts.
    """
    p = _check_sorted_triple(p_e)
    t_separate = grouping_time_separate(p)
    sol, _ = solve_three_user(p)
    t_grouped = sol.value
    return t_separate, t_grouped, t_separate / t_grouped
