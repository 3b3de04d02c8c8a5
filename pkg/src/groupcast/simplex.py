"""Small dense linear-program solver.

The sharing-policy programs solved here have at most a dozen variables,
so this is a plain two-phase tableau simplex with Bland's anti-cycling
rule: robustness and debuggability over speed.  Every variable carries an
implicit box bound 0 <= x <= 1 (all decision variables are
probabilities); general inequalities are expressed as `a . x <= b` rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """min objective . x + constant  s.t.  A_eq x = b_eq, A_ub x <= b_ub, 0 <= x <= 1."""

    variables: list[str]
    objective: np.ndarray
    constant: float = 0.0
    a_eq: np.ndarray = field(default=None)
    b_eq: np.ndarray = field(default=None)
    a_ub: np.ndarray = field(default=None)
    b_ub: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.variables)
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (n,):
            raise ValueError(f"objective has shape {self.objective.shape}, expected ({n},)")
        for attr_a, attr_b in (("a_eq", "b_eq"), ("a_ub", "b_ub")):
            a = getattr(self, attr_a)
            b = getattr(self, attr_b)
            a = np.zeros((0, n)) if a is None else np.asarray(a, dtype=float).reshape(-1, n)
            b = np.zeros(0) if b is None else np.asarray(b, dtype=float).reshape(-1)
            if a.shape[0] != b.shape[0]:
                raise ValueError(f"{attr_a} has {a.shape[0]} rows but {attr_b} has {b.shape[0]}")
            if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
                raise ValueError("constraint coefficients must be finite")
            setattr(self, attr_a, a)
            setattr(self, attr_b, b)
        if not np.all(np.isfinite(self.objective)):
            raise ValueError("objective coefficients must be finite")

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def to_text(self) -> str:
        """Plain-text dump of the program for inspection."""

        def row(coefs):
            terms = [
                f"{c:+.6g}*{v}" for c, v in zip(coefs, self.variables) if abs(c) > 0
            ]
            return " ".join(terms) if terms else "0"

        lines = [f"min {row(self.objective)} {self.constant:+.6g}"]
        for a, b in zip(self.a_eq, self.b_eq):
            lines.append(f"  {row(a)} == {b:.6g}")
        for a, b in zip(self.a_ub, self.b_ub):
            lines.append(f"  {row(a)} <= {b:.6g}")
        lines.append(f"  0 <= {', '.join(self.variables)} <= 1")
        return "\n".join(lines)


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    value: float | None = None


def _bland_iterate(tableau, cost, basis, tol):
    """Run primal simplex pivots on a canonical tableau until optimal/unbounded.

    `cost` is the reduced-cost row (last entry = -objective).  Bland's rule
    (lowest eligible index for both the entering and, on ratio ties, the
    leaving basic variable) guarantees termination.
    """
    m = tableau.shape[0]
    n = tableau.shape[1] - 1
    while True:
        enter = -1
        for j in range(n):
            if cost[j] < -tol:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        leave = -1
        best = np.inf
        for r in range(m):
            a = tableau[r, enter]
            if a > tol:
                ratio = tableau[r, -1] / a
                if ratio < best - tol or (ratio < best + tol and (leave < 0 or basis[r] < basis[leave])):
                    best = ratio
                    leave = r
        if leave < 0:
            return UNBOUNDED
        piv = tableau[leave, enter]
        tableau[leave] /= piv
        for r in range(m):
            if r != leave and tableau[r, enter] != 0.0:
                tableau[r] -= tableau[r, enter] * tableau[leave]
        cost -= cost[enter] * tableau[leave]
        basis[leave] = enter


def solve_lp(lp: LinearProgram, tol: float = PIVOT_TOL) -> LpSolution:
    """Solve the program to a vertex optimum.

    Converts to standard form (upper bounds and <= rows become slack
    variables), runs phase 1 with artificial variables, then phase 2.
    """
    n = lp.n_vars
    m_eq = lp.a_eq.shape[0]
    m_ub = lp.a_ub.shape[0]
    m = m_eq + m_ub + n  # one row per upper bound x_i + s_i = 1
    n_std = n + m_ub + n

    a = np.zeros((m, n_std))
    b = np.zeros(m)
    a[:m_eq, :n] = lp.a_eq
    b[:m_eq] = lp.b_eq
    a[m_eq : m_eq + m_ub, :n] = lp.a_ub
    a[m_eq : m_eq + m_ub, n : n + m_ub] = np.eye(m_ub)
    b[m_eq : m_eq + m_ub] = lp.b_ub
    a[m_eq + m_ub :, :n] = np.eye(n)
    a[m_eq + m_ub :, n + m_ub :] = np.eye(n)
    b[m_eq + m_ub :] = 1.0

    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: artificial basis.
    tableau = np.hstack([a, np.eye(m), b[:, None]])
    basis = list(range(n_std, n_std + m))
    cost = np.zeros(n_std + m + 1)
    cost[n_std : n_std + m] = 1.0
    cost -= tableau.sum(axis=0)  # canonicalize against the artificial basis
    status = _bland_iterate(tableau, cost, basis, tol)
    if status != OPTIMAL or -cost[-1] > 1e-7:
        return LpSolution(status=INFEASIBLE)

    # Pivot lingering artificials out of the (degenerate) basis; a row with
    # no real pivot candidate is redundant and can be ignored.
    drop_rows = []
    for r in range(m):
        if basis[r] >= n_std:
            piv_col = -1
            for j in range(n_std):
                if abs(tableau[r, j]) > tol:
                    piv_col = j
                    break
            if piv_col < 0:
                drop_rows.append(r)
                continue
            piv = tableau[r, piv_col]
            tableau[r] /= piv
            for rr in range(m):
                if rr != r and tableau[rr, piv_col] != 0.0:
                    tableau[rr] -= tableau[rr, piv_col] * tableau[r]
            basis[r] = piv_col
    if drop_rows:
        keep = [r for r in range(m) if r not in drop_rows]
        tableau = tableau[keep]
        basis = [basis[r] for r in keep]
        m = len(keep)

    # Phase 2 on the real objective.
    tableau = np.hstack([tableau[:, :n_std], tableau[:, -1:]])
    cost = np.zeros(n_std + 1)
    cost[:n] = lp.objective
    for r, col in enumerate(basis):
        if cost[col] != 0.0:
            cost -= cost[col] * tableau[r]
    status = _bland_iterate(tableau, cost, basis, tol)
    if status != OPTIMAL:
        return LpSolution(status=status)

    x_std = np.zeros(n_std)
    for r, col in enumerate(basis):
        x_std[col] = tableau[r, -1]
    x = np.clip(x_std[:n], 0.0, 1.0)
    return LpSolution(status=OPTIMAL, x=x, value=float(lp.objective @ x + lp.constant))
