"""Dense two-phase simplex for small linear programs.

Solves  max c'x  s.t.  A x (<=|>=|=) b,  x >= 0,  returning both the
primal solution and one dual value per constraint row.  Bland's rule is
used for entering and leaving variables, so the method cannot cycle and
is deterministic.  Intended for desk-scale problems: few rows, up to a
few ten-thousand columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-7


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    objective: Optional[float] = None


def _bland_iterate(
    tableau: np.ndarray,
    basis: list[int],
    cost: np.ndarray,
    allowed: np.ndarray,
) -> str:
    """Pivot until optimal or unbounded; mutates tableau and basis."""
    m = tableau.shape[0]
    while True:
        cb = cost[basis]
        reduced = cost - cb @ tableau[:, :-1]
        candidates = np.flatnonzero((reduced > _PIVOT_TOL) & allowed)
        if candidates.size == 0:
            return OPTIMAL
        enter = int(candidates[0])
        col = tableau[:, enter]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            return UNBOUNDED
        ratios = tableau[rows, -1] / col[rows]
        best = ratios.min()
        # Bland tie-break: smallest basis variable index among minimal ratios.
        tied = rows[ratios <= best + 1e-12]
        leave = int(min(tied, key=lambda r: basis[r]))
        pivot = tableau[leave, enter]
        tableau[leave, :] /= pivot
        for r in range(m):
            if r != leave and tableau[r, enter] != 0.0:
                tableau[r, :] -= tableau[r, enter] * tableau[leave, :]
        basis[leave] = enter


def lp_solve(
    objective: Sequence[float],
    rows: Sequence[Sequence[float]],
    senses: Sequence[str],
    rhs: Sequence[float],
) -> LPResult:
    """Maximize objective'x subject to rows[i] . x  senses[i]  rhs[i], x >= 0.

    Duals follow the maximization convention: >= rows get nonpositive
    duals, <= rows nonnegative, = rows unconstrained, and the dual
    objective duals'rhs equals the primal optimum.
    """
    c = np.asarray(objective, dtype=float)
    a = np.asarray(rows, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if a.ndim != 2 or a.shape[0] != len(senses) or a.shape[0] != b.size:
        raise ValueError("inconsistent LP dimensions")
    m, n = a.shape
    if c.size != n:
        raise ValueError("objective length does not match row width")
    for s in senses:
        if s not in ("<=", ">=", "="):
            raise ValueError(f"unknown sense {s!r}")

    sign = np.ones(m)
    a = a.copy()
    b = b.copy()
    flipped = list(senses)
    for i in range(m):
        if b[i] < 0.0:
            a[i, :] *= -1.0
            b[i] *= -1.0
            sign[i] = -1.0
            if senses[i] == "<=":
                flipped[i] = ">="
            elif senses[i] == ">=":
                flipped[i] = "<="

    slack_cols = [i for i, s in enumerate(flipped) if s != "="]
    n_slack = len(slack_cols)
    width = n + n_slack + m + 1
    tableau = np.zeros((m, width))
    tableau[:, :n] = a
    for k, i in enumerate(slack_cols):
        tableau[i, n + k] = 1.0 if flipped[i] == "<=" else -1.0
    art0 = n + n_slack
    for i in range(m):
        tableau[i, art0 + i] = 1.0
    tableau[:, -1] = b

    basis = [art0 + i for i in range(m)]
    allowed = np.ones(width - 1, dtype=bool)

    phase1 = np.zeros(width - 1)
    phase1[art0:] = -1.0
    status = _bland_iterate(tableau, basis, phase1, allowed)
    assert status == OPTIMAL  # phase 1 is bounded by construction
    if sum(tableau[r, -1] for r in range(m) if basis[r] >= art0) > _FEAS_TOL:
        return LPResult(INFEASIBLE)

    # Drive remaining artificials out of the basis where a pivot exists;
    # rows without one are redundant and keep a zero-valued artificial.
    for r in range(m):
        if basis[r] >= art0:
            for j in range(art0):
                if abs(tableau[r, j]) > _PIVOT_TOL:
                    pivot = tableau[r, j]
                    tableau[r, :] /= pivot
                    for rr in range(m):
                        if rr != r and tableau[rr, j] != 0.0:
                            tableau[rr, :] -= tableau[rr, j] * tableau[r, :]
                    basis[r] = j
                    break

    allowed[art0:] = False
    phase2 = np.zeros(width - 1)
    phase2[:n] = c
    status = _bland_iterate(tableau, basis, phase2, allowed)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)

    x = np.zeros(n)
    for r, j in enumerate(basis):
        if j < n:
            x[j] = tableau[r, -1]
    # The artificial block started as the identity, so its final columns
    # are B^-1 and duals are c_B B^-1, re-signed for flipped rows.
    binv = tableau[:, art0 : art0 + m]
    duals = (phase2[basis] @ binv) * sign
    return LPResult(OPTIMAL, x, duals, float(c @ x))
