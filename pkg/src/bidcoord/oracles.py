"""Brute-force reference implementations for desk-scale validation.

Everything here favors obviousness over speed and stays independent of
the production solvers: payments are recomputed from first principles
where payments are the target, profile enumeration is local, and the
linear-programming gold standard runs on scipy rather than the in-repo
simplex.  Shared surface is limited to the core types and the
mechanisms module's allocation and expectation helpers.
"""

from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import AuctionInstance, BidProfile, ExternalDistribution, make_profile
from .mechanisms import RankedAgent, expected_outcome
from .wup import WupWeights

_EXTERNALITY_CAP = 20
_WUP_CAP = 10**6
_LL_COLUMN_CAP = 10**5


def vcg_externality(ranking: Sequence[RankedAgent], lambdas: Sequence[float]) -> list[float]:
    """VCG payments as literal externalities, with bid levels standing in
    for valuations: what the others gain if this agent disappears and
    everyone below shifts up one slot."""
    n = len(ranking)
    if n > _EXTERNALITY_CAP:
        raise ValueError(f"externality oracle capped at {_EXTERNALITY_CAP} agents")
    m = len(lambdas)
    levels = [a.bid.level for a in ranking]

    def welfare_of_others(excluded: int) -> float:
        total = 0.0
        slot = 0
        for k in range(n):
            if k == excluded:
                continue
            if slot < m:
                total += lambdas[slot] * levels[k]
                slot += 1
        return total

    pays = []
    for k in range(n):
        present = sum(lambdas[j] * levels[j] for j in range(min(n, m)) if j != k)
        pays.append(welfare_of_others(k) - present)
    return pays


def _weighted_order(instance: AuctionInstance, weights: WupWeights) -> list[int]:
    n = instance.n_colluders
    return sorted(
        range(n),
        key=lambda i: (-weights.revenue_weights[i] * instance.colluders[i].valuation, i),
    )


def _iter_assignments(levels: Sequence[float], n: int, priority: Sequence[int]):
    for assignment in itertools.product(sorted(set(levels)), repeat=n):
        yield make_profile(assignment, priority)


def _fixed_external(instance: AuctionInstance, external_levels: Sequence[float]) -> AuctionInstance:
    point_mass = ExternalDistribution(((tuple(sorted(external_levels, reverse=True)), 1.0),))
    return replace(instance, external=point_mass)


def brute_force_wup(
    grid_levels: Sequence[float],
    weights: WupWeights,
    instance: AuctionInstance,
    external_levels: Optional[Sequence[float]] = None,
) -> tuple[BidProfile, float]:
    """Exhaustive weighted-utility maximum over every level assignment,
    ordered or not; ties at equal levels rank the heavier-weighted
    colluder higher."""
    levels = sorted(set(grid_levels))
    n = instance.n_colluders
    if len(levels) ** n > _WUP_CAP:
        raise ValueError(f"assignment count exceeds {_WUP_CAP}")
    if external_levels is not None:
        instance = _fixed_external(instance, external_levels)
    order = _weighted_order(instance, weights)
    priority = [0] * n
    for pos, i in enumerate(order):
        priority[i] = pos
    best_profile = None
    best_value = float("-inf")
    y = weights.revenue_weights
    x = weights.payment_weight
    for profile in _iter_assignments(levels, n, priority):
        out = expected_outcome(instance, profile)
        value = sum(
            y[i] * out.revenue[i] - x * out.payment[i] for i in range(n)
        )
        if value > best_value:
            best_value = value
            best_profile = profile
    return best_profile, best_value


def brute_force_arbitrary(instance: AuctionInstance, grid_levels: Sequence[float]) -> float:
    """Best cumulative expected utility over all grid level assignments."""
    weights = WupWeights((1.0,) * instance.n_colluders, 1.0)
    _, value = brute_force_wup(grid_levels, weights, instance)
    return value


def _iter_columns(levels: Sequence[float], n: int):
    """Level assignments crossed with every tie ordering of equal levels."""
    for assignment in itertools.product(sorted(set(levels)), repeat=n):
        groups: dict[float, list[int]] = {}
        for i in range(n):
            groups.setdefault(assignment[i], []).append(i)
        tied = [g for g in groups.values() if len(g) > 1]
        if not tied:
            yield make_profile(assignment)
            continue
        for combo in itertools.product(*(itertools.permutations(g) for g in tied)):
            priority = list(range(n))
            for perm in combo:
                for pos, i in enumerate(perm):
                    priority[i] = pos
            yield make_profile(assignment, priority)


def brute_force_ll(
    instance: AuctionInstance, grid_levels: Sequence[float], p: float
) -> tuple[Optional[float], str]:
    """Gold-standard limited-liability value: the full master LP with every
    column materialized, solved by scipy's HiGHS backend.

    Returns (value, status) with status "optimal" or "infeasible".
    """
    n_c = instance.n_colluders
    profiles = []
    for profile in _iter_columns(grid_levels, n_c):
        profiles.append(profile)
        if len(profiles) > _LL_COLUMN_CAP:
            raise ValueError(f"column count exceeds {_LL_COLUMN_CAP}")
    outs = [expected_outcome(instance, prof) for prof in profiles]
    n_s = len(profiles)

    c = np.zeros(n_s + n_c)
    c[:n_s] = [-o.cumulative for o in outs]
    a_ub = np.zeros((n_c + 1, n_s + n_c))
    b_ub = np.zeros(n_c + 1)
    for i in range(n_c):
        a_ub[i, :n_s] = [-o.revenue[i] for o in outs]
        a_ub[i, n_s + i] = 1.0
        b_ub[i] = -(instance.colluders[i].outside_option - p)
    a_ub[n_c, :n_s] = [sum(o.payment) for o in outs]
    a_ub[n_c, n_s:] = -1.0
    a_eq = np.zeros((1, n_s + n_c))
    a_eq[0, :n_s] = 1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], method="highs")
    if res.status == 2:
        return None, "infeasible"
    if res.status != 0:
        raise RuntimeError(f"linprog failed with status {res.status}: {res.message}")
    return -float(res.fun), "optimal"


def best_deterministic_ll(
    instance: AuctionInstance, grid_levels: Sequence[float]
) -> Optional[float]:
    """Best single-profile value meeting the unrelaxed constraints.

    A lone profile is feasible iff every colluder's expected revenue
    covers its outside option and the headroom sums to at least the
    agency's expected payment.  Returns None when no profile qualifies.
    """
    best = None
    for profile in _iter_columns(grid_levels, instance.n_colluders):
        out = expected_outcome(instance, profile)
        headroom = [
            r - c.outside_option for r, c in zip(out.revenue, instance.colluders)
        ]
        if any(h < 0.0 for h in headroom):
            continue
        if sum(headroom) < sum(out.payment):
            continue
        value = out.cumulative
        if best is None or value > best:
            best = value
    return best
