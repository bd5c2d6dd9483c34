"""Weighted-utility bid optimization over a finite grid of bid levels.

The problem: choose one grid level per colluder maximizing
``sum_i y_i * revenue_i - x * payment_i`` with nonnegative weights.  Bid
profiles that are non-increasing along the y*v-sorted colluder order are
provably sufficient, which turns the search into a longest-path problem
on a layered DAG with one layer per colluder and one node per grid
level.  Arc weights account, per colluder, for that colluder's slice of
the mechanism's revenue and payment, given only the adjacent pair of bid
levels; the per-path sum then reproduces the full mechanism accounting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import GSP, VCG, AuctionInstance, BidProfile, make_profile

NEG_INF = float("-inf")


@dataclass(frozen=True)
class WupWeights:
    """Nonnegative revenue weights (one per colluder) and payment weight."""

    revenue_weights: tuple[float, ...]
    payment_weight: float

    def __post_init__(self):
        if any(y < 0.0 for y in self.revenue_weights):
            raise ValueError("revenue weights must be nonnegative")
        if self.payment_weight < 0.0:
            raise ValueError("payment weight must be nonnegative")


def unit_weights(n_colluders: int) -> WupWeights:
    """Weights that make the objective the plain cumulative utility."""
    return WupWeights((1.0,) * n_colluders, 1.0)


def wup_colluder_order(instance: AuctionInstance, weights: WupWeights) -> tuple[int, ...]:
    """Colluder indices sorted by weighted valuation descending, ties by index."""
    n = instance.n_colluders
    if len(weights.revenue_weights) != n:
        raise ValueError("one revenue weight per colluder required")
    return tuple(
        sorted(
            range(n),
            key=lambda i: (-weights.revenue_weights[i] * instance.colluders[i].valuation, i),
        )
    )


class _ExternalView:
    """Precomputed rank statistics of one fixed external bid profile."""

    def __init__(self, external_levels: Sequence[float], lambdas: Sequence[float], n_positions: int):
        self.desc = sorted(external_levels, reverse=True)
        self.n_e = len(self.desc)
        m = len(lambdas)

        def lam(j: int) -> float:
            return lambdas[j - 1] if 1 <= j <= m else 0.0

        self.lam = lam
        # prefix[i][h]: for the first h externals, the telescoping payment
        # terms they generate when exactly i colluders sit above them.
        self.prefix = [[0.0] * (self.n_e + 1) for _ in range(n_positions + 1)]
        for i in range(1, n_positions + 1):
            row = self.prefix[i]
            for h in range(1, self.n_e + 1):
                e = self.desc[h - 1]
                row[h] = row[h - 1] + e * (lam(h + i - 1) - lam(h + i))

    def count_above(self, level: float) -> int:
        """Externals strictly above a colluder bidding at this level."""
        c = 0
        for e in self.desc:
            if e > level:
                c += 1
            else:
                break
        return c

    def max_at_or_below(self, level: float) -> float:
        """Largest external level <= level (ties lose to colluders), 0 if none."""
        a = self.count_above(level)
        return self.desc[a] if a < self.n_e else 0.0


def _arc_weight(
    mechanism: str,
    i: int,
    level: float,
    next_level: float,
    view: _ExternalView,
    y: float,
    v: float,
    x: float,
    lambdas: Sequence[float],
) -> float:
    """Weight for the i-th ordered colluder bidding `level` with the next
    colluder at `next_level` (0 for the last colluder's sink arc)."""
    a = view.count_above(level)
    slot = i + a
    m = len(lambdas)
    lam_slot = lambdas[slot - 1] if slot <= m else 0.0
    if mechanism == GSP:
        price = max(next_level, view.max_at_or_below(level))
        return lam_slot * (y * v - x * price)
    rev = lam_slot * v
    g = 0.0 if i == 1 else (i - 1) * level * (view.lam(slot - 1) - lam_slot)
    # Externals in (next_level, level]: below this colluder, above the next.
    b = view.count_above(next_level)
    ell = i * (view.prefix[i][b] - view.prefix[i][a])
    return y * rev - x * (g + ell)


def arc_weight_gsp(
    i: int,
    level: float,
    next_level: float,
    external_levels: Sequence[float],
    weights: WupWeights,
    instance: AuctionInstance,
) -> float:
    """GSP weight of the arc where the i-th colluder (1-based, in the
    weighted-valuation order) bids `level` and the next bids `next_level`."""
    order = wup_colluder_order(instance, weights)
    c = order[i - 1]
    view = _ExternalView(external_levels, instance.slots, len(order))
    return _arc_weight(
        GSP,
        i,
        level,
        next_level,
        view,
        weights.revenue_weights[c],
        instance.colluders[c].valuation,
        weights.payment_weight,
        instance.slots,
    )


def arc_weight_vcg(
    i: int,
    level: float,
    next_level: float,
    external_levels: Sequence[float],
    weights: WupWeights,
    instance: AuctionInstance,
) -> float:
    """VCG counterpart of :func:`arc_weight_gsp`; the weight carries this
    colluder's revenue plus its slice of the agency's total payment."""
    order = wup_colluder_order(instance, weights)
    c = order[i - 1]
    view = _ExternalView(external_levels, instance.slots, len(order))
    return _arc_weight(
        VCG,
        i,
        level,
        next_level,
        view,
        weights.revenue_weights[c],
        instance.colluders[c].valuation,
        weights.payment_weight,
        instance.slots,
    )


@dataclass(frozen=True)
class WupGraph:
    """Layered DAG over descending grid levels.

    ``arcs[pos][j_cur][j_next]`` is the weight of the arc where the
    colluder at 0-based position ``pos`` of ``order`` takes level index
    ``j_cur`` and the next colluder takes ``j_next >= j_cur``;
    ``sink[j_cur]`` closes the path for the last colluder.
    """

    levels: tuple[float, ...]
    order: tuple[int, ...]
    arcs: tuple[tuple[tuple[float, ...], ...], ...]
    sink: tuple[float, ...]

    def arc_weight(self, pos: int, j_cur: int, j_next: int) -> float:
        if j_next < j_cur:
            raise ValueError("bid levels must be non-increasing along a path")
        return self.arcs[pos][j_cur][j_next]

    def path_weight(self, level_indices: Sequence[int]) -> float:
        """Total weight of the source-to-sink path through these level indices."""
        n = len(self.order)
        if len(level_indices) != n:
            raise ValueError("one level index per colluder required")
        total = 0.0
        for pos in range(n - 1):
            total += self.arc_weight(pos, level_indices[pos], level_indices[pos + 1])
        return total + self.sink[level_indices[-1]]

    def profile_for_path(self, level_indices: Sequence[int]) -> BidProfile:
        """Bid profile realizing a path, with ranks decreasing along it."""
        n = len(self.order)
        levels = [0.0] * n
        priority = [0] * n
        for pos, c in enumerate(self.order):
            levels[c] = self.levels[level_indices[pos]]
            priority[c] = pos
        return make_profile(levels, priority)


def _normalize_levels(grid_levels: Sequence[float]) -> tuple[float, ...]:
    levels = sorted(set(float(x) for x in grid_levels), reverse=True)
    if not levels:
        raise ValueError("empty bid grid")
    for lvl in levels:
        if not 0.0 <= lvl <= 1.0:
            raise ValueError(f"grid level {lvl!r} outside [0, 1]")
    return tuple(levels)


def _fixed_tables(
    levels: tuple[float, ...],
    order: tuple[int, ...],
    weights: WupWeights,
    instance: AuctionInstance,
    external_levels: Sequence[float],
) -> tuple[list[list[list[float]]], list[float]]:
    d = len(levels)
    n = len(order)
    view = _ExternalView(external_levels, instance.slots, n)
    mech = instance.mechanism
    x = weights.payment_weight
    arcs = [[[0.0] * d for _ in range(d)] for _ in range(max(n - 1, 0))]
    sink = [0.0] * d
    for pos in range(n):
        i = pos + 1
        c = order[pos]
        y = weights.revenue_weights[c]
        v = instance.colluders[c].valuation
        for jc in range(d):
            if pos == n - 1:
                sink[jc] = _arc_weight(mech, i, levels[jc], 0.0, view, y, v, x, instance.slots)
            else:
                row = arcs[pos][jc]
                for jn in range(jc, d):
                    row[jn] = _arc_weight(
                        mech, i, levels[jc], levels[jn], view, y, v, x, instance.slots
                    )
    return arcs, sink


def build_wup_graph(
    grid_levels: Sequence[float],
    weights: WupWeights,
    instance: AuctionInstance,
    external_levels: Optional[Sequence[float]] = None,
) -> WupGraph:
    """Build the layered graph, for one fixed external profile or, when
    ``external_levels`` is None, with arc weights in expectation."""
    levels = _normalize_levels(grid_levels)
    order = wup_colluder_order(instance, weights)
    d = len(levels)
    n = len(order)
    if external_levels is not None:
        arcs, sink = _fixed_tables(levels, order, weights, instance, external_levels)
    else:
        arcs = [[[0.0] * d for _ in range(d)] for _ in range(max(n - 1, 0))]
        sink = [0.0] * d
        for ext, prob in instance.external.support:
            part_arcs, part_sink = _fixed_tables(levels, order, weights, instance, ext)
            for pos in range(n - 1):
                for jc in range(d):
                    row = arcs[pos][jc]
                    part = part_arcs[pos][jc]
                    for jn in range(jc, d):
                        row[jn] += prob * part[jn]
            for jc in range(d):
                sink[jc] += prob * part_sink[jc]
    return WupGraph(
        levels,
        order,
        tuple(tuple(tuple(row) for row in layer) for layer in arcs),
        tuple(sink),
    )


def solve_graph(graph: WupGraph) -> tuple[float, tuple[int, ...]]:
    """Best path by forward DP over layers; O(n_c * d^2) arc lookups.

    Ties prefer the smaller level index (higher bid), so the result is
    deterministic for a fixed graph.
    """
    d = len(graph.levels)
    n = len(graph.order)
    value = [0.0] * d
    parents: list[list[int]] = []
    for pos in range(n - 1):
        layer = graph.arcs[pos]
        nxt = [NEG_INF] * d
        par = [0] * d
        for jn in range(d):
            best = NEG_INF
            best_jc = 0
            for jc in range(jn + 1):
                cand = value[jc] + layer[jc][jn]
                if cand > best:
                    best = cand
                    best_jc = jc
            nxt[jn] = best
            par[jn] = best_jc
        value = nxt
        parents.append(par)
    best = NEG_INF
    best_j = 0
    for j in range(d):
        cand = value[j] + graph.sink[j]
        if cand > best:
            best = cand
            best_j = j
    path = [best_j]
    for par in reversed(parents):
        path.append(par[path[-1]])
    path.reverse()
    return best, tuple(path)


@dataclass(frozen=True)
class WupResult:
    profile: BidProfile
    value: float
    order: tuple[int, ...]
    level_indices: tuple[int, ...]


def solve_wup_fixed(
    grid_levels: Sequence[float],
    weights: WupWeights,
    instance: AuctionInstance,
    external_levels: Sequence[float],
) -> WupResult:
    """Maximize the weighted utility against one fixed external profile."""
    graph = build_wup_graph(grid_levels, weights, instance, external_levels)
    value, path = solve_graph(graph)
    return WupResult(graph.profile_for_path(path), value, graph.order, path)


def solve_wup_expected(
    grid_levels: Sequence[float],
    weights: WupWeights,
    instance: AuctionInstance,
) -> WupResult:
    """Maximize the expected weighted utility over the external distribution."""
    graph = build_wup_graph(grid_levels, weights, instance, None)
    value, path = solve_graph(graph)
    return WupResult(graph.profile_for_path(path), value, graph.order, path)
