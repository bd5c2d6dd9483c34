import itertools
import random

import pytest

import bidcoord as bc
from bidcoord.core import make_profile
from bidcoord.mechanisms import single_outcome
from bidcoord.oracles import brute_force_wup
from bidcoord.wup import (
    WupWeights,
    arc_weight_gsp,
    arc_weight_vcg,
    build_wup_graph,
    solve_graph,
    solve_wup_expected,
    solve_wup_fixed,
    unit_weights,
    wup_colluder_order,
)
from conftest import random_instance, random_levels


def make_instance(mechanism, slots, valuations, support=((),)):
    raw = {
        "mechanism": mechanism,
        "slots": list(slots),
        "colluders": [{"v": v, "t": 0.0} for v in valuations],
        "external": {"support": [{"bids": list(b), "prob": 1.0 / len(support)} for b in support]},
    }
    return bc.validate_and_normalize(raw)


class TestWeights:
    def test_nonnegativity_enforced(self):
        with pytest.raises(ValueError):
            WupWeights((-0.1,), 1.0)
        with pytest.raises(ValueError):
            WupWeights((1.0,), -1.0)

    def test_order_sorts_by_weighted_valuation(self):
        inst = make_instance("gsp", [1.0], [0.6, 0.5], support=((0.0,),))
        assert wup_colluder_order(inst, WupWeights((1.0, 2.0), 1.0)) == (1, 0)
        # ties broken by original index
        assert wup_colluder_order(inst, WupWeights((0.5, 0.6), 1.0)) == (0, 1)


class TestArcWeightGsp:
    def test_hand_evaluated_no_externals(self):
        inst = make_instance("gsp", [1.0, 0.9], [0.7, 0.4])
        w = unit_weights(2)
        got = arc_weight_gsp(1, 0.5, 0.2, (), w, inst)
        assert abs(got - 1.0 * (0.7 - 0.2)) < 1e-12

    def test_zero_payment_weight_gives_pure_revenue(self):
        inst = make_instance("gsp", [1.0, 0.9], [0.7, 0.4], support=((0.3,),))
        w = WupWeights((1.0, 1.0), 0.0)
        got = arc_weight_gsp(1, 0.5, 0.2, (0.3,), w, inst)
        assert abs(got - 1.0 * 0.7) < 1e-12

    def test_slot_beyond_last_is_worthless(self):
        inst = make_instance("gsp", [1.0], [0.7, 0.4], support=((0.3,),))
        w = unit_weights(2)
        # second colluder below one external: slot index 3 > m = 1
        assert arc_weight_gsp(2, 0.2, 0.0, (0.3,), w, inst) == 0.0


class TestArcWeightVcg:
    def test_first_colluder_has_no_upper_externality(self):
        inst = make_instance("vcg", [1.0, 0.5], [0.7, 0.4], support=((),))
        w = unit_weights(2)
        # no externals in (next, cur] either, so the weight is pure revenue
        got = arc_weight_vcg(1, 0.8, 0.0, (), w, inst)
        assert abs(got - 0.7) < 1e-12

    def test_empty_interval_no_external_terms(self):
        inst = make_instance("vcg", [1.0, 0.5], [0.7, 0.4], support=((0.9,),))
        w = unit_weights(2)
        # external above the bid: revenue shifts a slot, no interval terms
        got = arc_weight_vcg(1, 0.8, 0.5, (0.9,), w, inst)
        assert abs(got - 0.5 * 0.7) < 1e-12

    def test_path_sum_matches_mechanism(self):
        inst = make_instance("vcg", [1.0, 0.5], [0.9, 0.6], support=((0.4,),))
        w = unit_weights(2)
        total = arc_weight_vcg(1, 0.8, 0.2, (0.4,), w, inst) + arc_weight_vcg(
            2, 0.2, 0.0, (0.4,), w, inst
        )
        prof = make_profile([0.8, 0.2])
        out = single_outcome(inst, prof, (0.4,))
        ref = sum(out.colluder_revenue) - sum(out.colluder_payment)
        assert abs(total - ref) < 1e-9


class TestSolveFixed:
    def test_single_level_grid(self):
        inst = make_instance("gsp", [1.0, 0.5], [0.9, 0.6], support=((0.4,),))
        res = solve_wup_fixed([0.25], unit_weights(2), inst, (0.4,))
        assert res.profile.levels == (0.25, 0.25)
        out = single_outcome(inst, res.profile, (0.4,))
        assert abs(res.value - (sum(out.colluder_revenue) - sum(out.colluder_payment))) < 1e-9

    def test_example1_grid(self):
        inst = make_instance("vcg", [1.0], [0.6, 0.5], support=((0.0,),))
        res = solve_wup_fixed([0.6, 0.0], unit_weights(2), inst, (0.0,))
        assert abs(res.value - 0.6) < 1e-9
        assert res.profile.levels == (0.6, 0.0)
        assert res.profile.bids[0] > res.profile.bids[1]
        # exhaustive check over the three ordered profiles
        best = max(
            sum(single_outcome(inst, make_profile(list(levels)), (0.0,)).colluder_revenue)
            - sum(single_outcome(inst, make_profile(list(levels)), (0.0,)).colluder_payment)
            for levels in [(0.6, 0.6), (0.6, 0.0), (0.0, 0.0)]
        )
        assert abs(res.value - best) < 1e-9

    def test_random_matches_brute_force(self):
        rng = random.Random(101)
        for _ in range(60):
            inst = random_instance(rng)
            levels = random_levels(rng)
            y = tuple(rng.random() * 2 for _ in range(inst.n_colluders))
            w = WupWeights(y, rng.random() * 2)
            ext = inst.external.support[0][0]
            res = solve_wup_fixed(levels, w, inst, ext)
            _, best = brute_force_wup(levels, w, inst, ext)
            assert abs(res.value - best) < 1e-9

    def test_empty_grid_rejected(self):
        inst = make_instance("gsp", [1.0], [0.5], support=((),))
        with pytest.raises(ValueError):
            solve_wup_fixed([], unit_weights(1), inst, ())


class TestSolveExpected:
    def test_point_mass_equals_fixed(self):
        inst = make_instance("gsp", [1.0, 0.5], [0.9, 0.6], support=((0.4,),))
        w = unit_weights(2)
        exp = solve_wup_expected([0.0, 0.25, 0.5], w, inst)
        fix = solve_wup_fixed([0.0, 0.25, 0.5], w, inst, (0.4,))
        assert exp.value == fix.value
        assert exp.profile == fix.profile

    def test_mixture_arc_weights_are_convex_combinations(self):
        inst = make_instance("gsp", [1.0, 0.5], [0.9, 0.6], support=((0.2,), (0.8,)))
        w = unit_weights(2)
        levels = [0.0, 0.25, 0.5, 0.75]
        g = build_wup_graph(levels, w, inst)
        g_a = build_wup_graph(levels, w, inst, (0.2,))
        g_b = build_wup_graph(levels, w, inst, (0.8,))
        for pos in range(1):
            for jc in range(4):
                for jn in range(jc, 4):
                    mix = 0.5 * g_a.arcs[pos][jc][jn] + 0.5 * g_b.arcs[pos][jc][jn]
                    assert abs(g.arcs[pos][jc][jn] - mix) < 1e-12
        for jc in range(4):
            assert abs(g.sink[jc] - (0.5 * g_a.sink[jc] + 0.5 * g_b.sink[jc])) < 1e-12

    def test_random_matches_brute_force(self):
        rng = random.Random(202)
        for _ in range(60):
            inst = random_instance(rng)
            levels = random_levels(rng)
            y = tuple(rng.random() * 2 for _ in range(inst.n_colluders))
            w = WupWeights(y, rng.random() * 2)
            res = solve_wup_expected(levels, w, inst)
            _, best = brute_force_wup(levels, w, inst)
            assert abs(res.value - best) < 1e-9


class TestGraphProperties:
    def test_lemma_map_every_path(self):
        rng = random.Random(303)
        for _ in range(40):
            inst = random_instance(rng)
            n_c = inst.n_colluders
            levels = random_levels(rng)
            y = tuple(rng.random() * 2 for _ in range(n_c))
            w = WupWeights(y, rng.random() * 2)
            for ext, _ in inst.external.support:
                g = build_wup_graph(levels, w, inst, ext)
                for path in itertools.combinations_with_replacement(range(len(g.levels)), n_c):
                    prof = g.profile_for_path(path)
                    out = single_outcome(inst, prof, ext)
                    ref = sum(
                        y[i] * out.colluder_revenue[i] - w.payment_weight * out.colluder_payment[i]
                        for i in range(n_c)
                    )
                    assert abs(g.path_weight(path) - ref) < 1e-9

    def test_canonical_tie_priority_never_beaten(self):
        # among profiles sharing a level assignment, ranking the heavier
        # weighted-valuation colluder higher is optimal
        rng = random.Random(404)
        for _ in range(25):
            inst = random_instance(rng, max_colluders=3, max_external=2)
            n_c = inst.n_colluders
            levels = sorted({0.0, rng.random(), rng.random()})
            y = tuple(rng.choice([0.5, 1.0]) for _ in range(n_c))
            w = WupWeights(y, rng.random())
            res = solve_wup_expected(levels, w, inst)
            best_any = res.value
            for assignment in itertools.product(levels, repeat=n_c):
                for perm in itertools.permutations(range(n_c)):
                    priority = [0] * n_c
                    for pos, i in enumerate(perm):
                        priority[i] = pos
                    prof = make_profile(assignment, priority)
                    out = bc.expected_outcome(inst, prof)
                    val = sum(
                        y[i] * out.revenue[i] - w.payment_weight * out.payment[i]
                        for i in range(n_c)
                    )
                    assert val <= best_any + 1e-9

    def test_scaling_covariance(self):
        rng = random.Random(505)
        for _ in range(20):
            inst = random_instance(rng)
            levels = random_levels(rng)
            y = tuple(rng.random() for _ in range(inst.n_colluders))
            x = rng.random()
            c = rng.choice([0.5, 2.0, 7.5])
            base = solve_wup_expected(levels, WupWeights(y, x), inst)
            scaled = solve_wup_expected(
                levels, WupWeights(tuple(c * yi for yi in y), c * x), inst
            )
            assert abs(scaled.value - c * base.value) < 1e-9
            assert scaled.profile == base.profile

    def test_unit_weights_value_is_cumulative_utility(self):
        rng = random.Random(606)
        for _ in range(20):
            inst = random_instance(rng)
            levels = random_levels(rng)
            res = solve_wup_expected(levels, unit_weights(inst.n_colluders), inst)
            out = bc.expected_outcome(inst, res.profile)
            assert abs(res.value - out.cumulative) < 1e-9

    def test_solve_graph_deterministic(self):
        inst = make_instance("gsp", [1.0, 1.0], [0.5, 0.5], support=((0.0, 0.0),))
        g = build_wup_graph([0.0, 0.5], unit_weights(2), inst)
        v1, p1 = solve_graph(g)
        v2, p2 = solve_graph(g)
        assert v1 == v2 and p1 == p2
