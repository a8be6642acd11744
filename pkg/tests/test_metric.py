"""Quantitative engine: lifting, fixpoint distances, witnesses, formulas.

The probabilistic example system (weight shift eps = 1/8) has the
hand-computed distance table

    d(1,2) = 1/8          d(1,3) = d(1,6) = 1/2
    d(2,3) = d(2,6) = 5/8 d(3,6) = 0
    d(4,5) = d(4,7) = d(5,7) = 0
    d(u,v) = 1 for every terminating/non-terminating pair

reached exactly at the second iteration and confirmed at the third.
"""

import random
from fractions import Fraction

import pytest

from coalgame import (
    DistTable,
    MMinusQ,
    MModal,
    RefusalError,
    behavioural_distance,
    check_transfer_metric,
    defender_can_reply_metric,
    distance_formula_family,
    envelope,
    eval_metric_formula,
    hausdorff,
    lift_value,
    lift_witness,
    logical_distance,
    m_const,
    m_max,
    m_min,
    m_minus,
    m_neg,
    metric_formula_to_text,
    metric_modal_depth,
    oracle_intervals,
    parse_metric_formula,
    synthesize_metric_formula,
    value_radius,
)
from coalgame.metric import M_TOP
from helpers import perturbed_chain, labelled_tree, gauge, random_prob_system, random_system, truncated_tail

F = Fraction
ONE = F(1)

TERMINATING = {"4", "5", "7"}
RUNNING = {"1", "2", "3", "6"}

EXPECTED_PERTURBED_CHAIN = {
    ("1", "2"): F(1, 8),
    ("1", "3"): F(1, 2),
    ("1", "6"): F(1, 2),
    ("2", "3"): F(5, 8),
    ("2", "6"): F(5, 8),
    ("3", "6"): F(0),
    ("4", "5"): F(0),
    ("4", "7"): F(0),
    ("5", "7"): F(0),
}


def expected_perturbed_chain(x, y):
    if x == y:
        return F(0)
    if (x in TERMINATING) != (y in TERMINATING):
        return ONE
    key = (x, y) if (x, y) in EXPECTED_PERTURBED_CHAIN else (y, x)
    return EXPECTED_PERTURBED_CHAIN[key]


class TestHausdorff:
    COST = {
        ("a", "b"): F(1, 2),
        ("a", "c"): F(1),
        ("b", "c"): F(3, 4),
    }

    def _d(self, u, v):
        if u == v:
            return F(0)
        key = (u, v) if (u, v) in self.COST else (v, u)
        return self.COST[key]

    def test_empty_sets(self):
        assert hausdorff(self._d, [], [], ONE) == 0

    def test_empty_versus_nonempty_is_top(self):
        assert hausdorff(self._d, [], ["a"], ONE) == 1
        assert hausdorff(self._d, ["a"], [], F(2)) == 2

    def test_singletons(self):
        assert hausdorff(self._d, ["a"], ["b"], ONE) == F(1, 2)

    def test_asymmetric_cover(self):
        # {a,c} vs {a}: a covers a at 0, c must map to a at cost 1
        assert hausdorff(self._d, ["a", "c"], ["a"], ONE) == 1
        # {a,b} vs {b}: a maps to b at 1/2
        assert hausdorff(self._d, ["a", "b"], ["b"], ONE) == F(1, 2)

    def test_symmetry(self):
        rng = random.Random(11)
        pts = ["a", "b", "c"]
        for _ in range(50):
            left = [p for p in pts if rng.randrange(2)]
            right = [p for p in pts if rng.randrange(2)]
            assert hausdorff(self._d, left, right, ONE) == hausdorff(self._d, right, left, ONE)


class TestValueRadius:
    def test_probabilistic(self):
        sys_ = perturbed_chain()
        assert value_radius(sys_.expr, ONE, sys_.alpha["1"]) == 1
        assert value_radius(sys_.expr, ONE, sys_.alpha["4"]) == 1

    def test_pair_components(self):
        sys_ = gauge()
        # radius of (real r, S) is max(r, top if S nonempty else 0)
        assert value_radius(sys_.expr, F(2), sys_.alpha["idle"]) == 2
        assert value_radius(sys_.expr, F(2), sys_.alpha["done"]) == 2
        from coalgame import Pair, Real, SetOf

        assert value_radius(sys_.expr, F(2), Pair(Real(F(1, 2)), SetOf(()))) == F(1, 2)

    def test_empty_set_radius_zero(self):
        sys_ = labelled_tree()
        assert value_radius(sys_.expr, ONE, sys_.alpha["6"]) == 0


class TestLiftValue:
    def test_cross_side_pays_the_larger_radius(self):
        sys_ = perturbed_chain(F(1, 8))
        zero = lambda u, v: F(0)
        assert lift_value(sys_.expr, ONE, zero, sys_.alpha["1"], sys_.alpha["4"]) == 1

    def test_wasserstein_on_example(self):
        sys_ = perturbed_chain(F(1, 8))
        d1 = behavioural_distance(sys_).levels[1]
        got = lift_value(sys_.expr, ONE, d1.get, sys_.alpha["1"], sys_.alpha["2"])
        assert got == F(1, 8)

    def test_hausdorff_with_labels(self):
        sys_ = labelled_tree()
        zero = lambda u, v: F(0)
        # {(a,3),(a,4)} vs {(a,5)}: labels match, successors at distance 0
        assert lift_value(sys_.expr, ONE, zero, sys_.alpha["1"], sys_.alpha["2"]) == 0
        # {(b,6)} vs {(c,7)}: no label-respecting match, distance is top
        assert lift_value(sys_.expr, ONE, zero, sys_.alpha["3"], sys_.alpha["4"]) == 1

    def test_product_takes_max(self):
        sys_ = gauge()
        zero = lambda u, v: F(0)
        got = lift_value(sys_.expr, F(2), zero, sys_.alpha["idle"], sys_.alpha["busy"])
        assert got == F(3, 2)


class TestBehaviouralDistance:
    def test_example_table(self):
        sys_ = perturbed_chain(F(1, 8))
        res = behavioural_distance(sys_)
        for i, x in enumerate(sys_.states):
            for y in sys_.states[i + 1 :]:
                assert res.value(x, y) == expected_perturbed_chain(x, y), (x, y)
        assert res.certificate.kind == "stabilized-exact"
        assert res.certificate.iterations == 3
        assert res.certificate.error_bound is None

    def test_level_two_already_exact_on_the_pair(self):
        res = behavioural_distance(perturbed_chain(F(1, 8)))
        d2 = res.levels[2]
        assert d2.get("1", "2") == F(1, 8)
        assert d2.get("1", "3") == F(1, 2)
        assert d2.get("2", "3") == F(5, 8)

    def test_zero_shift_gives_zero_distance(self):
        res = behavioural_distance(perturbed_chain(F(0)))
        assert res.value("1", "2") == 0
        assert res.value("3", "6") == 0
        assert res.value("1", "4") == 1

    def test_equivalent_iff_distance_zero(self):
        from coalgame import behavioural_equivalence

        rng = random.Random(909090)
        for _ in range(25):
            sys_ = random_system(rng)
            eq = behavioural_equivalence(sys_)
            res = behavioural_distance(sys_)
            for i, x in enumerate(sys_.states):
                for y in sys_.states[i + 1 :]:
                    assert eq.equivalent(x, y) == (res.value(x, y) == 0), (x, y)

    def test_gauge_distances(self):
        res = behavioural_distance(gauge())
        assert res.value("idle", "busy") == 2
        assert res.value("idle", "done") == 2
        assert res.value("busy", "done") == 2
        assert res.certificate.iterations == 3

    def test_truncated_tail(self):
        for k in (2, 4):
            res = behavioural_distance(truncated_tail(k))
            assert res.value("x", "y") == F(1, 2**k)
            assert res.value("x1", "y0") == 0
            assert res.value("omega", "y0") == 1

    def test_discounted_fixpoint(self):
        res = behavioural_distance(perturbed_chain(F(1, 8)), discount=F(1, 2))
        assert res.value("1", "2") == F(1, 32)
        assert res.value("1", "4") == F(1, 2)
        assert res.value("3", "6") == 0
        assert res.value("1", "3") == F(1, 8)
        assert res.value("2", "3") == F(5, 32)
        assert res.certificate.kind == "stabilized-exact"

    def test_discounted_cap_reports_error_bound(self):
        res = behavioural_distance(perturbed_chain(F(1, 8)), discount=F(1, 2), max_iterations=2)
        assert res.certificate.kind == "contractive-bound"
        # top * c^(k+1) / (1 - c) with c = 1/2, k = 2
        assert res.certificate.error_bound == F(1, 4)

    def test_undiscounted_cap_is_only_a_lower_bound(self):
        res = behavioural_distance(perturbed_chain(F(1, 8)), max_iterations=1)
        assert res.certificate.kind == "iteration-capped"
        assert res.certificate.error_bound is None

    def test_bad_discount_rejected(self):
        with pytest.raises(ValueError):
            behavioural_distance(perturbed_chain(), discount=F(1))
        with pytest.raises(ValueError):
            behavioural_distance(perturbed_chain(), discount=F(0))

    def test_pseudometric_axioms_on_randoms(self):
        rng = random.Random(606)
        for _ in range(20):
            sys_ = random_system(rng)
            res = behavioural_distance(sys_)
            states = sys_.states
            for x in states:
                assert res.value(x, x) == 0
                for y in states:
                    assert res.value(x, y) == res.value(y, x)
                    assert 0 <= res.value(x, y) <= sys_.top
                    for z in states:
                        assert res.value(x, z) <= res.value(x, y) + res.value(y, z)


class TestLiftWitness:
    def test_example_witness_attains(self):
        sys_ = perturbed_chain(F(1, 8))
        d1 = behavioural_distance(sys_).levels[1]
        w = lift_witness(sys_, d1.get, sys_.alpha["1"], sys_.alpha["2"])
        assert w.value == F(1, 8)
        assert w.attained
        assert w.gamma == "exp.l"

    def test_cross_side_witness(self):
        sys_ = perturbed_chain(F(1, 8))
        zero = lambda u, v: F(0)
        w = lift_witness(sys_, zero, sys_.alpha["1"], sys_.alpha["4"])
        assert w.value == 1
        assert w.attained

    def test_witness_never_exceeds_lift(self):
        rng = random.Random(333)
        for _ in range(40):
            sys_ = random_system(rng)
            res = behavioural_distance(sys_)
            d = res.table
            for i, x in enumerate(sys_.states):
                for y in sys_.states[i + 1 :]:
                    w = lift_witness(sys_, d.get, sys_.alpha[x], sys_.alpha[y])
                    lift = lift_value(sys_.expr, sys_.top, d.get, sys_.alpha[x], sys_.alpha[y])
                    assert w.value <= lift
                    assert w.attained == (w.value == lift)

    def test_witness_function_is_nonexpansive_and_separates(self):
        # the witness value must be realized by evaluating its own data
        sys_ = perturbed_chain(F(1, 8))
        d1 = behavioural_distance(sys_).levels[1]
        w = lift_witness(sys_, d1.get, sys_.alpha["1"], sys_.alpha["2"])
        for u in sys_.states:
            for v in sys_.states:
                assert abs(w.f[u] - w.f[v]) <= d1.get(u, v)
        g = sys_.gamma_index[w.gamma]
        lhs = sys_.gamma_value(g, w.f, "1")
        rhs = sys_.gamma_value(g, w.f, "2")
        assert abs(lhs - rhs) == w.value


class TestMetricFormulas:
    def test_text_roundtrip(self):
        texts = [
            "T",
            "~T",
            "[exp.l]T",
            "(T - 1/4)",
            "min([exp.l]T, ~[term.r]T)",
            "~min(([exp.l]~T - 1/8), T)",
        ]
        for text in texts:
            f = parse_metric_formula(text)
            assert parse_metric_formula(metric_formula_to_text(f)) == f

    def test_smart_constructors_fold(self):
        v = MModal("exp.l", M_TOP)
        assert m_neg(m_neg(v)) == v
        assert m_minus(m_minus(v, F(1, 8)), F(1, 4)) == MMinusQ(v, F(3, 8))
        assert m_min([v]) == v
        assert m_min([]) == M_TOP

    def test_eval_basics(self):
        sys_ = perturbed_chain(F(1, 8))
        top_vals = eval_metric_formula(sys_, M_TOP)
        assert all(v == 1 for v in top_vals.values())
        term = MModal("term.r", M_TOP)
        vals = eval_metric_formula(sys_, term)
        assert vals["4"] == 1
        assert vals["1"] == 0
        exp = MModal("exp.l", term)
        vals = eval_metric_formula(sys_, exp)
        # expected mass of immediate termination
        assert vals["1"] == F(1, 2)
        assert vals["2"] == F(5, 8)
        assert vals["3"] == 0

    def test_eval_minus_and_neg(self):
        sys_ = perturbed_chain(F(1, 8))
        f = m_minus(MModal("exp.l", MModal("term.r", M_TOP)), F(1, 2))
        vals = eval_metric_formula(sys_, f)
        assert vals["1"] == 0
        assert vals["2"] == F(1, 8)
        neg_f = m_neg(MModal("term.r", M_TOP))
        vals = eval_metric_formula(sys_, neg_f)
        assert vals["4"] == 0
        assert vals["1"] == 1

    def test_const(self):
        sys_ = gauge()
        vals = eval_metric_formula(sys_, m_const(F(3, 4), sys_.top))
        assert all(v == F(3, 4) for v in vals.values())

    def test_max_by_de_morgan(self):
        sys_ = perturbed_chain(F(1, 8))
        a = MModal("exp.l", MModal("term.r", M_TOP))
        b = m_const(F(9, 16), ONE)
        vals = eval_metric_formula(sys_, m_max([a, b]))
        assert vals["1"] == F(9, 16)
        assert vals["2"] == F(5, 8)


class TestDistanceFormulaFamily:
    def test_example_family_is_exact(self):
        sys_ = perturbed_chain(F(1, 8))
        res = behavioural_distance(sys_)
        fam = distance_formula_family(sys_, res)
        for level in range(len(res.levels)):
            d_i = res.levels[level]
            for u in sys_.states:
                f = fam.levels[level][u]
                vals = eval_metric_formula(sys_, f)
                for w in sys_.states:
                    assert vals[w] == d_i.get(u, w), (level, u, w)

    def test_family_depth_bounded_by_level(self):
        sys_ = perturbed_chain(F(1, 8))
        res = behavioural_distance(sys_)
        fam = distance_formula_family(sys_, res)
        for level in range(len(res.levels)):
            for u in sys_.states:
                assert metric_modal_depth(fam.levels[level][u]) <= level

    def test_rejects_discounted_results(self):
        sys_ = perturbed_chain(F(1, 8))
        res = behavioural_distance(sys_, discount=F(1, 2))
        with pytest.raises(ValueError):
            distance_formula_family(sys_, res)


class TestMetricSynthesis:
    def test_example_pair_is_attained(self):
        sys_ = perturbed_chain(F(1, 8))
        synth = synthesize_metric_formula(sys_, "1", "2")
        assert synth is not None
        assert synth.distance == F(1, 8)
        assert synth.gap == F(1, 8)
        assert synth.attained
        vals = eval_metric_formula(sys_, synth.formula)
        assert abs(vals["1"] - vals["2"]) == F(1, 8)

    def test_zero_distance_returns_none(self):
        assert synthesize_metric_formula(perturbed_chain(F(0)), "1", "2") is None

    def test_logical_distance_matches_on_probabilistic_family(self):
        sys_ = perturbed_chain(F(1, 8))
        res = behavioural_distance(sys_)
        for x, y in [("1", "2"), ("1", "3"), ("2", "3"), ("3", "6"), ("1", "4")]:
            assert logical_distance(sys_, x, y, distance=res) == res.value(x, y)

    def test_logical_distance_random_probabilistic(self):
        # certificate formulas exist only for stabilised tables, so draws
        # whose iteration is still climbing at the cap are skipped
        rng = random.Random(101)
        done = 0
        for _ in range(60):
            if done == 10:
                break
            sys_ = random_prob_system(rng)
            res = behavioural_distance(sys_)
            if res.certificate.kind != "stabilized-exact":
                continue
            family = distance_formula_family(sys_, res)
            for i, x in enumerate(sys_.states):
                for y in sys_.states[i + 1 :]:
                    gap = logical_distance(sys_, x, y, distance=res, family=family)
                    assert gap == res.value(x, y)
            done += 1
        assert done == 10

    def test_logical_distance_is_sound_lower_bound_everywhere(self):
        rng = random.Random(2029)
        done = 0
        for _ in range(60):
            if done == 10:
                break
            sys_ = random_system(rng)
            res = behavioural_distance(sys_)
            if res.certificate.kind != "stabilized-exact":
                continue
            family = distance_formula_family(sys_, res)
            for i, x in enumerate(sys_.states):
                for y in sys_.states[i + 1 :]:
                    synth = synthesize_metric_formula(
                        sys_, x, y, distance=res, family=family
                    )
                    if synth is None:
                        assert res.value(x, y) == 0
                        continue
                    vals = eval_metric_formula(sys_, synth.formula)
                    assert abs(vals[x] - vals[y]) == synth.gap
                    assert synth.gap <= res.value(x, y)
            done += 1
        assert done == 10


class TestEnvelopeAndTransfer:
    def test_envelope_spreads_over_distance_zero_states(self):
        sys_ = perturbed_chain(F(1, 8))
        res = behavioural_distance(sys_)
        p2 = envelope(sys_, res.table.get, {"4": ONE})
        assert p2 == {
            "1": F(0), "2": F(0), "3": F(0),
            "4": ONE, "5": ONE, "7": ONE, "6": F(0),
        }

    def test_transfer_rows_for_the_worked_game_round(self):
        sys_ = perturbed_chain(F(1, 8))
        res = behavioural_distance(sys_)
        p1 = {"4": ONE}
        p2 = envelope(sys_, res.table.get, p1)
        check = check_transfer_metric(sys_, "1", p1, "2", p2, F(1, 8))
        assert check.ok
        by_gamma = {row.gamma: row for row in check.rows}
        assert by_gamma["exp.l"].lhs == F(1, 4)
        assert by_gamma["exp.l"].rhs == F(5, 8)
        assert by_gamma["term.r"].lhs == 0

    def test_transfer_tight_in_the_other_direction(self):
        sys_ = perturbed_chain(F(1, 8))
        res = behavioural_distance(sys_)
        p1 = {"7": ONE}
        p2 = envelope(sys_, res.table.get, p1)
        check = check_transfer_metric(sys_, "2", p1, "1", p2, F(1, 8))
        assert check.ok
        assert check.worst() == 0
        tight = check_transfer_metric(sys_, "2", p1, "1", p2, F(1, 16))
        assert not tight.ok

    def test_defender_can_reply_when_budget_covers(self):
        sys_ = perturbed_chain(F(1, 8))
        assert defender_can_reply_metric(sys_, "1", {"4": ONE}, "2", F(1, 8))
        assert defender_can_reply_metric(sys_, "2", {"7": ONE}, "1", F(1, 8))


class TestOracleIntervals:
    def test_fixpoint_lift_lands_in_every_interval(self):
        sys_ = perturbed_chain(F(1, 8))
        res = behavioural_distance(sys_)
        d = res.table
        # seven states force a coarse grid; the optimal predicates here
        # only take values 0, 1/2 and 1, so the lower end is still exact
        intervals = oracle_intervals(sys_, d.get, grid_steps=2)
        for (x, y), interval in intervals.items():
            value = lift_value(sys_.expr, sys_.top, d.get, sys_.alpha[x], sys_.alpha[y])
            assert interval.lower <= value <= interval.upper, (x, y)
            assert interval.contains(value)

    def test_lower_bound_improves_with_grid(self):
        # a finer grid only adds candidate certificate maps, so the lower
        # bound can only move up (the upper bound is not monotone in general)
        sys_ = gauge()
        res = behavioural_distance(sys_)
        coarse = oracle_intervals(sys_, res.table.get, grid_steps=2)
        fine = oracle_intervals(sys_, res.table.get, grid_steps=8)
        for key in coarse:
            assert fine[key].lower >= coarse[key].lower
            assert fine[key].lower <= fine[key].upper

    def test_refuses_oversized_state_spaces(self):
        sys_ = labelled_tree()  # nine states: the grid enumeration would explode
        res = behavioural_distance(sys_)
        with pytest.raises(RefusalError):
            oracle_intervals(sys_, res.table.get, grid_steps=8)


class TestDistTable:
    def test_symmetric_storage(self):
        t = DistTable(("a", "b"))
        t.set("a", "b", F(1, 2))
        assert t.get("b", "a") == F(1, 2)
        assert t.get("a", "a") == 0

    def test_equality_and_max_difference(self):
        t1 = DistTable(("a", "b"))
        t2 = DistTable(("a", "b"))
        assert t1 == t2
        t1.set("a", "b", F(1, 4))
        assert t1 != t2
        assert t1.max_difference(t2) == F(1, 4)
