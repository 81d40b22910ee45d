"""Exact stages, heuristics and the dispatcher.

Expected costs marked "oracle" were produced by ``brute_force_costs`` and
frozen here; the property tests re-derive them on random instances.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adpcq import (
    InfeasibleError,
    InternalInconsistency,
    KOutOfRangeError,
    QueryError,
    compute_adp,
    count_results,
    instance_from_rows,
    parse_query,
)
from adpcq.engine import delta_count
from adpcq.oracle import brute_force_costs, resilience
from adpcq.solver import (
    drastic_greedy_full,
    greedy_for_cq,
    linearize,
    min_cut,
    result_to_json,
    solve_boolean,
    solve_decompose,
    solve_singleton,
    solve_universe,
)
from adpcq.solver.base import curve_from_steps
from adpcq.solver.greedy import greedy_sequence

from shapes import corpus, easy_queries, hard_full_queries, seeded_instance, seeds

CHAIN = "Q() :- R1(A), R2(A,B), R3(B)"


def build(text, rows):
    q = parse_query(text)
    return q, instance_from_rows(q, rows)


class TestComputeAdp:
    def test_chain_example_k2(self, q1_instance):
        q, d = q1_instance
        res = compute_adp(q, d, 2, mode="report")
        assert res.cost == 1 and res.removed_outputs == 2
        assert res.removals == ((2, ("c3", "e3")),)
        assert not res.exact

    def test_chain_example_k1(self, q1_instance):
        assert compute_adp(*q1_instance, 1).cost == 1

    def test_chain_example_all_k(self, q1_instance):
        # oracle: [0, 1, 1, 2, 3]
        costs = [compute_adp(*q1_instance, k).cost for k in range(1, 5)]
        assert costs == [1, 1, 2, 3]

    def test_unary(self):
        q, d = build("Q(A) :- R1(A)", {"R1": ["a", "b", "c", "d"]})
        for k in range(1, 5):
            res = compute_adp(q, d, k)
            assert res.cost == k and res.exact and res.path == ("singleton",)

    def test_k_out_of_range(self, q1_instance):
        q, d = q1_instance
        for k in (0, 5):
            with pytest.raises(KOutOfRangeError):
                compute_adp(q, d, k)

    def test_empty_result(self):
        q, d = build("Q(A,B) :- R1(A), R2(A,B)", {"R1": ["a"], "R2": [("z", "b")]})
        with pytest.raises(KOutOfRangeError, match="empty"):
            compute_adp(q, d, 1)

    def test_bad_options(self, q1_instance):
        with pytest.raises(ValueError):
            compute_adp(*q1_instance, 1, mode="verbose")
        with pytest.raises(ValueError):
            compute_adp(*q1_instance, 1, heuristic="random")

    def test_paths(self):
        q, d = build("Q(F,G,H) :- R2(F,G), R5(G,H)",
                     {"R2": [("f1", "g1"), ("f2", "g1"), ("f1", "g2")],
                      "R5": [("g1", "h1"), ("g2", "h1"), ("g2", "h2")]})
        res = compute_adp(q, d, 2)
        assert res.path[0] == "universe" and "decompose" in res.path and res.exact

    def test_selection_path(self):
        q, d = build('Q(A,C) :- R1(A,B), R2(B,C) | R1.B = "b1"',
                     {"R1": [("a1", "b1"), ("a2", "b1"), ("a3", "b2")],
                      "R2": [("b1", "c1"), ("b1", "c2"), ("b2", "c3")]})
        res = compute_adp(q, d, 2, mode="report")
        assert res.path[0] == "selection" and res.exact
        assert res.cost == 1
        # lifted removals carry the selected constant again
        assert all(t[1] == "b1" or (rid == 1 and t[0] == "b1") for rid, t in res.removals)
        assert delta_count(q, d, res.removals) >= 2

    def test_json(self, q1_instance):
        q, d = q1_instance
        doc = result_to_json(q, compute_adp(q, d, 2, mode="report"))
        assert doc["cost"] == 1 and doc["removals"] == [
            {"relation": "R3", "tuple": {"C": "c3", "E": "e3"}}]
        assert "removals" not in result_to_json(q, compute_adp(q, d, 2))

    def test_drastic_request_on_projection_falls_back(self, q2_instance):
        q, d = q2_instance
        res = compute_adp(q, d, 2, heuristic="drastic")
        assert "greedy" in res.path and res.metadata["warnings"]


class TestBoolean:
    @pytest.mark.parametrize("rows,cost", [
        ({"R1": ["a1"], "R2": [("a1", "b1")], "R3": ["b1"]}, 1),
        ({"R1": ["a1", "a2"], "R2": [("a1", "b1"), ("a2", "b1")], "R3": ["b1"]}, 1),
        ({"R1": ["a1", "a2"], "R2": [("a1", "b1"), ("a2", "b2")], "R3": ["b1", "b2"]}, 2),
    ])
    def test_chain(self, rows, cost):
        q, d = build(CHAIN, rows)
        res = solve_boolean(q, d, mode="report")
        assert res.cost == cost and res.removed_outputs == 1
        assert count_results(q, d.without(res.removals)) == 0

    def test_single_relation_counts_live_tuples(self):
        q, d = build("Q() :- R1(A)", {"R1": ["a", "b", "c"]})
        assert solve_boolean(q, d).cost == 3

    def test_single_relation_ignores_dangling(self):
        q, d = build("Q() :- R1(A), R2(A,B)", {"R1": ["a", "z"], "R2": [("a", "b"), ("a", "c")]})
        assert solve_boolean(q, d).cost == 1

    def test_rejects_triad(self):
        with pytest.raises(QueryError):
            solve_boolean(*build("Q() :- R1(A,B), R2(B,C), R3(C,A)", {}))

    def test_linear_order(self):
        chain = linearize(parse_query("Q() :- R1(A), R2(A,B), R3(B,C), R4(C)"))
        order = [chain.order.index(r) for r in (0, 2, 3)]
        assert order == sorted(order) or order == sorted(order, reverse=True)

    def test_exogenous_relation_is_uncuttable(self):
        # R2 is exogenous; deleting its single tuple is never preferred
        q, d = build(CHAIN, {"R1": ["a1", "a2"], "R2": [("a1", "b1"), ("a2", "b1")], "R3": ["b1"]})
        cost, cut = min_cut(q, d)
        assert cost == 1 and cut == [(2, ("b1",))]

    @settings(max_examples=150)
    @given(st.sampled_from(["Q() :- R1(A), R2(A,B)", CHAIN,
                            "Q() :- R1(A), R2(A,B), R3(B,C), R4(C)",
                            "Q() :- R1(A,B), R2(B,C), R3(C,D)",
                            "Q() :- R1(A,B), R2(B,C)"]), seeds)
    def test_equals_resilience(self, text, seed):
        q = parse_query(text)
        d = seeded_instance(q, seed)
        if count_results(q, d) == 0:
            return
        assert solve_boolean(q, d).cost == resilience(q, d)


class TestSingleton:
    def test_pivot_below_head(self):
        q, d = build("Q(A,B) :- R1(A), R2(A,B)",
                     {"R1": ["a1", "a2"], "R2": [("a1", "b1"), ("a1", "b2"), ("a2", "b3")]})
        assert solve_singleton(q, d, 2).cost == 1
        assert solve_singleton(q, d, 3).cost == 2

    def test_head_inside_pivot(self):
        q, d = build("Q(A) :- R1(A,B)", {"R1": [("a1", "b1"), ("a1", "b2"), ("a2", "b3")]})
        res = solve_singleton(q, d, 1, mode="report")
        assert res.cost == 1 and res.removals == ((0, ("a2", "b3")),)
        assert solve_singleton(q, d, 2).cost == 3

    def test_requires_pivot(self):
        with pytest.raises(QueryError):
            solve_singleton(*build("Qpath(A,B) :- R1(A), R2(A,B), R3(B)", {}), 1)


UNIVERSE = ("Q(F,G,H) :- R2(F,G), R5(G,H)",
            {"R2": [("f1", "g1"), ("f2", "g1"), ("f1", "g2")],
             "R5": [("g1", "h1"), ("g2", "h1"), ("g2", "h2")]})
DECOMPOSE = ("Q(A,B) :- R1(A), R2(B)", {"R1": ["a1", "a2"], "R2": ["b1", "b2", "b3"]})


class TestCombiners:
    def test_universe(self):
        q, d = build(*UNIVERSE)
        res = solve_universe(q, d, 2, mode="report")
        assert res.cost == 1 and res.removed_outputs >= 2
        assert [solve_universe(q, d, k).cost for k in range(1, 5)] == [1, 1, 2, 2]  # oracle

    def test_universe_single_group(self):
        q, d = build("Q(A,B) :- R1(A,B), R2(A,C)",
                     {"R1": [("a", "1"), ("a", "2")], "R2": [("a", "x")]})
        assert solve_universe(q, d, 2).cost == compute_adp(q, d, 2).cost == 1

    def test_universe_rejects_vacuum(self):
        q, d = build("Q(A) :- R0(), R1(A)", {"R0": [()], "R1": ["a"]})
        with pytest.raises(QueryError):
            solve_universe(q, d, 1)

    def test_decompose(self):
        q, d = build(*DECOMPOSE)
        assert solve_decompose(q, d, 3).cost == 1
        assert solve_decompose(q, d, 4).cost == 2
        res = solve_decompose(q, d, 4, mode="report")
        assert delta_count(q, d, res.removals) >= 4

    def test_decompose_empty_component(self):
        q, d = build("Q(A,B) :- R1(A), R2(B)", {"R1": ["a"]})
        with pytest.raises(KOutOfRangeError):
            solve_decompose(q, d, 1)

    def test_decompose_rejects_connected(self):
        with pytest.raises(QueryError):
            solve_decompose(*build(CHAIN, {}), 1)

    def test_forced_rejects_selection(self):
        q, d = build('Q(A,B) :- R1(A), R2(B) | R1.A = "a1"', DECOMPOSE[1])
        with pytest.raises(QueryError):
            solve_decompose(q, d, 1)


class TestHeuristics:
    def test_greedy_chain_example(self, q1_instance):
        q, d = q1_instance
        res = greedy_for_cq(q, d, 2, mode="report")
        assert res.cost == 1 and not res.exact
        # R1(a2,b2) and R3(c3,e3) tie at profit 2; relation order decides
        assert res.removals == ((0, ("a2", "b2")),)

    def test_greedy_empties_result(self, q1_instance):
        q, d = q1_instance
        res = greedy_for_cq(q, d, 4, mode="report")
        assert count_results(q, d.without(res.removals)) == 0

    def test_greedy_sequence_gains(self, q1_instance):
        picks, gains, fallbacks = greedy_sequence(*q1_instance, 4)
        assert gains[0] == 2 and sum(gains) >= 4 and fallbacks == 0
        assert len(picks) == len(gains)

    def test_drastic_chain_example(self, q1_instance):
        q, d = q1_instance
        res = drastic_greedy_full(q, d, 2, mode="report")
        assert res.cost == 1 and res.removals == ((2, ("c3", "e3")),)
        # oracle: k=4 needs 3 deletions and so does the best single relation (R3)
        res = drastic_greedy_full(q, d, 4, mode="report")
        assert res.cost == 3 and {rid for rid, _ in res.removals} == {2}

    def test_drastic_k1(self, q1_instance):
        assert drastic_greedy_full(*q1_instance, 1).cost == 1

    def test_drastic_needs_full(self, q2_instance):
        with pytest.raises(QueryError):
            drastic_greedy_full(*q2_instance, 1)

    def test_drastic_single_witness(self):
        q, d = build("Q(A,B) :- R1(A), R2(A,B), R3(B)",
                     {"R1": ["a1"], "R2": [("a1", "b1")], "R3": ["b1"]})
        assert drastic_greedy_full(q, d, 1).cost == 1
        q, d = build("Q(A,B,C) :- R1(A,B), R2(B,C), R3(C,A)",
                     {"R1": [("a", "b")], "R2": [("b", "c")], "R3": [("c", "a")]})
        assert drastic_greedy_full(q, d, 1).cost == 1

    def test_drastic_error_type(self, q2_instance):
        from adpcq.solver.greedy import drastic_solution
        with pytest.raises(InfeasibleError):
            drastic_solution(*q2_instance, 1)

    def test_drastic_always_reaches_k(self):
        # deleting a whole endogenous relation empties a full query's result
        q, d = build("Q(A,B) :- R1(A), R2(B)", {"R1": ["a1", "a2"], "R2": ["b1"]})
        assert drastic_greedy_full(q, d, 2).cost == 1

    def test_triad_boolean_uses_greedy(self):
        q, d = build("Q() :- R1(A,B), R2(B,C), R3(C,A)",
                     {"R1": [("a", "b")], "R2": [("b", "c")], "R3": [("c", "a")]})
        res = compute_adp(q, d, 1)
        assert res.cost == 1 and res.path == ("greedy",) and not res.exact


def test_curve_from_steps():
    costs, removed = curve_from_steps([2, 1, 1], 4)
    assert list(costs) == [0, 1, 1, 2, 3]
    assert list(removed) == [0, 2, 2, 3, 4]


def test_heuristic_on_easy_query_is_inconsistent(monkeypatch, q1_instance):
    """The dispatcher refuses to report a heuristic answer for a poly-time query."""
    from adpcq.solver import dispatch
    q, d = build(*DECOMPOSE)
    monkeypatch.setattr(dispatch, "_stage_of", lambda q: "heuristic")
    with pytest.raises(InternalInconsistency):
        compute_adp(q, d, 1)


# -- properties -----------------------------------------------------------------

@settings(max_examples=200)
@given(easy_queries, seeds)
def test_exact_matches_oracle(q, seed):
    d = seeded_instance(q, seed)
    costs = brute_force_costs(q, d)
    for k in range(1, len(costs)):
        res = compute_adp(q, d, k)
        assert res.exact and res.cost == costs[k], (str(q), k)


@settings(max_examples=100)
@given(st.sampled_from([q for q in corpus(3) if len(q.body) == 3]), seeds)
def test_every_corpus_query_is_feasible(q, seed):
    """Exact answers equal the optimum; heuristic ones are feasible and no better."""
    d = seeded_instance(q, seed, max_tuples=9)
    costs = brute_force_costs(q, d)
    for k in range(1, len(costs)):
        res = compute_adp(q, d, k, mode="report")
        assert res.removed_outputs >= k
        assert delta_count(q, d, res.removals) == res.removed_outputs
        if res.exact:
            assert res.cost == costs[k]
        else:
            assert res.cost >= costs[k]


@settings(max_examples=100)
@given(hard_full_queries, seeds, st.sampled_from(["greedy", "drastic", "auto"]))
def test_heuristics_feasible_and_monotone(q, seed, heuristic):
    d = seeded_instance(q, seed)
    n = count_results(q, d)
    prev = 0
    for k in range(1, n + 1):
        res = compute_adp(q, d, k, mode="report", heuristic=heuristic)
        assert not res.exact and res.removed_outputs >= k
        assert delta_count(q, d, res.removals) == res.removed_outputs
        assert res.cost >= prev
        prev = res.cost


@settings(max_examples=100)
@given(hard_full_queries, seeds)
def test_greedy_log_bound(q, seed):
    d = seeded_instance(q, seed)
    costs = brute_force_costs(q, d)
    for k in range(1, len(costs)):
        assert greedy_for_cq(q, d, k).cost <= (1 + math.log(k)) * costs[k]


@settings(max_examples=100)
@given(hard_full_queries, seeds)
def test_auto_no_worse_than_greedy(q, seed):
    d = seeded_instance(q, seed)
    n = count_results(q, d)
    for k in range(1, n + 1):
        assert compute_adp(q, d, k).cost <= greedy_for_cq(q, d, k).cost
