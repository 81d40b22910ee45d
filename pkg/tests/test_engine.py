"""Instances, CSV round trips, join evaluation and selection handling."""

import logging

import pytest
from hypothesis import given, settings

from adpcq import DataError, Instance, count_results, evaluate, instance_from_rows, parse_query
from adpcq.engine import (
    apply_selection,
    delta_count,
    dump_relation_csv,
    full_join,
    lift_removals,
    load_instance,
    load_relation_csv,
    partition_by,
    profit,
    reduce_dangling,
    removal_to_json,
    write_instance,
)
from adpcq.oracle import lineage

from shapes import CHAIN_ROWS, corpus_queries, seeded_instance, seeds


class TestCsv:
    def schema(self, text="Q(A,B) :- R1(A,B)"):
        return parse_query(text).body[0]

    def test_one_row(self):
        rows, dups = load_relation_csv(self.schema(), b"A,B\na1,b1\n")
        assert rows == {("a1", "b1")} and dups == 0

    def test_chain_example_r2(self):
        data = b"B,C\nb1,c1\nb2,c2\nb2,c3\nb3,c3\n"
        rows, _ = load_relation_csv(self.schema("Q(B,C) :- R2(B,C)"), data)
        assert len(rows) == 4

    def test_duplicates_collapse(self, caplog):
        with caplog.at_level(logging.WARNING):
            rows, dups = load_relation_csv(self.schema(), b"A,B\na1,b1\na1,b1\n")
        assert rows == {("a1", "b1")} and dups == 1
        assert "duplicate" in caplog.text

    def test_header_order_and_bom(self):
        rows, _ = load_relation_csv(self.schema(), b"\xef\xbb\xbfB,A\nb1,a1\r\n")
        assert rows == {("a1", "b1")}

    def test_header_only(self):
        rows, _ = load_relation_csv(self.schema(), b"A,B\n")
        assert rows == frozenset()

    def test_quoted_fields(self):
        rows, _ = load_relation_csv(self.schema(), b'A,B\n"a,1","b""2"\n')
        assert rows == {("a,1", 'b"2')}

    @pytest.mark.parametrize("data,fragment", [
        (b"A,C\na1,c1\n", "header"),
        (b"A,B\na1\n", "line 2"),
        (b"A,B\n\xff\xfe\n", "UTF-8"),
        (b"", "missing header"),
        (b"A,A\na,a\n", "header"),
    ])
    def test_errors(self, data, fragment):
        with pytest.raises(DataError, match=fragment):
            load_relation_csv(self.schema(), data)

    def test_vacuum(self):
        r = self.schema("Q() :- R0()")
        assert load_relation_csv(r, b"\n\n") == (frozenset({()}), 0)
        assert load_relation_csv(r, b"\n") == (frozenset(), 0)
        with pytest.raises(DataError):
            load_relation_csv(r, b"A\n")
        assert dump_relation_csv(r, {()}) == "\n\n"
        assert dump_relation_csv(r, set()) == "\n"

    def test_directory_round_trip(self, tmp_path, q1_instance):
        q, d = q1_instance
        write_instance(q, d, tmp_path)
        assert (tmp_path / "R1.csv").read_text() == "A,B\na1,b1\na2,b2\na3,b3\n"
        assert load_instance(q, tmp_path) == d

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="missing"):
            load_instance(parse_query("Q(A) :- R1(A)"), tmp_path)

    def test_vacuum_round_trip(self, tmp_path):
        q = parse_query("Q(A) :- R0(), R1(A)")
        d = instance_from_rows(q, {"R0": [()], "R1": [("a",)]})
        write_instance(q, d, tmp_path)
        assert load_instance(q, tmp_path) == d


class TestEvaluation:
    def test_chain_example_join(self, q1_instance):
        q, d = q1_instance
        assert full_join(q, d) == [("a1", "b1", "c1", "e1"), ("a2", "b2", "c2", "e3"),
                                   ("a2", "b2", "c3", "e3"), ("a3", "b3", "c3", "e3")]
        assert count_results(q, d) == 4

    def test_chain_example_projection(self, q2_instance):
        q, d = q2_instance
        assert evaluate(q, d) == {("a1", "e1"), ("a2", "e3"), ("a3", "e3")}
        assert count_results(q, d) == 3

    def test_empty_relation(self):
        q = parse_query("Q(A,B) :- R1(A), R2(A,B)")
        assert full_join(q, instance_from_rows(q, {"R1": [("a",)]})) == []

    def test_cross_product(self):
        q = parse_query("Q(A,B) :- R1(A), R2(B)")
        d = instance_from_rows(q, {"R1": ["1", "2"], "R2": ["x", "y", "z"]})
        assert len(full_join(q, d)) == 6 == count_results(q, d)

    def test_boolean(self):
        q = parse_query("Q() :- R1(A), R2(A,B)")
        d = instance_from_rows(q, {"R1": ["a"], "R2": [("a", "b")]})
        assert evaluate(q, d) == {()}
        assert count_results(q, d) == 1
        assert count_results(q, d.without([(0, ("a",))])) == 0

    def test_vacuum_gate(self):
        q = parse_query("Q(A) :- R0(), R1(A)")
        on = instance_from_rows(q, {"R0": [()], "R1": ["a", "b"]})
        assert count_results(q, on) == 2
        assert count_results(q, on.without([(0, ())])) == 0

    def test_instance_basics(self, q1_instance):
        q, d = q1_instance
        assert d.size == 10
        assert d[99] == frozenset()
        assert d.restrict(q) == d and hash(d) == hash(d.restrict(q))
        assert len(d.tuples(q)) == 10
        with pytest.raises(DataError):
            instance_from_rows(q, {"R1": [("a",)]})


class TestDangling:
    def test_chain_example_clean(self, q1_instance):
        q, d = q1_instance
        assert reduce_dangling(q, d) == d

    def test_removes_orphan(self):
        q = parse_query("Q1(A,B,C,E) :- R1(A,B), R2(B,C), R3(C,E)")
        rows = {k: list(v) for k, v in CHAIN_ROWS.items()}
        rows["R1"].append(("a9", "b9"))
        d = reduce_dangling(q, instance_from_rows(q, rows))
        assert ("a9", "b9") not in d[0] and len(d[0]) == 3

    def test_empty(self):
        q = parse_query("Q(A) :- R1(A)")
        assert reduce_dangling(q, Instance({0: set()}))[0] == frozenset()


class TestPartition:
    def setup_method(self):
        self.q = parse_query("Q(F,G,H) :- R2(F,G), R5(G,H)")
        self.d = instance_from_rows(self.q, {
            "R2": [("f1", "g1"), ("f2", "g1"), ("f1", "g2"), ("f3", "g3")],
            "R5": [("g1", "h1"), ("g2", "h1"), ("g2", "h2")]})

    def test_groups(self):
        parts = partition_by(self.q, self.d, ["G"])
        # g3 only occurs in R2 and therefore produces no result
        assert sorted(parts) == [("g1",), ("g2",)]
        assert parts[("g2",)][0] == {("f1", "g2")}

    def test_not_universal(self):
        with pytest.raises(DataError):
            partition_by(self.q, self.d, ["F"])

    def test_single_value(self):
        q = parse_query("Q(A,B) :- R1(A,B), R2(A)")
        d = instance_from_rows(q, {"R1": [("a", "1"), ("a", "2")], "R2": ["a"]})
        assert partition_by(q, d, ["A"]) == {("a",): d}


class TestSelection:
    def test_filter_then_project(self):
        q = parse_query('Q(A) :- R1(A,B) | R1.B = "x"')
        d = instance_from_rows(q, {"R1": [("a1", "x"), ("a2", "y")]})
        res, rd = apply_selection(q, d)
        assert [r.attrs for r in res.body] == [("A",)]
        assert rd[0] == {("a1",)}
        assert lift_removals(q, res, [(0, ("a1",))]) == [(0, ("a1", "x"))]

    def test_nothing_matches(self):
        q = parse_query('Q(A) :- R1(A,B) | R1.B = "z"')
        _, rd = apply_selection(q, instance_from_rows(q, {"R1": [("a1", "x")]}))
        assert rd[0] == frozenset()

    def test_fully_selected_becomes_vacuum(self):
        q = parse_query('Q(A) :- R1(A), R2(B) | R2.B = "x"')
        res, rd = apply_selection(q, instance_from_rows(q, {"R1": ["a"], "R2": ["x", "y"]}))
        assert res.rel(1).is_vacuum and rd[1] == {()}
        _, rd = apply_selection(q, instance_from_rows(q, {"R1": ["a"], "R2": ["y"]}))
        assert rd[1] == frozenset()

    def test_constant_spreads_to_join_partner(self):
        q = parse_query('Q(A,C) :- R1(A,B), R2(B,C) | R1.B = "b1"')
        d = instance_from_rows(q, {"R1": [("a", "b1"), ("a", "b2")],
                                   "R2": [("b1", "c"), ("b2", "c")]})
        res, rd = apply_selection(q, d)
        assert rd[1] == {("c",)}
        assert count_results(q, d) == count_results(res, rd) == 1

    def test_conflicting_constants(self):
        q = parse_query('Q(A) :- R1(A,B), R2(B) | R1.B = "x", R2.B = "y"')
        res, rd = apply_selection(q, instance_from_rows(q, {"R1": [("a", "x")], "R2": ["x", "y"]}))
        assert count_results(res, rd) == 0

    def test_merge_by_intersection(self):
        q = parse_query('Q(A) :- R1(A,B), R2(A,C) | R1.B = "b", R2.C = "c"')
        d = instance_from_rows(q, {"R1": [("a1", "b"), ("a2", "b")],
                                   "R2": [("a2", "c"), ("a3", "c")]})
        res, rd = apply_selection(q, d)
        assert res.ids == [0] and rd[0] == {("a2",)}
        assert evaluate(q, d) == {("a2",)}

    @settings(max_examples=200)
    @given(corpus_queries(), seeds)
    def test_count_matches_lineage(self, q, seed):
        """Selections counted via the residual agree with direct filtering."""
        d = seeded_instance(q, seed, domain=2)
        r = next((r for r in q.body if r.attrs), None)
        if r is not None:
            q = parse_query(str(q) + f' | {r.name}.{r.attrs[0]} = "{r.attrs[0].lower()}0"')
        assert count_results(q, d) == len(lineage(q, d).outputs)


class TestProfit:
    def test_chain_example(self, q1_instance):
        q, d = q1_instance
        assert profit(q, d, 2, ("c3", "e3")) == 2
        assert profit(q, d, 0, ("a1", "b1")) == 1
        assert delta_count(q, d, []) == 0
        assert delta_count(q, d, [(2, ("c3", "e3")), (0, ("a1", "b1"))]) == 3

    def test_dangling_tuple(self):
        q = parse_query("Q(A,B) :- R1(A), R2(A,B)")
        d = instance_from_rows(q, {"R1": ["a", "z"], "R2": [("a", "b")]})
        assert profit(q, d, 0, ("z",)) == 0

    def test_removal_json(self, q1_instance):
        q, _ = q1_instance
        assert removal_to_json(q, (2, ("c3", "e3"))) == {"relation": "R3", "tuple": {"C": "c3", "E": "e3"}}


@settings(max_examples=300)
@given(corpus_queries(), seeds)
def test_count_matches_independent_evaluation(q, seed):
    d = seeded_instance(q, seed)
    assert count_results(q, d) == len(lineage(q, d).outputs)
    assert evaluate(q, d) == set(lineage(q, d).outputs)


@settings(max_examples=200)
@given(corpus_queries(), seeds)
def test_dangling_reduction_preserves_results(q, seed):
    d = seeded_instance(q, seed)
    r = reduce_dangling(q, d)
    assert evaluate(q, r) == evaluate(q, d)
    for rel in q.body:
        assert r[rel.id] <= d[rel.id]
