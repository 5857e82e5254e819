import json
from itertools import chain, combinations

import networkx as nx
import pydot
import pytest
from hypothesis import given, strategies as st

from weq.cograph import (
    PGraph, clique_masks, contains_max_clique, export_dot, graph_json, interpret,
    is_cograph, max_cliques,
)
from weq.oracle import graph_max_cliques
from weq.terms import Meet, Prod, Var, normalize_star, parse_term

from strategies import terms

a, b, c, d = map(Var, "abcd")


def joinfree(max_leaves=10):
    return terms(join=False, max_leaves=max_leaves).map(normalize_star)


def to_nx(g: PGraph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(g.vertices)
    h.add_edges_from(g.edges)
    return h


def brute_contains(t, chosen) -> bool:
    g = interpret(t)
    return any(
        {v for v in m if g.colour[v] is not None} <= set(chosen)
        for m in graph_max_cliques(to_nx(g))
    )


def subsets(items):
    return chain.from_iterable(combinations(items, k) for k in range(len(items) + 1))


class TestInterpret:
    def test_meet(self):
        g = interpret(Meet(a, b))
        assert len(g.vertices) == 2 and not g.edges

    def test_prod(self):
        g = interpret(Prod(a, b))
        assert len(g.vertices) == 2 and len(g.edges) == 1

    def test_four_cycle(self):
        g = interpret(parse_term("(a & b) * (c & d)"))
        assert g.edges == {("LL", "RL"), ("LL", "RR"), ("LR", "RL"), ("LR", "RR")}

    def test_colours(self):
        g = interpret(parse_term("a * (b^ & 1)"))
        assert g.colour == {"L": "a", "RL": "b", "RR": None}
        assert g.parallel == {"L": 0, "RL": 1, "RR": 0}

    def test_rejects_join(self):
        with pytest.raises(ValueError):
            interpret(parse_term("a | b"))

    @given(joinfree(5), joinfree(5))
    def test_vertex_and_edge_counts(self, t, u):
        gt, gu = interpret(t), interpret(u)
        vt, vu, et, eu = len(gt.vertices), len(gu.vertices), len(gt.edges), len(gu.edges)
        gm, gp = interpret(Meet(t, u)), interpret(Prod(t, u))
        assert (len(gm.vertices), len(gm.edges)) == (vt + vu, et + eu)
        assert (len(gp.vertices), len(gp.edges)) == (vt + vu, et + eu + vt * vu)

    @given(joinfree())
    def test_is_cograph(self, t):
        assert is_cograph(interpret(t))


class TestCliques:
    def test_examples(self):
        assert max_cliques(Meet(a, b)) == {frozenset({"L"}), frozenset({"R"})}
        assert max_cliques(parse_term("(a & b) * c")) == {
            frozenset({"LL", "R"}), frozenset({"LR", "R"})}
        assert max_cliques(parse_term("a * b * c")) == {frozenset({"LL", "LR", "R"})}

    @given(joinfree())
    def test_term_recursion_matches_graph(self, t):
        assert max_cliques(t) == set(graph_max_cliques(to_nx(interpret(t))))

    @given(joinfree())
    def test_masks_match_cliques(self, t):
        g = interpret(t)
        index = {v: i for i, v in enumerate(g.vertices)}
        expect = {sum(1 << index[v] for v in m) for m in max_cliques(t)}
        assert set(clique_masks(t)) == expect


class TestContainsMaxClique:
    def test_examples(self):
        assert not contains_max_clique(Prod(a, b), {"L"})
        assert contains_max_clique(Meet(a, b), {"L"})
        t = parse_term("(a & b) * c")
        assert not contains_max_clique(t, {"LL", "LR"})
        assert contains_max_clique(t, {"LL", "R"})

    def test_uncoloured_vertices_are_free(self):
        assert contains_max_clique(parse_term("a * 1"), {"L"})

    @given(joinfree(6), st.data())
    def test_matches_brute_force(self, t, data):
        vs = interpret(t).vertices
        chosen = data.draw(st.sets(st.sampled_from(vs)) if vs else st.just(set()))
        assert contains_max_clique(t, chosen) == brute_contains(t, chosen)

    def test_exhaustive_small(self):
        t = parse_term("(a & b * 1) * (c & d^)")
        for chosen in subsets(interpret(t).vertices):
            assert contains_max_clique(t, chosen) == brute_contains(t, chosen)


def _graph(vertices, edges):
    return PGraph(tuple(vertices), frozenset(edges), {v: v for v in vertices}, {v: 0 for v in vertices})


class TestIsCograph:
    def test_p4(self):
        assert not is_cograph(_graph("abcd", [("a", "b"), ("b", "c"), ("c", "d")]))

    def test_four_cycle(self):
        assert is_cograph(_graph("abcd", [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")]))

    def test_p4_inside_larger_graph(self):
        edges = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("a", "e")]
        assert not is_cograph(_graph("abcde", edges))


class TestExport:
    def _parse(self, text):
        graphs = pydot.graph_from_dot_data(text)
        assert graphs, text
        return graphs[0]

    def test_single_vertex(self):
        g = self._parse(export_dot(interpret(a)))
        assert len(g.get_nodes()) == 1

    def test_one_edge(self):
        g = self._parse(export_dot(interpret(Prod(a, b))))
        assert len(g.get_edges()) == 1

    def test_empty(self):
        g = self._parse(export_dot(PGraph((), frozenset(), {}, {})))
        assert not g.get_nodes() and not g.get_edges()

    @given(joinfree(8))
    def test_dot_parses(self, t):
        gr = interpret(t)
        g = self._parse(export_dot(gr))
        assert len(g.get_nodes()) == len(gr.vertices)
        assert len(g.get_edges()) == len(gr.edges)

    @given(joinfree(6))
    def test_json(self, t):
        gr = interpret(t)
        doc = json.loads(graph_json(gr))
        assert [v["path"] for v in doc["vertices"]] == list(gr.vertices)
        assert {tuple(e) for e in doc["edges"]} == set(gr.edges)
