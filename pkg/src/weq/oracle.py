"""Exhaustive reference decider.

Shares nothing with the search in :mod:`weq.decider` beyond term
preparation: cliques come from networkx on explicit graphs, and every
candidate relation is enumerated.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import chain, combinations, product

import networkx as nx

from .cograph import interpret
from .decider import Budget, BudgetExceeded, Inequality, Mode, expand_parallel, prepare
from .terms import Term, slices

__all__ = ["brute_force_decide", "graph_max_cliques"]


@lru_cache(maxsize=8192)
def _explicit(term: Term):
    """Vertex data plus maximal cliques (as bitmasks) found by networkx."""
    g = interpret(term)
    nxg = nx.Graph()
    nxg.add_nodes_from(g.vertices)
    nxg.add_edges_from(g.edges)
    index = {v: i for i, v in enumerate(g.vertices)}
    cliques = [sum(1 << index[v] for v in c) for c in graph_max_cliques(nxg)]
    coloured = sum(1 << i for i, v in enumerate(g.vertices) if g.colour[v] is not None)
    members = [[i for i in range(len(g.vertices)) if c >> i & 1] for c in cliques]
    return g, [c & coloured for c in cliques], members


def graph_max_cliques(nxg: nx.Graph) -> tuple[frozenset, ...]:
    return tuple(sorted((frozenset(c) for c in nx.find_cliques(nxg)), key=sorted))


def _powerset(items):
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


@lru_cache(maxsize=8192)
def _side_slices(term: Term, mode: Mode, lhs: bool = False) -> tuple[Term, ...]:
    t = prepare(term, mode)
    if lhs and mode is Mode.GENERAL:
        # every emptiness pattern of the parallel leaves up front
        t = expand_parallel(t)
    return tuple(slices(t))


@lru_cache(maxsize=1 << 16)
def _options(t: Term, col: str | None, par: bool, mode: Mode) -> tuple[int, ...]:
    """Candidate image sets in lhs slice ``t`` for an rhs vertex of colour
    ``col`` and flag ``par``, as bitmasks over lhs vertices."""
    if col is None:
        return (0,)
    g_l = _explicit(t)[0]
    cands = [i for i, y in enumerate(g_l.vertices)
             if g_l.colour[y] == col and g_l.parallel[y] <= par]
    if par:
        return tuple(sum(1 << i for i in s) for s in _powerset(cands))
    singles = tuple(1 << i for i in cands)
    return singles if mode is Mode.GENERAL else (0,) + singles


def _slice_pair_ok(t: Term, u: Term, mode: Mode, spent: list[int], budget: int) -> bool:
    _, targets, _ = _explicit(t)
    g_r, _, members = _explicit(u)
    opts = [_options(t, g_r.colour[x], g_r.parallel[x], mode) for x in g_r.vertices]
    count = 1
    for o in opts:
        count *= len(o)
    spent[0] += count
    if spent[0] > budget:
        raise BudgetExceeded(f"oracle candidate budget {budget} exceeded")
    for f in product(*opts):
        for mem in members:
            img = 0
            for i in mem:
                img |= f[i]
            miss = ~img
            for c in targets:
                if not c & miss:
                    break
            else:
                break
        else:
            return True
    return False


def brute_force_decide(ineq: Inequality, budget: Budget | None = None) -> bool:
    """Validity by enumerating every slice assignment and every relation."""
    limit = (budget or Budget.from_env()).oracle
    mode = Mode(ineq.mode)
    rhs_slices = _side_slices(ineq.rhs, mode)
    spent = [0]
    return all(
        any(_slice_pair_ok(t, u, mode, spent, limit) for u in rhs_slices)
        for t in _side_slices(ineq.lhs, mode, lhs=True)
    )
