"""Join-free terms as coloured cographs with parallelization flags."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

from .terms import Meet, One, Prod, Star, Term, Var, is_join_free, is_star_normal, leaves

__all__ = [
    "PGraph", "interpret", "max_cliques", "clique_masks", "contains_max_clique",
    "is_cograph", "export_dot", "graph_json",
]


@dataclass(frozen=True)
class PGraph:
    """Finite coloured graph; vertices are occurrence paths in canonical order.

    ``colour[v] is None`` marks an uncoloured vertex (a 1 leaf).
    """

    vertices: tuple[str, ...]
    edges: frozenset[tuple[str, str]]
    colour: dict
    parallel: dict

    def __hash__(self):
        return hash((self.vertices, self.edges))

    def adjacent(self, u: str, v: str) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def neighbours(self, v: str) -> set[str]:
        out = set()
        for a, b in self.edges:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return out


def _check_pre(t: Term):
    if not is_join_free(t) or not is_star_normal(t):
        raise ValueError("interpret() needs a join-free term with stars on variables only")


def interpret(t: Term) -> PGraph:
    """Meet is disjoint union, product is disjoint union plus all cross edges."""
    _check_pre(t)
    colour, parallel = {}, {}
    for path, leaf in leaves(t):
        if isinstance(leaf, One):
            colour[path], parallel[path] = None, 0
        elif isinstance(leaf, Var):
            colour[path], parallel[path] = leaf.name, 0
        else:
            colour[path], parallel[path] = leaf.child.name, 1

    edges = set()

    def walk(s: Term, path: str) -> list[str]:
        if isinstance(s, (Var, One, Star)):
            return [path]
        left = walk(s.left, path + "L")
        right = walk(s.right, path + "R")
        if isinstance(s, Prod):
            edges.update((a, b) for a in left for b in right)
        return left + right

    vertices = tuple(walk(t, ""))
    return PGraph(vertices, frozenset(edges), colour, parallel)


def max_cliques(t: Term) -> frozenset[frozenset[str]]:
    """Maximal cliques of ``interpret(t)``, read off the term structure."""
    _check_pre(t)

    def rec(s: Term, path: str) -> list[frozenset[str]]:
        if isinstance(s, (Var, One, Star)):
            return [frozenset((path,))]
        left = rec(s.left, path + "L")
        right = rec(s.right, path + "R")
        if isinstance(s, Meet):
            return left + right
        return [a | b for a in left for b in right]

    return frozenset(rec(t, ""))


@lru_cache(maxsize=65536)
def clique_masks(t: Term, limit: int = 1 << 20) -> tuple[int, ...]:
    """Maximal cliques as bitmasks over the canonical vertex order.

    Raises OverflowError when more than ``limit`` cliques would be produced.
    """

    counter = [0]

    def rec(s: Term) -> list[int]:
        if isinstance(s, (Var, One, Star)):
            bit = 1 << counter[0]
            counter[0] += 1
            return [bit]
        left = rec(s.left)
        right = rec(s.right)
        if isinstance(s, Meet):
            out = left + right
        else:
            if len(left) * len(right) > limit:
                raise OverflowError("too many maximal cliques")
            out = [a | b for a in left for b in right]
        if len(out) > limit:
            raise OverflowError("too many maximal cliques")
        return out

    return tuple(rec(t))


def contains_max_clique(t: Term, chosen) -> bool:
    """Whether the vertex set ``chosen`` contains a maximal clique of ``t``.

    Uncoloured vertices are ignored: a 1 leaf always counts as covered.
    Runs in one pass over the term.
    """

    def rec(s: Term, path: str) -> bool:
        if isinstance(s, One):
            return True
        if isinstance(s, (Var, Star)):
            return path in chosen
        if isinstance(s, Meet):
            return rec(s.left, path + "L") or rec(s.right, path + "R")
        return rec(s.left, path + "L") and rec(s.right, path + "R")

    return rec(t, "")


def is_cograph(g: PGraph) -> bool:
    """True iff no four vertices induce a path."""
    adj = {v: set() for v in g.vertices}
    for a, b in g.edges:
        adj[a].add(b)
        adj[b].add(a)
    for quad in combinations(g.vertices, 4):
        degrees = sorted(len(adj[v].intersection(quad)) for v in quad)
        # three edges with degrees 1,1,2,2 is exactly an induced P4
        if degrees == [1, 1, 2, 2]:
            return False
    return True


def _dot_id(path: str) -> str:
    return f'"v{path}"'


def export_dot(g: PGraph, name: str = "G") -> str:
    lines = [f"graph {name} {{"]
    for v in g.vertices:
        c = g.colour[v]
        attrs = [f'label="{c if c is not None else "1"}"']
        if g.parallel[v]:
            attrs.append("peripheries=2")
        if c is None:
            attrs.append("style=dashed")
        lines.append(f"  {_dot_id(v)} [{', '.join(attrs)}];")
    for a, b in sorted(g.edges):
        lines.append(f"  {_dot_id(a)} -- {_dot_id(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_json(g: PGraph) -> str:
    doc = {
        "vertices": [
            {"path": v, "color": g.colour[v], "parallel": g.parallel[v]} for v in g.vertices
        ],
        "edges": [[a, b] for a, b in sorted(g.edges)],
    }
    return json.dumps(doc, sort_keys=True)
