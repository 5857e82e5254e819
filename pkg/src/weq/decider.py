"""Deciding ``t <= u`` over (pointed) degrees via combinatorial reductions.

A reduction from ``t`` to ``u`` picks, for every slice ``t'`` of ``t``, a slice
``s(t')`` of ``u`` and a relation from the vertices of ``s(t')`` to those of
``t'`` that is single-valued on non-parallelized vertices, respects colours
and parallelization flags, and sends every maximal clique of ``s(t')`` onto a
set containing a maximal clique of ``t'`` (uncoloured vertices aside).  In
general mode the relation must also be defined on every coloured
non-parallelized vertex.
"""

from __future__ import annotations

import json
import os
from collections import defaultdict
from dataclasses import astuple, dataclass
from enum import Enum
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import kernels
from .cograph import clique_masks, contains_max_clique, interpret, max_cliques
from .terms import (
    ONE, Join, One, Prod, Star, Term, Var, ac_key, contains_one, leaves, normalize_star,
    parse_term, prod_all, render_term, replace_at, simplify_one_pointed, slices, subterm,
    variables,
)

__all__ = [
    "Mode", "Inequality", "Budget", "BudgetExceeded", "MalformedWitness",
    "SliceReduction", "ReductionWitness", "Violation", "prepare", "expand_parallel", "decide_full",
    "decide_basic", "is_valid", "verify_witness", "witness_violations",
    "pointed_general_bridge", "parse_inequality",
]


class Mode(str, Enum):
    POINTED = "pointed"
    GENERAL = "general"


@dataclass(frozen=True)
class Inequality:
    lhs: Term
    rhs: Term
    mode: Mode = Mode.POINTED

    def __str__(self):
        op = "<=" if self.mode is Mode.GENERAL else "<=."
        return f"{render_term(self.lhs)} {op} {render_term(self.rhs)}"


def parse_inequality(text: str, mode: Mode | str = Mode.POINTED) -> Inequality:
    """Parse ``"t <= u"`` (``"t <=. u"`` is accepted too)."""
    if text.count("<=") != 1:
        raise ValueError("expected exactly one '<=' in the inequality")
    left, right = text.split("<=")
    if right.startswith("."):
        right = right[1:]
    return Inequality(parse_term(left), parse_term(right), Mode(mode))


class BudgetExceeded(RuntimeError):
    """The search gave up; the instance is neither proved valid nor invalid."""


class MalformedWitness(ValueError):
    pass


def _env_budget() -> dict:
    raw = os.environ.get("WEQ_BUDGET", "").strip()
    out = {}
    if not raw:
        return out
    for item in raw.split(","):
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in Budget.__dataclass_fields__:
            raise ValueError(f"WEQ_BUDGET: unknown budget {key!r}")
        out[key] = int(value)
    return out


@dataclass(frozen=True)
class Budget:
    vertices: int = 512        # per slice
    slices: int = 4096         # per side
    cliques: int = 1 << 17     # maximal cliques per slice
    nodes: int = 2_000_000     # search nodes per decision
    oracle: int = 10**7        # brute-force candidates

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) <= 0:
                raise ValueError(f"budget {name} must be positive")
        # used as a cache key on every call
        object.__setattr__(self, "_h", hash(astuple(self)))

    def __hash__(self) -> int:
        return self._h

    @classmethod
    def from_env(cls, **overrides) -> "Budget":
        if overrides:
            return cls(**{**_env_budget(), **overrides})
        return _default_budget(os.environ.get("WEQ_BUDGET", ""))


@lru_cache(maxsize=16)
def _default_budget(_raw: str) -> Budget:
    return Budget(**_env_budget())


# -- witnesses ---------------------------------------------------------------

@dataclass(frozen=True)
class SliceReduction:
    lhs_slice: Term
    rhs_slice: Term
    relation: tuple[tuple[str, str], ...]   # (rhs path, lhs path)


@dataclass(frozen=True)
class ReductionWitness:
    mode: Mode
    slices: tuple[SliceReduction, ...]

    def to_json(self) -> dict:
        return {
            "mode": self.mode.value,
            "slices": [
                {
                    "lhs_slice": render_term(s.lhs_slice),
                    "rhs_slice": render_term(s.rhs_slice),
                    "relation": [list(p) for p in s.relation],
                }
                for s in self.slices
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc) -> "ReductionWitness":
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            return cls(
                Mode(doc["mode"]),
                tuple(
                    SliceReduction(
                        parse_term(s["lhs_slice"]),
                        parse_term(s["rhs_slice"]),
                        tuple((str(a), str(b)) for a, b in s["relation"]),
                    )
                    for s in doc["slices"]
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedWitness(f"bad witness document: {exc}") from exc


def expand_parallel(t: Term) -> Term:
    """Rewrite every ``x^`` as ``1 | x * x^`` (an equality over all degrees)."""
    if isinstance(t, Star):
        return Join(ONE, Prod(t.child, t)) if isinstance(t.child, Var) else Star(expand_parallel(t.child))
    if isinstance(t, (Var, One)):
        return t
    return type(t)(expand_parallel(t.left), expand_parallel(t.right))


def prepare(t: Term, mode: Mode) -> Term:
    """Star normalization, then (pointed mode only) elimination of 1."""
    t = normalize_star(t)
    if mode is Mode.POINTED:
        t = simplify_one_pointed(t)
    return t


@lru_cache(maxsize=16384)
def _prepared_slices(t: Term, mode: Mode, budget: Budget) -> tuple[Term, ...]:
    t = prepare(t, mode)
    try:
        return slices(t, budget.slices)
    except OverflowError as exc:
        raise BudgetExceeded(str(exc)) from None


# Over all degrees an instance of x^ may be the empty list, and a reduction
# may then pick a different rhs slice.  A general-mode lhs slice that has no
# reduction is therefore split on its first unsplit parallel leaf into
# x^ := 1 and x^ := x * x^, recursively.  Splitting a slice that already has
# a reduction is never needed: both halves inherit one.

@lru_cache(maxsize=16384)
def _parallel_paths(t: Term, mode: Mode) -> tuple[str, ...]:
    if mode is Mode.POINTED:
        return ()
    return tuple(p for p, s in leaves(t) if isinstance(s, Star))


def _refine(t: Term, paths: tuple[str, ...], choice: str) -> Term:
    for p, c in zip(paths, choice):
        if c == "0":
            t = replace_at(t, p, ONE)
        elif c == "+":
            x = subterm(t, p)
            t = replace_at(t, p, Prod(x.child, x))
    return t


def _split_tree(t: Term, mode: Mode, stop) -> bool:
    """Walk the split tree of ``t`` depth first; ``stop(s)`` says whether the
    refined slice ``s`` is settled.  True iff every branch gets settled."""
    paths = _parallel_paths(t, mode)

    def walk(choice: str) -> bool:
        if stop(_refine(t, paths, choice)):
            return True
        i = choice.find("*")
        if i < 0:
            return False
        return walk(choice[:i] + "0" + choice[i + 1:]) and walk(choice[:i] + "+" + choice[i + 1:])

    return walk("*" * len(paths))


# -- per-slice preprocessing -------------------------------------------------

class _Slice:
    """Vertex data of a join-free, star-normal term, indexed canonically."""

    __slots__ = ("term", "paths", "colour", "par", "cliques", "coloured", "twin",
                 "groups", "clique_groups", "by_colour", "degree", "targets", "target_list", "wide")

    def __init__(self, term: Term, budget: Budget):
        self.term = term
        g = interpret(term)
        if len(g.vertices) > budget.vertices:
            raise BudgetExceeded(f"slice with more than {budget.vertices} vertices")
        self.paths = g.vertices
        self.colour = tuple(g.colour[v] for v in g.vertices)
        self.par = tuple(g.parallel[v] for v in g.vertices)
        try:
            self.cliques = clique_masks(term, budget.cliques)
        except OverflowError:
            raise BudgetExceeded(f"slice with more than {budget.cliques} maximal cliques") from None
        self.coloured = sum(1 << i for i, c in enumerate(self.colour) if c is not None)
        index = {p: i for i, p in enumerate(self.paths)}
        deg = [0] * len(self.paths)
        for a, b in g.edges:
            deg[index[a]] += 1
            deg[index[b]] += 1
        self.degree = tuple(deg)
        self.twin, true_twins = _twin_classes(term, index, self.colour, self.par)
        self.wide = len(self.paths) > kernels.MAX_BITS
        self.target_list = sorted({c & self.coloured for c in self.cliques})
        self.targets = None if self.wide else np.array(self.target_list, dtype=np.int64)

        # as the reducing side: coloured product-sibling groups, most connected first
        groups = [g for g in true_twins if self.colour[g[0]] is not None]
        groups.sort(key=lambda g: (-deg[g[0]], self.paths[g[0]]))
        self.groups = tuple((tuple(g), self.colour[g[0]], self.par[g[0]]) for g in groups)
        group_of = {v: k for k, g in enumerate(groups) for v in g}
        self.clique_groups = tuple(dict.fromkeys(
            tuple(sorted({group_of[v] for v in _bits(c) if v in group_of})) for c in self.cliques
        ))

        # as the reduced side: candidate targets per colour, (flag-0 only, any flag)
        by_colour: dict[str, tuple[list[int], list[int]]] = {}
        for y, c in enumerate(self.colour):
            if c is not None:
                flat, every = by_colour.setdefault(c, ([], []))
                every.append(y)
                if not self.par[y]:
                    flat.append(y)
        self.by_colour = by_colour


def _twin_classes(term, index, colour, par):
    """Group leaves that are siblings under one flattened meet or product node
    and carry the same colour and flag.  Swapping two such leaves is a graph
    automorphism.  Returns (class id per vertex, product-sibling groups)."""
    twin = [0] * len(index)
    true_groups: list[list[int]] = []
    next_id = [0]

    def leaf(s):
        return isinstance(s, (Var, One, Star))

    def walk(s, path):
        if leaf(s):
            twin[index[path]] = next_id[0]
            next_id[0] += 1
            true_groups.append([index[path]])
            return
        kind = type(s)
        members: list[tuple[Term, str]] = []

        def collect(n, p):
            if type(n) is kind:
                collect(n.left, p + "L")
                collect(n.right, p + "R")
            else:
                members.append((n, p))

        collect(s, path)
        groups = defaultdict(list)
        for n, p in members:
            if leaf(n):
                i = index[p]
                groups[(colour[i], par[i])].append(i)
            else:
                walk(n, p)
        for key in sorted(groups, key=lambda k: (k[0] is None, k[0] or "", k[1])):
            ids = groups[key]
            for i in ids:
                twin[i] = next_id[0]
            next_id[0] += 1
            if kind is Prod:
                true_groups.append(ids)
            else:
                true_groups.extend([i] for i in ids)

    walk(term, "")
    return tuple(twin), [sorted(g) for g in true_groups]


@lru_cache(maxsize=8192)
def _slice_info(term: Term, budget: Budget) -> _Slice:
    return _Slice(term, budget)


# -- search ------------------------------------------------------------------

# below this many mask tests, kernel dispatch costs more than it saves
_KERNEL_MIN_WORK = 64


def _uncovered(images: list[int], lhs: _Slice) -> int:
    if lhs.wide or len(images) * len(lhs.target_list) < _KERNEL_MIN_WORK:
        return kernels.first_uncovered_py(images, lhs.target_list)
    return kernels.first_uncovered(np.array(images, dtype=np.int64), lhs.targets)


def _mask(items) -> int:
    m = 0
    for i in items:
        m |= 1 << i
    return m


def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


class _Search:
    def __init__(self, lhs: _Slice, rhs: _Slice, mode: Mode, budget: Budget, counter: list[int]):
        self.lhs, self.rhs, self.mode, self.budget, self.counter = lhs, rhs, mode, budget, counter

    def run(self) -> dict[int, list[int]] | None:
        """Return rhs vertex -> list of lhs vertices, or None if impossible."""
        lhs, rhs = self.lhs, self.rhs
        general = self.mode is Mode.GENERAL
        fixed: dict[int, int] = {}
        choice: list[tuple[tuple[int, ...], list[int], int]] = []   # (rhs vertices, cands, m)
        slot: dict[int, int] = {}
        for gi, (g, col, p) in enumerate(rhs.groups):
            flat, every = lhs.by_colour.get(col, ((), ()))
            if p:
                fixed[gi] = _mask(every)
            elif not flat:
                if general:
                    return None
                fixed[gi] = 0
            else:
                slot[gi] = len(choice)
                choice.append((g, flat, min(len(g), len(flat))))

        # each rhs clique: fixed part of its image, and the choice groups in it
        seen: dict[tuple[int, tuple[int, ...]], None] = {}
        for cg in rhs.clique_groups:
            base = 0
            ks = []
            for gi in cg:
                k = slot.get(gi)
                if k is None:
                    base |= fixed[gi]
                else:
                    ks.append(k)
            seen[(base, tuple(ks))] = None
        self.base = [b for b, _ in seen]
        self.members = [ks for _, ks in seen]
        by_group: list[list[int]] = [[] for _ in choice]
        for i, ks in enumerate(self.members):
            for k in ks:
                by_group[k].append(i)
        self.by_group = by_group
        self.cands_mask = [_mask(c) for _, c, _ in choice]
        self.choice = choice
        self.image = list(self.cands_mask)      # optimistic until assigned
        self.sig = [0] * len(lhs.paths)

        if _uncovered([self._optimistic(i) for i in range(len(self.base))], lhs) >= 0:
            return None
        if not self._descend(0):
            return None
        result: dict[int, list[int]] = {}
        for gi, img in fixed.items():
            targets = _bits(img)
            if targets:
                for v in rhs.groups[gi][0]:
                    result[v] = targets
        for k, (g, _, _) in enumerate(choice):
            targets = _bits(self.image[k])
            for j, v in enumerate(g):
                result[v] = [targets[min(j, len(targets) - 1)]]
        return result

    def _optimistic(self, i: int) -> int:
        img = self.base[i]
        for k in self.members[i]:
            img |= self.image[k]
        return img

    def _subsets(self, k: int):
        """Canonical target sets for choice group k, up to lhs symmetry."""
        _, cands, m = self.choice[k]
        if m == 1:
            seen = set()
            for y in cands:
                key = (self.lhs.twin[y], self.sig[y])
                if key not in seen:
                    seen.add(key)
                    yield 1 << y
            return
        buckets: dict[tuple[int, int], list[int]] = {}
        for y in cands:
            buckets.setdefault((self.lhs.twin[y], self.sig[y]), []).append(y)
        pools = list(buckets.values())
        picked: list[int] = []

        def rec(j: int, left: int):
            if left == 0:
                yield sum(1 << y for y in picked)
                return
            if j == len(pools):
                return
            rest = sum(len(p) for p in pools[j + 1:])
            for take in range(min(left, len(pools[j])), max(0, left - rest) - 1, -1):
                picked.extend(pools[j][:take])
                yield from rec(j + 1, left - take)
                del picked[len(picked) - take:]

        yield from rec(0, m)

    def _descend(self, k: int) -> bool:
        if k == len(self.choice):
            return True
        affected = self.by_group[k]
        for subset in self._subsets(k):
            self.counter[0] += 1
            if self.counter[0] > self.budget.nodes:
                raise BudgetExceeded(f"search exceeded {self.budget.nodes} nodes")
            self.image[k] = subset
            if _uncovered([self._optimistic(i) for i in affected], self.lhs) >= 0:
                continue
            bit = 1 << k
            for y in _bits(subset):
                self.sig[y] |= bit
            if self._descend(k + 1):
                return True
            for y in _bits(subset):
                self.sig[y] &= ~bit
        self.image[k] = self.cands_mask[k]
        return False


def _reduce_slice(lhs: Term, rhs: Term, mode: Mode, budget: Budget, counter) -> tuple | None:
    L, R = _slice_info(lhs, budget), _slice_info(rhs, budget)
    found = _Search(L, R, mode, budget, counter).run()
    if found is None:
        return None
    return tuple(
        (R.paths[x], L.paths[y]) for x in sorted(found) for y in found[x]
    )


def _ac_leaves(t: Term, path: str = "") -> list[tuple[str, Term]]:
    """Leaves in an order that only depends on the AC class of ``t``."""
    if isinstance(t, (Var, One, Star)):
        return [(path, t)]
    kind = type(t)
    items = []
    stack = [(t, path)]
    while stack:
        s, p = stack.pop()
        if type(s) is kind:
            stack.append((s.right, p + "R"))
            stack.append((s.left, p + "L"))
        else:
            items.append((ac_key(s), s, p))
    items.sort(key=lambda it: it[0])
    return [leaf for _, s, p in items for leaf in _ac_leaves(s, p)]


def _ac_identity(lhs: Term, rhs: Term) -> tuple[tuple[str, str], ...]:
    pairs = zip(_ac_leaves(rhs), _ac_leaves(lhs))
    return tuple(sorted((x, y) for (x, leaf), (y, _) in pairs if not isinstance(leaf, One)))


def decide_full(ineq: Inequality, budget: Budget | None = None) -> ReductionWitness | None:
    """Return a reduction witness when ``ineq`` is valid, else None.

    Raises BudgetExceeded when the instance is too large to settle.  An rhs
    slice equal to the lhs slice up to associativity and commutativity is
    taken first, with the matching identity relation; otherwise rhs slices are
    tried in canonical order.  Either way the witness is deterministic.
    """
    budget = budget or Budget.from_env()
    mode = Mode(ineq.mode)
    ls, rs = _prepared_slices(ineq.lhs, mode, budget), _prepared_slices(ineq.rhs, mode, budget)
    twins = {}
    for u in rs:
        twins.setdefault(ac_key(u), u)
    counter = [0]
    parts: dict[Term, SliceReduction] = {}

    def settle(t: Term) -> bool:
        if t in parts:
            return True
        if len(parts) >= budget.slices:
            raise BudgetExceeded(f"more than {budget.slices} refined lhs slices")
        u = twins.get(ac_key(t))
        if u is not None:
            parts[t] = SliceReduction(t, u, _ac_identity(t, u))
            return True
        for u in rs:
            rel = _reduce_slice(t, u, mode, budget, counter)
            if rel is not None:
                parts[t] = SliceReduction(t, u, rel)
                return True
        return False

    for t in ls:
        if not _split_tree(t, mode, settle):
            return None
    return ReductionWitness(mode, tuple(parts.values()))


def is_valid(lhs: Term | str, rhs: Term | str, mode: Mode | str = Mode.POINTED,
             budget: Budget | None = None) -> bool:
    if isinstance(lhs, str):
        lhs = parse_term(lhs)
    if isinstance(rhs, str):
        rhs = parse_term(rhs)
    return decide_full(Inequality(lhs, rhs, Mode(mode)), budget) is not None


def _basic_fragment(t: Term) -> bool:
    if isinstance(t, (Var, One)):
        return True
    if isinstance(t, (Star, Join)):
        return False
    return _basic_fragment(t.left) and _basic_fragment(t.right)


def decide_basic(ineq: Inequality, budget: Budget | None = None) -> dict[str, str | None] | None:
    """Meet/product/1 inequalities: return the vertex map rhs -> lhs, or None.

    Uncoloured and unmapped vertices map to None.
    """
    if not (_basic_fragment(ineq.lhs) and _basic_fragment(ineq.rhs)):
        raise ValueError("decide_basic takes terms over meet, product and 1 only")
    budget = budget or Budget.from_env()
    mode = Mode(ineq.mode)
    rel = _reduce_slice(ineq.lhs, ineq.rhs, mode, budget, [0])
    if rel is None:
        return None
    out: dict[str, str | None] = {p: None for p in interpret(ineq.rhs).vertices}
    out.update(dict(rel))
    return out


# -- checking ----------------------------------------------------------------

class Violation(NamedTuple):
    slice_index: int
    condition: str      # "single-valued", "colour", "parallel", "total" or "clique"
    detail: str


def witness_violations(ineq: Inequality, w: ReductionWitness) -> list[Violation]:
    """Every failed reduction condition; empty iff the witness is correct.

    Raises MalformedWitness for structural problems (unknown paths, slices
    that do not belong to the terms, missing or duplicated lhs slices).
    """
    mode = Mode(ineq.mode)
    if Mode(w.mode) is not mode:
        raise MalformedWitness("witness mode does not match the inequality")
    ls, rs = slices(prepare(ineq.lhs, mode)), slices(prepare(ineq.rhs, mode))
    given = [s.lhs_slice for s in w.slices]
    if len(set(given)) != len(given):
        raise MalformedWitness("an lhs slice occurs twice")
    used: set[Term] = set()

    def settled(s: Term) -> bool:
        if s in given:
            used.add(s)
            return True
        return False

    for t in ls:
        if not _split_tree(t, mode, settled):
            raise MalformedWitness(f"lhs slice {render_term(t)} is not covered")
    if len(used) != len(given):
        raise MalformedWitness("witness has lhs slices that do not refine the lhs")
    out = []
    for k, part in enumerate(w.slices):
        if part.rhs_slice not in rs:
            raise MalformedWitness(f"slice {k}: rhs slice is not a slice of the rhs")
        g_l, g_r = interpret(part.lhs_slice), interpret(part.rhs_slice)
        image: dict[str, set[str]] = defaultdict(set)
        for x, y in part.relation:
            if x not in g_r.colour or y not in g_l.colour:
                raise MalformedWitness(f"slice {k}: unknown path in pair ({x!r}, {y!r})")
            image[x].add(y)
            cx, cy = g_r.colour[x], g_l.colour[y]
            if cx is None or cx != cy:
                out.append(Violation(k, "colour", f"{x}:{cx} -> {y}:{cy}"))
            if g_l.parallel[y] > g_r.parallel[x]:
                out.append(Violation(k, "parallel", f"{x} -> {y}"))
        for x, ys in image.items():
            if not g_r.parallel[x] and len(ys) > 1:
                out.append(Violation(k, "single-valued", f"{x} -> {sorted(ys)}"))
        if mode is Mode.GENERAL:
            for x in g_r.vertices:
                if g_r.colour[x] is not None and not g_r.parallel[x] and not image.get(x):
                    out.append(Violation(k, "total", f"{x} unmapped"))
        for clique in sorted(max_cliques(part.rhs_slice), key=sorted):
            hit = set().union(*(image.get(x, ()) for x in clique))
            if not contains_max_clique(part.lhs_slice, hit):
                out.append(Violation(k, "clique", f"image of {sorted(clique)} misses every maximal clique"))
    return out


def verify_witness(ineq: Inequality, w: ReductionWitness) -> bool:
    return not witness_violations(ineq, w)


def pointed_general_bridge(lhs: Term, rhs: Term) -> Inequality:
    """``t <=. u`` holds iff ``t * x0 * ... * xn <= u * x0 * ... * xn`` holds
    (over all degrees), where x0..xn are the variables of both sides."""
    for t in (lhs, rhs):
        if contains_one(t) or not _basic_fragment(t):
            raise ValueError("bridge needs variable/meet/product terms without 1")
    pad = [Var(x) for x in sorted(variables(lhs) | variables(rhs))]
    return Inequality(prod_all([lhs] + pad), prod_all([rhs] + pad), Mode.GENERAL)
