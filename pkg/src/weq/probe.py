"""Bounded breadth-first search for derivations by forward rewriting.

Every context is monotone, so replacing a subterm ``s`` by ``s'`` with
``s <= s'`` an axiom instance is a sound step.  The search only ever reports
"found" or "not found within the bound"; it proves nothing about
underivability.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .axioms import Builder, Derivation
from .decider import BudgetExceeded, Inequality, Mode, decide_full
from .derive import _lift, _replace
from .terms import ONE, Meet, One, Prod, Star, Term, Var, size

__all__ = ["ProbeResult", "probe_derivation"]


@dataclass(frozen=True)
class ProbeResult:
    found: bool
    depth: int                   # depth reached (or of the derivation found)
    explored: int                # states expanded
    derivation: Derivation | None = None

    def __str__(self) -> str:
        if self.found:
            return f"derivation found at depth {self.depth} ({self.explored} states)"
        return f"not found within depth {self.depth} ({self.explored} states)"


def _positions(t: Term, path: str = ""):
    yield path, t
    if isinstance(t, Star):
        yield from _positions(t.child, path + "S")
    elif not isinstance(t, (Var, One)):
        yield from _positions(t.left, path + "L")
        yield from _positions(t.right, path + "R")


def _local(s: Term, pointed: bool, fillers: tuple[Term, ...]):
    """One-step rewrites of ``s``: (new term, axiom name, backward?, bindings)."""
    yield Prod(s, s), "relevance", False, {"a": s}
    yield Prod(s, ONE), "unit", True, {"a": s}
    if isinstance(s, Prod):
        a, b = s.left, s.right
        yield Prod(b, a), "comm", False, {"a": a, "b": b}
        if isinstance(b, Prod):
            yield Prod(Prod(a, b.left), b.right), "assoc", False, {"a": a, "b": b.left, "c": b.right}
        if isinstance(a, Prod):
            yield Prod(a.left, Prod(a.right, b)), "assoc", True, {"a": a.left, "b": a.right, "c": b}
        if b == ONE:
            yield a, "unit", False, {"a": a}
    if isinstance(s, Meet):
        a, b = s.left, s.right
        yield a, "meet-lb-left", False, {"a": a, "b": b}
        yield b, "meet-lb-right", False, {"a": a, "b": b}
        if isinstance(a, Prod):
            yield Prod(a.left, Meet(a.right, b)), "half-dist", False, {"a": a.left, "b": a.right, "c": b}
    if pointed and s == ONE:
        for f in fillers:
            yield f, "bottom-pointed", False, {"a": f}


def probe_derivation(source: Term, target: Term, mode: Mode | str = Mode.GENERAL,
                     depth: int = 6, slack: int = 4, max_states: int = 200_000) -> ProbeResult:
    """Search rewrite sequences of length <= ``depth`` from ``source`` to ``target``.

    Uses the base axioms plus meet duplication (``s <= s & s``, from the
    greatest-lower-bound rule).  States that are not below ``target`` by the
    decision procedure, or larger than ``|target| + slack``, are dropped.
    In pointed mode, 1 may be replaced by any subterm of ``target``.
    """
    mode = Mode(mode)
    pointed = mode is Mode.POINTED
    fillers = tuple(dict.fromkeys(s for _, s in _positions(target)))
    limit = size(target) + slack
    parent: dict[Term, tuple[Term, str, str, bool, dict] | None] = {source: None}
    frontier = deque([(source, 0)])
    explored = 0
    valid_cache: dict[Term, bool] = {}

    def below(t: Term) -> bool:
        if t not in valid_cache:
            try:
                valid_cache[t] = decide_full(Inequality(t, target, mode)) is not None
            except BudgetExceeded:
                valid_cache[t] = False
        return valid_cache[t]

    reached = 0
    while frontier:
        t, d = frontier.popleft()
        reached = max(reached, d)
        if t == target:
            return ProbeResult(True, d, explored, _rebuild(parent, t, mode))
        if d == depth or explored >= max_states:
            continue
        explored += 1
        moves = []
        for path, s in _positions(t):
            for new, name, backward, bind in _local(s, pointed, fillers):
                moves.append((path, new, name, backward, bind))
            moves.append((path, Meet(s, s), "glb", False, {"a": s}))
        for path, new, name, backward, bind in moves:
            nt = _replace(t, path, new)
            if nt in parent or size(nt) > limit or not below(nt):
                continue
            parent[nt] = (t, path, name, backward, bind)
            frontier.append((nt, d + 1))
    return ProbeResult(False, min(reached, depth), explored)


def _rebuild(parent, t: Term, mode: Mode) -> Derivation:
    chain = []
    while parent[t] is not None:
        prev, path, name, backward, bind = parent[t]
        chain.append((prev, path, name, backward, bind))
        t = prev
    b = Builder(mode)
    ids = []
    for prev, path, name, backward, bind in reversed(chain):
        if name == "glb":
            r = b.refl(bind["a"])
            local = b.glb(r, r)
        else:
            local = b.axiom(name, backward=backward, **bind)
        ids.append(_lift(b, prev, path, local))
    goal = b.chain(*ids)
    if goal is None:
        goal = b.refl(t)
    return b.finish(goal)
