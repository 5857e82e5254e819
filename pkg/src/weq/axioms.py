"""Axiom schemas, derivation certificates and their checker.

A derivation is a flat list of steps.  Each step proves one inequality and
may cite earlier steps by index.  Rules:

``axiom``            an instance of a non-Horn schema (either direction of an equality)
``reflexivity``      ``t <= t``
``transitivity``     from ``a <= b`` and ``b <= c``
``mono-*-left/right`` congruence of one argument of meet, product or join
``mono-star``        from ``a <= b`` infer ``a^ <= b^``
``glb-pair``         from ``a <= b`` and ``a <= c`` infer ``a <= b & c``
``lub-pair``         from ``b <= a`` and ``c <= a`` infer ``b | c <= a``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

from .decider import Inequality, Mode
from .terms import ONE, Join, Meet, Prod, Star, Term, Var, parse_term, render_term, rename, variables

__all__ = [
    "AxiomSchema", "SCHEMAS", "instantiate_axiom", "horn_premises",
    "Step", "Derivation", "CheckReport", "check_derivation", "audit_derivation",
    "RULES", "Builder",
]

_a, _b, _c = Var("a"), Var("b"), Var("c")


@dataclass(frozen=True)
class AxiomSchema:
    name: str
    lhs: Term
    rhs: Term
    equality: bool = False
    pointed_only: bool = False
    premises: tuple[tuple[Term, Term], ...] = ()

    @property
    def metavariables(self) -> tuple[str, ...]:
        names = set(variables(self.lhs)) | set(variables(self.rhs))
        return tuple(sorted(names))

    @property
    def is_horn(self) -> bool:
        return bool(self.premises)


def _eq(name, lhs, rhs, **kw):
    return AxiomSchema(name, lhs, rhs, equality=True, **kw)


SCHEMAS: dict[str, AxiomSchema] = {s.name: s for s in [
    _eq("assoc", Prod(_a, Prod(_b, _c)), Prod(Prod(_a, _b), _c)),
    _eq("unit", Prod(_a, ONE), _a),
    _eq("comm", Prod(_a, _b), Prod(_b, _a)),
    AxiomSchema("relevance", _a, Prod(_a, _a)),
    AxiomSchema("meet-lb-left", Meet(_a, _b), _a),
    AxiomSchema("meet-lb-right", Meet(_a, _b), _b),
    AxiomSchema("meet-glb", _a, Meet(_b, _c), premises=((_a, _b), (_a, _c))),
    AxiomSchema("half-dist", Meet(Prod(_a, _b), _c), Prod(_a, Meet(_b, _c))),
    AxiomSchema("bottom-pointed", ONE, _a, pointed_only=True),
    AxiomSchema("join-ub-left", _a, Join(_a, _b)),
    AxiomSchema("join-ub-right", _b, Join(_a, _b)),
    AxiomSchema("join-lub", Join(_b, _c), _a, premises=((_b, _a), (_c, _a))),
    _eq("dist-meet-join", Meet(_a, Join(_b, _c)), Join(Meet(_a, _b), Meet(_a, _c))),
    _eq("dist-prod-join", Prod(_a, Join(_b, _c)), Join(Prod(_a, _b), Prod(_a, _c))),
    AxiomSchema("star-incr", _a, Star(_a)),
    AxiomSchema("star-idem", Star(Star(_a)), Star(_a)),
    AxiomSchema("star-dup", Prod(Star(_a), Star(_a)), Star(_a)),
    _eq("star-join", Star(Join(_a, _b)), Prod(Star(_a), Star(_b))),
    _eq("star-meet", Star(Meet(_a, _b)), Meet(Star(_a), Star(_b))),
    _eq("star-prod", Star(Prod(_a, _b)),
        Join(ONE, Prod(Prod(Prod(_a, Star(_a)), _b), Star(_b)))),
    _eq("star-one", Star(ONE), ONE),
]}


def _schema(name: str) -> AxiomSchema:
    try:
        return SCHEMAS[name]
    except KeyError:
        raise KeyError(f"unknown axiom schema {name!r}") from None


def _bind(s: AxiomSchema, bindings: dict[str, Term]) -> dict[str, Term]:
    missing = [m for m in s.metavariables if m not in bindings]
    if missing:
        raise ValueError(f"{s.name}: missing binding for {', '.join(missing)}")
    return {m: bindings[m] for m in s.metavariables}


def _mode(s: AxiomSchema, mode: Mode | None) -> Mode:
    if mode is None:
        return Mode.POINTED if s.pointed_only else Mode.GENERAL
    return Mode(mode)


def instantiate_axiom(name: str, bindings: dict[str, Term], mode: Mode | None = None) -> list[Inequality]:
    """Instances of a schema; equalities give both directions.

    For Horn schemas this is the conclusion; see ``horn_premises``.
    """
    s = _schema(name)
    sub = _bind(s, bindings)
    mode = _mode(s, mode)
    lhs, rhs = rename(s.lhs, sub), rename(s.rhs, sub)
    out = [Inequality(lhs, rhs, mode)]
    if s.equality:
        out.append(Inequality(rhs, lhs, mode))
    return out


def horn_premises(name: str, bindings: dict[str, Term], mode: Mode | None = None) -> list[Inequality]:
    s = _schema(name)
    sub = _bind(s, bindings)
    mode = _mode(s, mode)
    return [Inequality(rename(p, sub), rename(q, sub), mode) for p, q in s.premises]


# -- derivations -------------------------------------------------------------

RULES = (
    "axiom", "reflexivity", "transitivity",
    "mono-meet-left", "mono-meet-right", "mono-prod-left", "mono-prod-right",
    "mono-join-left", "mono-join-right", "mono-star", "glb-pair", "lub-pair",
)
_ARITY = {"axiom": 0, "reflexivity": 0, "transitivity": 2, "mono-star": 1,
          "glb-pair": 2, "lub-pair": 2}
_MONO_NODE = {"meet": Meet, "prod": Prod, "join": Join}


@dataclass(frozen=True)
class Step:
    rule: str
    proves: tuple[Term, Term]
    refs: tuple[int, ...] = ()
    axiom: str | None = None
    bindings: tuple[tuple[str, Term], ...] = ()

    def to_json(self) -> dict:
        doc = {
            "rule": self.rule,
            "refs": list(self.refs),
            "proves": f"{render_term(self.proves[0])} <= {render_term(self.proves[1])}",
        }
        if self.axiom is not None:
            doc["axiom"] = self.axiom
            doc["bindings"] = {k: render_term(v) for k, v in self.bindings}
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Step":
        left, right = doc["proves"].split("<=")
        bindings = tuple(sorted((k, parse_term(v)) for k, v in doc.get("bindings", {}).items()))
        return cls(doc["rule"], (parse_term(left), parse_term(right)),
                   tuple(int(r) for r in doc.get("refs", ())), doc.get("axiom"), bindings)


@dataclass(frozen=True)
class Derivation:
    """Steps proving ``conclusion``; ``converse`` optionally indexes a step
    proving the reverse inequality, turning the certificate into an equality."""

    conclusion: Inequality
    steps: tuple[Step, ...]
    converse: int | None = None

    def __len__(self) -> int:
        return len(self.steps)

    def to_json(self) -> dict:
        doc = {
            "conclusion": f"{render_term(self.conclusion.lhs)} <= {render_term(self.conclusion.rhs)}",
            "mode": self.conclusion.mode.value,
            "steps": [s.to_json() for s in self.steps],
        }
        if self.converse is not None:
            doc["converse"] = self.converse
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc) -> "Derivation":
        if isinstance(doc, str):
            doc = json.loads(doc)
        left, right = doc["conclusion"].split("<=")
        concl = Inequality(parse_term(left), parse_term(right), Mode(doc.get("mode", "pointed")))
        return cls(concl, tuple(Step.from_json(s) for s in doc["steps"]), doc.get("converse"))


class CheckReport(NamedTuple):
    ok: bool
    step: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _check_step(i: int, s: Step, steps: tuple[Step, ...], mode: Mode) -> str | None:
    if s.rule not in RULES:
        return f"unknown rule {s.rule!r}"
    for r in s.refs:
        if not 0 <= r < i:
            return f"reference {r} does not point to an earlier step"
    want = _ARITY.get(s.rule, 1)
    if len(s.refs) != want:
        return f"{s.rule} takes {want} premise(s)"
    lhs, rhs = s.proves
    prem = [steps[r].proves for r in s.refs]

    if s.rule == "axiom":
        if s.axiom not in SCHEMAS:
            return f"unknown axiom {s.axiom!r}"
        schema = SCHEMAS[s.axiom]
        if schema.is_horn:
            return f"{s.axiom} is a Horn rule; use glb-pair or lub-pair"
        if schema.pointed_only and mode is not Mode.POINTED:
            return f"{s.axiom} holds only for pointed degrees"
        bindings = dict(s.bindings)
        if set(bindings) != set(schema.metavariables):
            return f"{s.axiom}: bindings must cover exactly {schema.metavariables}"
        instances = instantiate_axiom(s.axiom, bindings, mode)
        if not any((q.lhs, q.rhs) == (lhs, rhs) for q in instances):
            return f"not an instance of {s.axiom}"
        return None
    if s.rule == "reflexivity":
        return None if lhs == rhs else "sides differ"
    if s.rule == "transitivity":
        (a, b), (b2, c) = prem
        return None if b == b2 and (a, c) == (lhs, rhs) else "premises do not chain"
    if s.rule == "mono-star":
        (a, b), = prem
        return None if (lhs, rhs) == (Star(a), Star(b)) else "not the starred premise"
    if s.rule == "glb-pair":
        (a, b), (a2, c) = prem
        return None if a == a2 and (lhs, rhs) == (a, Meet(b, c)) else "premises do not match"
    if s.rule == "lub-pair":
        (b, a), (c, a2) = prem
        return None if a == a2 and (lhs, rhs) == (Join(b, c), a) else "premises do not match"
    _, kind, side = s.rule.split("-")
    node = _MONO_NODE[kind]
    (a, b), = prem
    if type(lhs) is not node or type(rhs) is not node:
        return f"conclusion is not a {kind} on both sides"
    if side == "left":
        ok = (lhs.left, rhs.left) == (a, b) and lhs.right == rhs.right
    else:
        ok = (lhs.right, rhs.right) == (a, b) and lhs.left == rhs.left
    return None if ok else "conclusion does not extend the premise"


def audit_derivation(d: Derivation) -> CheckReport:
    """Check every step; report the first defect and its index."""
    mode = Mode(d.conclusion.mode)
    if not d.steps:
        return CheckReport(False, None, "no steps")
    for i, s in enumerate(d.steps):
        try:
            err = _check_step(i, s, d.steps, mode)
        except (TypeError, ValueError, KeyError) as exc:
            err = f"malformed step: {exc}"
        if err:
            return CheckReport(False, i, err)
    last = d.steps[-1].proves
    if last != (d.conclusion.lhs, d.conclusion.rhs):
        return CheckReport(False, len(d.steps) - 1, "last step does not prove the conclusion")
    if d.converse is not None:
        if not 0 <= d.converse < len(d.steps):
            return CheckReport(False, None, "converse index out of range")
        if d.steps[d.converse].proves != (d.conclusion.rhs, d.conclusion.lhs):
            return CheckReport(False, d.converse, "converse step proves something else")
    return CheckReport(True)


def check_derivation(d: Derivation) -> bool:
    return audit_derivation(d).ok


# -- building ----------------------------------------------------------------

Eq = tuple[int, int]   # steps proving s <= t and t <= s


@dataclass
class Builder:
    """Accumulates steps, reusing any step that already proves a goal."""

    mode: Mode = Mode.POINTED
    steps: list[Step] = field(default_factory=list)
    _known: dict[tuple[Term, Term], int] = field(default_factory=dict)

    def _add(self, step: Step) -> int:
        hit = self._known.get(step.proves)
        if hit is not None:
            return hit
        self.steps.append(step)
        self._known[step.proves] = len(self.steps) - 1
        return len(self.steps) - 1

    def proves(self, i: int) -> tuple[Term, Term]:
        return self.steps[i].proves

    def axiom(self, name: str, backward: bool = False, **bindings: Term) -> int:
        q = instantiate_axiom(name, bindings, self.mode)[1 if backward else 0]
        s = SCHEMAS[name]
        return self._add(Step("axiom", (q.lhs, q.rhs), (), name, tuple(sorted(_bind(s, bindings).items()))))

    def refl(self, t: Term) -> int:
        return self._add(Step("reflexivity", (t, t)))

    def trans(self, i: int | None, j: int | None) -> int | None:
        if i is None:
            return j
        if j is None:
            return i
        (a, b), (b2, c) = self.proves(i), self.proves(j)
        if b != b2:
            raise ValueError(f"cannot chain {render_term(b)} with {render_term(b2)}")
        if a == c:
            return self.refl(a)
        return self._add(Step("transitivity", (a, c), (i, j)))

    def chain(self, *ids: int | None) -> int | None:
        out = None
        for i in ids:
            out = self.trans(out, i)
        return out

    def mono(self, node, side: str, i: int | None, other: Term) -> int | None:
        """Put ``other`` beside both sides of step ``i`` under ``node``."""
        if i is None:
            return None
        a, b = self.proves(i)
        kind = {Meet: "meet", Prod: "prod", Join: "join"}[node]
        if side == "left":
            proves = (node(a, other), node(b, other))
        else:
            proves = (node(other, a), node(other, b))
        return self._add(Step(f"mono-{kind}-{side}", proves, (i,)))

    def cong(self, node, i: int | None, j: int | None, left: Term, right: Term) -> int | None:
        """From ``left <= left'`` and ``right <= right'`` infer ``node(left, right) <= node(left', right')``."""
        first = self.mono(node, "left", i, right)
        new_left = self.proves(i)[1] if i is not None else left
        return self.trans(first, self.mono(node, "right", j, new_left))

    def star(self, i: int | None) -> int | None:
        if i is None:
            return None
        a, b = self.proves(i)
        return self._add(Step("mono-star", (Star(a), Star(b)), (i,)))

    def glb(self, i: int, j: int) -> int:
        (a, b), (_, c) = self.proves(i), self.proves(j)
        return self._add(Step("glb-pair", (a, Meet(b, c)), (i, j)))

    def lub(self, i: int, j: int) -> int:
        (b, a), (c, _) = self.proves(i), self.proves(j)
        return self._add(Step("lub-pair", (Join(b, c), a), (i, j)))

    # equivalences: pairs of steps, None meaning syntactic identity

    def eq_axiom(self, name: str, **bindings: Term) -> Eq:
        return self.axiom(name, **bindings), self.axiom(name, backward=True, **bindings)

    def eq_trans(self, *eqs: Eq | None) -> Eq | None:
        live = [e for e in eqs if e is not None]
        if not live:
            return None
        fwd = self.chain(*(e[0] for e in live))
        bwd = self.chain(*(e[1] for e in reversed(live)))
        return fwd, bwd

    def eq_cong(self, node, e1: Eq | None, e2: Eq | None, left: Term, right: Term) -> Eq | None:
        if e1 is None and e2 is None:
            return None
        f1, b1 = e1 if e1 else (None, None)
        f2, b2 = e2 if e2 else (None, None)
        new_left = self.proves(f1)[1] if f1 is not None else left
        new_right = self.proves(f2)[1] if f2 is not None else right
        return self.cong(node, f1, f2, left, right), self.cong(node, b1, b2, new_left, new_right)

    def eq_star(self, e: Eq | None) -> Eq | None:
        return None if e is None else (self.star(e[0]), self.star(e[1]))

    def _ancestors(self, roots: list[int]) -> set[int]:
        seen: set[int] = set()
        stack = list(roots)
        while stack:
            i = stack.pop()
            if i not in seen:
                seen.add(i)
                stack.extend(self.steps[i].refs)
        return seen

    def finish(self, goal: int | None, concl: Inequality | None = None, converse: int | None = None) -> Derivation:
        """Keep only the steps ``goal`` (and ``converse``) depend on."""
        if goal is None:
            if concl is None:
                raise ValueError("identity derivation needs its conclusion")
            goal = self.refl(concl.lhs)
        keep = self._ancestors([goal])
        side = self._ancestors([converse]) if converse is not None else set()
        if goal in side:
            order = sorted(keep | side)
        else:
            # refs only point backwards, so the goal can always move to the end
            order = sorted((keep | side) - {goal}) + [goal]
        new = {old: k for k, old in enumerate(order)}
        steps = [
            Step(s.rule, s.proves, tuple(new[r] for r in s.refs), s.axiom, s.bindings)
            for s in (self.steps[i] for i in order)
        ]
        if order[-1] != goal:
            # the converse came later; repeat the goal step so it ends the list
            steps.append(steps[new[goal]])
        lhs, rhs = self.proves(goal)
        if concl is None:
            concl = Inequality(lhs, rhs, self.mode)
        return Derivation(concl, tuple(steps), None if converse is None else new[converse])
