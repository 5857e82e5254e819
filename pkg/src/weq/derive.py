"""Derivation synthesis: star normalization, pointed 1-elimination, witness
totalization, and complete derivations for square-free right-hand sides.

Equivalences are handled as pairs of step indices (forward, backward), with
``None`` standing for syntactic identity.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import count

from .axioms import Builder, Derivation, Eq, Step
from .decider import (
    Inequality, Mode, ReductionWitness, SliceReduction, decide_full, verify_witness,
)
from .terms import (
    ONE, Join, Meet, One, Prod, Star, Term, Var, is_join_free, is_square_free,
    leaves, meet_all, normalize_star, prod_all, rename, replace_at, simplify_one_pointed,
    subst, subterm, variables,
)

__all__ = [
    "derive_star_normal", "derive_one_free", "derive_square_free",
    "derive_square_free_any", "totalize_witness", "Totalized", "compose",
    "substitute_derivation", "DerivationError",
]


class DerivationError(ValueError):
    """The requested derivation does not exist or its precondition fails."""


# -- star normal form --------------------------------------------------------

class _StarNormal:
    def __init__(self, b: Builder):
        self.b = b
        self.memo_t: dict[Term, Eq | None] = {}
        self.memo_s: dict[Term, Eq | None] = {}

    def term(self, t: Term) -> Eq | None:
        """t = normalize_star(t)."""
        if t in self.memo_t:
            return self.memo_t[t]
        if isinstance(t, (Var, One)):
            e = None
        elif isinstance(t, Star):
            e = self.star(t.child)
        else:
            e = self.b.eq_cong(type(t), self.term(t.left), self.term(t.right), t.left, t.right)
        self.memo_t[t] = e
        return e

    def star(self, c: Term) -> Eq | None:
        """c^ = normal form of c^."""
        if c in self.memo_s:
            return self.memo_s[c]
        b = self.b
        if isinstance(c, Var):
            e = None
        elif isinstance(c, One):
            e = b.eq_axiom("star-one")
        elif isinstance(c, Star):
            collapse = (b.axiom("star-idem", a=c.child), b.axiom("star-incr", a=c))
            e = b.eq_trans(collapse, self.star(c.child))
        elif isinstance(c, (Join, Meet)):
            name, node = ("star-join", Prod) if isinstance(c, Join) else ("star-meet", Meet)
            inner = b.eq_cong(node, self.star(c.left), self.star(c.right), Star(c.left), Star(c.right))
            e = b.eq_trans(b.eq_axiom(name, a=c.left, b=c.right), inner)
        else:
            x, y = c.left, c.right
            e1 = b.eq_cong(Prod, self.term(x), self.star(x), x, Star(x))
            e2 = b.eq_cong(Prod, e1, self.term(y), Prod(x, Star(x)), y)
            body = Prod(Prod(x, Star(x)), y)
            e3 = b.eq_cong(Prod, e2, self.star(y), body, Star(y))
            e4 = b.eq_cong(Join, None, e3, ONE, Prod(body, Star(y)))
            e = b.eq_trans(b.eq_axiom("star-prod", a=x, b=y), e4)
        self.memo_s[c] = e
        return e


def derive_star_normal(t: Term, mode: Mode = Mode.GENERAL) -> Derivation:
    """Derivation of ``t <= normalize_star(t)`` whose ``converse`` step proves
    the reverse inequality.  Uses no pointed-only axiom."""
    b = Builder(Mode(mode))
    e = _StarNormal(b).term(t)
    concl = Inequality(t, normalize_star(t), Mode(mode))
    if e is None:
        i = b.refl(t)
        return b.finish(i, concl, converse=i)
    return b.finish(e[0], concl, converse=e[1])


# -- pointed elimination of 1 ------------------------------------------------

def _one_free(b: Builder, t: Term, memo: dict) -> Eq | None:
    """t = simplify_one_pointed(t), pointed mode."""
    if t in memo:
        return memo[t]
    if isinstance(t, (Var, One)):
        e = None
    elif isinstance(t, Star):
        inner = _one_free(b, t.child, memo)
        e = b.eq_star(inner)
        if isinstance(simplify_one_pointed(t.child), One):
            e = b.eq_trans(e, b.eq_axiom("star-one"))
    else:
        x, y = t.left, t.right
        sx, sy = simplify_one_pointed(x), simplify_one_pointed(y)
        e = b.eq_cong(type(t), _one_free(b, x, memo), _one_free(b, y, memo), x, y)
        if isinstance(t, Meet) and (isinstance(sx, One) or isinstance(sy, One)):
            if isinstance(sx, One):
                down = b.axiom("meet-lb-left", a=ONE, b=sy)
                up = b.glb(b.refl(ONE), b.axiom("bottom-pointed", a=sy))
            else:
                down = b.axiom("meet-lb-right", a=sx, b=ONE)
                up = b.glb(b.axiom("bottom-pointed", a=sx), b.refl(ONE))
            e = b.eq_trans(e, (down, up))
        elif isinstance(t, Prod) and isinstance(sy, One):
            e = b.eq_trans(e, b.eq_axiom("unit", a=sx))
        elif isinstance(t, Prod) and isinstance(sx, One):
            e = b.eq_trans(e, b.eq_axiom("comm", a=ONE, b=sy), b.eq_axiom("unit", a=sy))
        elif isinstance(t, Join) and isinstance(sx, One):
            down = b.lub(b.axiom("bottom-pointed", a=sy), b.refl(sy))
            e = b.eq_trans(e, (down, b.axiom("join-ub-right", a=ONE, b=sy)))
        elif isinstance(t, Join) and isinstance(sy, One):
            down = b.lub(b.refl(sx), b.axiom("bottom-pointed", a=sx))
            e = b.eq_trans(e, (down, b.axiom("join-ub-left", a=sx, b=ONE)))
    memo[t] = e
    return e


def derive_one_free(t: Term) -> Derivation:
    """Pointed derivation of ``t <= simplify_one_pointed(t)`` with converse."""
    b = Builder(Mode.POINTED)
    e = _one_free(b, t, {})
    concl = Inequality(t, simplify_one_pointed(t), Mode.POINTED)
    if e is None:
        i = b.refl(t)
        return b.finish(i, concl, converse=i)
    return b.finish(e[0], concl, converse=e[1])


# -- splicing derivations ----------------------------------------------------

def _splice(b: Builder, d: Derivation) -> list[int]:
    """Replay the steps of ``d`` into ``b``; return their new indices."""
    new: list[int] = []
    for s in d.steps:
        step = Step(s.rule, s.proves, tuple(new[r] for r in s.refs), s.axiom, s.bindings)
        new.append(b._add(step))
    return new


def compose(*ds: Derivation) -> Derivation:
    """Chain derivations of ``t0 <= t1``, ``t1 <= t2``, ... into one."""
    if not ds:
        raise ValueError("nothing to compose")
    mode = Mode.GENERAL if all(d.conclusion.mode is Mode.GENERAL for d in ds) else Mode.POINTED
    b = Builder(mode)
    ends = [_splice(b, d)[-1] for d in ds]
    goal = b.chain(*ends)
    return b.finish(goal, Inequality(ds[0].conclusion.lhs, ds[-1].conclusion.rhs, mode))


def substitute_derivation(d: Derivation, mapping: dict[str, Term]) -> Derivation:
    """Apply a simultaneous variable substitution to every step."""
    def sub(t: Term) -> Term:
        return rename(t, mapping)

    steps = tuple(
        Step(s.rule, (sub(s.proves[0]), sub(s.proves[1])), s.refs, s.axiom,
             tuple((k, sub(v)) for k, v in s.bindings))
        for s in d.steps
    )
    c = d.conclusion
    return Derivation(Inequality(sub(c.lhs), sub(c.rhs), c.mode), steps, d.converse)


# -- small lemmas ------------------------------------------------------------

def _lnest(factors: list[Term]) -> Term:
    return prod_all(factors)


def _flat(t: Term) -> list[Term]:
    if isinstance(t, Prod):
        return _flat(t.left) + _flat(t.right)
    return [t]


def _to_lnest(b: Builder, t: Term) -> Eq | None:
    """t = left-nested product of its factors (same order)."""
    if not isinstance(t, Prod):
        return None
    fl, fr = _flat(t.left), _flat(t.right)
    e = b.eq_cong(Prod, _to_lnest(b, t.left), _to_lnest(b, t.right), t.left, t.right)
    return b.eq_trans(e, _append(b, _lnest(fl), fr))


def _append(b: Builder, head: Term, tail: list[Term]) -> Eq | None:
    """head * lnest(tail) = lnest([head] + tail) with head kept whole."""
    if len(tail) == 1:
        return None
    *init, last = tail
    step = b.eq_axiom("assoc", a=head, b=_lnest(init), c=last)
    rest = _append(b, head, init)
    return b.eq_trans(step, b.eq_cong(Prod, rest, None, Prod(head, _lnest(init)), last))


def _drop_ones(b: Builder, fs: list[Term]) -> Eq | None:
    """lnest(fs) = lnest(fs without literal 1 factors) (1 if none remain)."""
    if len(fs) <= 1:
        return None
    *init, last = fs
    kept = [f for f in init if not isinstance(f, One)]
    e = _drop_ones(b, init)
    if isinstance(last, One):
        return b.eq_trans(b.eq_axiom("unit", a=_lnest(init)), e)
    e = b.eq_cong(Prod, e, None, _lnest(init), last)
    if not kept:
        return b.eq_trans(e, b.eq_axiom("comm", a=ONE, b=last), b.eq_axiom("unit", a=last))
    return e


def _swap(b: Builder, fs: list[Term], k: int) -> Eq:
    """lnest(fs) = lnest(fs with positions k, k+1 exchanged)."""
    x, y = fs[k], fs[k + 1]
    if k == 0:
        e = b.eq_axiom("comm", a=x, b=y)
    else:
        p = _lnest(fs[:k])
        regroup = b.eq_axiom("assoc", a=p, b=x, c=y)
        e = b.eq_trans(
            (regroup[1], regroup[0]),
            b.eq_cong(Prod, None, b.eq_axiom("comm", a=x, b=y), p, Prod(x, y)),
            b.eq_axiom("assoc", a=p, b=y, c=x),
        )
    cur = _lnest(fs[:k + 2])
    for f in fs[k + 2:]:
        e = b.eq_cong(Prod, e, None, cur, f)
        cur = Prod(cur, f)
    return e


def _permute(b: Builder, fs: list[Term], target: list[Term]) -> Eq | None:
    cur = list(fs)
    e = None
    for pos, want in enumerate(target):
        j = next(i for i in range(pos, len(cur)) if cur[i] == want)
        while j > pos:
            e = b.eq_trans(e, _swap(b, cur, j - 1))
            cur[j - 1], cur[j] = cur[j], cur[j - 1]
            j -= 1
    return e


def prod_rearrange(b: Builder, s: Term, t: Term) -> Eq | None:
    """s = t when both are products of the same factors up to order and units."""
    fs, ft = _flat(s), _flat(t)
    gs = [f for f in fs if not isinstance(f, One)]
    gt = [f for f in ft if not isinstance(f, One)]
    if Counter(gs) != Counter(gt):
        raise DerivationError("products have different factors")
    into = b.eq_trans(_to_lnest(b, s), _drop_ones(b, fs), _permute(b, gs, gt))
    out = b.eq_trans(_to_lnest(b, t), _drop_ones(b, ft))
    back = None if out is None else (out[1], out[0])
    return b.eq_trans(into, back)


def _lift(b: Builder, t: Term, path: str, i: int | None) -> int | None:
    """From ``s <= s'`` for the subterm at ``path``, derive ``t <= t[path := s']``."""
    if not path or i is None:
        return i
    d, rest = path[0], path[1:]
    if d == "S":
        return b.star(_lift(b, t.child, rest, i))
    inner = _lift(b, t.left if d == "L" else t.right, rest, i)
    if d == "L":
        return b.mono(type(t), "left", inner, t.right)
    return b.mono(type(t), "right", inner, t.left)


_replace = replace_at


def _dup(b: Builder, v: Term, m: int) -> int:
    """v <= v & v & ... & v (m copies, left-nested)."""
    r = b.refl(v)
    acc = r
    for _ in range(m - 1):
        acc = b.glb(acc, r)
    return acc


def _absorb(b: Builder, kept: Term, dropped: Term, kept_left: bool) -> int:
    """kept <= kept * dropped (or dropped * kept), pointed."""
    i = b.trans(b.axiom("unit", backward=True, a=kept),
                b.mono(Prod, "right", b.axiom("bottom-pointed", a=dropped), kept))
    if not kept_left:
        i = b.trans(i, b.axiom("comm", a=kept, b=dropped))
    return i


# -- witness totalization ----------------------------------------------------

@dataclass(frozen=True)
class Totalized:
    lhs: Term
    rhs: Term
    witness: ReductionWitness
    lhs_derivation: Derivation     # original lhs <= lhs
    rhs_derivation: Derivation     # rhs <= original rhs

    @property
    def mapping(self) -> dict[str, str]:
        return dict(self.witness.slices[0].relation)


def _remove(t: Term, path: str) -> tuple[Term, dict[str, str]]:
    """Drop the subtree at ``path``, promoting its sibling; return the new term
    and the old-path -> new-path map of surviving leaves."""
    parent, side = path[:-1], path[-1]
    node = subterm(t, parent)
    keep = "R" if side == "L" else "L"
    sibling = node.right if keep == "R" else node.left
    moved = {}
    for p, _ in leaves(t):
        if p.startswith(path):
            continue
        if p.startswith(parent + keep):
            moved[p] = parent + p[len(parent) + 1:]
        else:
            moved[p] = p
    return _replace(t, parent, sibling), moved


def _innermost(t: Term, path: str, node) -> str | None:
    """Path of the child just below the deepest ``node`` ancestor of ``path``."""
    best = None
    for k in range(len(path)):
        if type(subterm(t, path[:k])) is node:
            best = path[:k + 1]
    return best


def totalize_witness(lhs: Term, rhs: Term, w: ReductionWitness) -> Totalized:
    """Make a pointed witness total and bijective by reshaping both sides.

    Unhit lhs vertices are cut below their innermost meet, undefined rhs
    vertices below their innermost product, and lhs vertices hit m > 1 times
    become m-fold meets.  Works on the 1-free forms of both terms.
    """
    for t in (lhs, rhs):
        if not is_join_free(t) or any(isinstance(s, Star) for _, s in leaves(t)):
            raise DerivationError("totalization needs meet/product/1 terms")
    ineq = Inequality(lhs, rhs, Mode.POINTED)
    if w.mode is not Mode.POINTED or len(w.slices) != 1 or not verify_witness(ineq, w):
        raise DerivationError("witness does not verify")
    sl = w.slices[0]
    t, u = sl.lhs_slice, sl.rhs_slice
    lb, rb = Builder(Mode.POINTED), Builder(Mode.POINTED)
    l_goal = _splice(lb, derive_one_free(lhs))[-1]
    r_one = derive_one_free(rhs)
    r_goal = _splice(rb, r_one)[r_one.converse]

    if isinstance(t, One) or isinstance(u, One):
        if not isinstance(t, One):
            raise DerivationError("witness maps 1 onto a non-trivial term")
        if not isinstance(u, One):
            r_goal = rb.trans(rb.axiom("bottom-pointed", a=u), r_goal)
        return Totalized(ONE, ONE, ReductionWitness(Mode.POINTED, (SliceReduction(ONE, ONE, ()),)),
                         lb.finish(l_goal), rb.finish(r_goal))

    rel: dict[str, list[str]] = {}
    for x, y in sl.relation:
        rel.setdefault(x, []).append(y)
    lsteps: list[int | None] = [l_goal]
    rsteps: list[int | None] = [r_goal]
    while True:
        hit = {y for ys in rel.values() for y in ys}
        unhit = [p for p, _ in leaves(t) if p not in hit]
        undefined = [p for p, _ in leaves(u) if p not in rel]
        if not unhit and not undefined:
            break
        if undefined:
            p = undefined[0]
            cut = _innermost(u, p, Prod)
            if cut is None:
                raise DerivationError("undefined vertex outside every product")
            parent = subterm(u, cut[:-1])
            kept_left = cut[-1] == "R"
            kept = parent.left if kept_left else parent.right
            dropped = subterm(u, cut)
            small, moved = _remove(u, cut)
            rsteps.insert(0, _lift(rb, small, cut[:-1], _absorb(rb, kept, dropped, kept_left)))
            u = small
            rel = {moved[x]: ys for x, ys in rel.items() if x in moved}
        else:
            p = unhit[0]
            cut = _innermost(t, p, Meet)
            if cut is None:
                raise DerivationError("unhit vertex outside every meet")
            parent = subterm(t, cut[:-1])
            lb_name = "meet-lb-right" if cut[-1] == "L" else "meet-lb-left"
            step = lb.axiom(lb_name, a=parent.left, b=parent.right)
            lsteps.append(_lift(lb, t, cut[:-1], step))
            t, moved = _remove(t, cut)
            rel = {x: [moved[y] for y in ys if y in moved] for x, ys in rel.items()}
            rel = {x: ys for x, ys in rel.items() if ys}

    # duplicate lhs vertices hit several times
    pre: dict[str, list[str]] = {}
    for x in sorted(rel):
        ys = rel[x]
        if len(ys) != 1:
            raise DerivationError("relation is not single-valued")
        pre.setdefault(ys[0], []).append(x)
    final: dict[str, str] = {}
    for y in sorted(pre):
        xs = pre[y]
        m = len(xs)
        if m > 1:
            v = subterm(t, y)
            lsteps.append(_lift(lb, t, y, _dup(lb, v, m)))
            t = _replace(t, y, meet_all([v] * m))
            for i, x in enumerate(xs):
                final[x] = y + ("L" * (m - 1 - i)) + ("R" if i else "")
        else:
            final[xs[0]] = y

    relation = tuple(sorted(final.items()))
    wit = ReductionWitness(Mode.POINTED, (SliceReduction(t, u, relation),))
    return Totalized(t, u, wit, lb.finish(lb.chain(*lsteps)), rb.finish(rb.chain(*rsteps)))


# -- square-free right-hand sides -------------------------------------------

def _cliques(t: Term) -> list[frozenset[str]]:
    if isinstance(t, (Var, One)):
        return [frozenset({""})]
    if isinstance(t, Meet):
        return ([frozenset("L" + p for p in c) for c in _cliques(t.left)]
                + [frozenset("R" + p for p in c) for c in _cliques(t.right)])
    return [frozenset({"L" + p for p in a} | {"R" + p for p in c})
            for a in _cliques(t.left) for c in _cliques(t.right)]


def _project(b: Builder, t: Term, clique: frozenset[str]) -> tuple[int | None, Term]:
    """t <= the product skeleton of t along one of its maximal cliques."""
    if isinstance(t, (Var, One)):
        return None, t
    if isinstance(t, Meet):
        side = "L" if next(iter(clique)).startswith("L") else "R"
        sub = frozenset(p[1:] for p in clique)
        child = t.left if side == "L" else t.right
        i, proj = _project(b, child, sub)
        lb = b.axiom("meet-lb-left" if side == "L" else "meet-lb-right", a=t.left, b=t.right)
        return b.trans(lb, i), proj
    li, lp = _project(b, t.left, frozenset(p[1:] for p in clique if p[0] == "L"))
    ri, rp = _project(b, t.right, frozenset(p[1:] for p in clique if p[0] == "R"))
    return b.cong(Prod, li, ri, t.left, t.right), Prod(lp, rp)


def _to_atom(b: Builder, t: Term, target: Term) -> int | None:
    """t <= target for target a variable or 1, by cutting t down to a clique."""
    for c in _cliques(t):
        atoms = [subterm(t, p) for p in c]
        coloured = [a for a in atoms if a != ONE]
        if len(coloured) > 1 or any(a != target for a in coloured):
            continue
        i, proj = _project(b, t, c)
        e = prod_rearrange(b, proj, coloured[0] if coloured else ONE)
        i = b.trans(i, e[0] if e else None)
        if not coloured and target != ONE:
            i = b.trans(i, b.axiom("bottom-pointed", a=target))
        return i
    raise DerivationError(f"no clique of the lhs fits under {target}")


def _pull(b: Builder, t: Term, x: Term) -> int:
    """t <= t[1/x] * x when x occurs at most once in t (pointed)."""
    name = x.name
    if name not in variables(t):
        return _absorb(b, t, x, True)
    if t == x:
        return b.trans(b.axiom("unit", backward=True, a=x), b.axiom("comm", a=x, b=ONE))
    if isinstance(t, Meet):
        in_left = name in variables(t.left)
        a, c = (t.left, t.right) if in_left else (t.right, t.left)
        a1 = subst(a, name, ONE)
        i = _pull(b, a, x)
        if not in_left:
            # a & c with x inside the right operand: swap first
            swap = b.glb(b.axiom("meet-lb-right", a=t.left, b=t.right),
                         b.axiom("meet-lb-left", a=t.left, b=t.right))
            i0 = swap
        else:
            i0 = None
        i = b.chain(i0, b.mono(Meet, "left", i, c))            # (a1*x) & c
        i = b.trans(i, b.mono(Meet, "left", b.axiom("comm", a=a1, b=x), c))  # (x*a1) & c
        i = b.trans(i, b.axiom("half-dist", a=x, b=a1, c=c))    # x * (a1 & c)
        i = b.trans(i, b.axiom("comm", a=x, b=Meet(a1, c)))     # (a1 & c) * x
        if not in_left:
            back = b.glb(b.axiom("meet-lb-right", a=a1, b=c), b.axiom("meet-lb-left", a=a1, b=c))
            i = b.trans(i, b.mono(Prod, "left", back, x))
        return i
    if isinstance(t, Prod):
        in_left = name in variables(t.left)
        if in_left:
            i = b.mono(Prod, "left", _pull(b, t.left, x), t.right)
        else:
            i = b.mono(Prod, "right", _pull(b, t.right, x), t.left)
        have = b.proves(i)[1]
        want = Prod(subst(t, name, ONE), x)
        e = prod_rearrange(b, have, want)
        return b.trans(i, e[0] if e else None)
    raise DerivationError(f"unexpected subterm {t!r}")


def _square_free(b: Builder, t: Term, u: Term) -> int | None:
    if isinstance(u, (Var, One)):
        return _to_atom(b, t, u)
    if isinstance(u, Meet):
        return b.glb(_ensure(b, t, u.left, _square_free(b, t, u.left)),
                     _ensure(b, t, u.right, _square_free(b, t, u.right)))
    if not isinstance(u, Prod):
        raise DerivationError("square-free terms use only variables, 1, meet and product")
    fs = _flat(u)
    core = [f for f in fs if not isinstance(f, One)]
    if len(core) != len(fs):
        base = _lnest(core)
        i = _square_free(b, t, base)
        e = prod_rearrange(b, base, u)
        return b.trans(i, e[0] if e else None)
    k = max(i for i, f in enumerate(fs) if isinstance(f, Var))
    x = fs[k]
    rest = _lnest(fs[:k] + fs[k + 1:])
    t1 = subst(t, x.name, ONE)
    i = _pull(b, t, x)
    j = _ensure(b, t1, rest, _square_free(b, t1, rest))
    i = b.trans(i, b.mono(Prod, "left", j, x))
    e = prod_rearrange(b, Prod(rest, x), u)
    return b.trans(i, e[0] if e else None)


def _ensure(b: Builder, t: Term, u: Term, i: int | None) -> int:
    return b.refl(t) if i is None and t == u else i


def _distinct(t: Term) -> bool:
    names = [s.name for _, s in leaves(t) if isinstance(s, Var)]
    return len(names) == len(set(names))


def derive_square_free(t: Term, u: Term) -> Derivation:
    """Pointed derivation of ``t <= u`` for square-free ``u``.

    Both sides must be meet/product/1 terms with pairwise distinct variables,
    and the inequality must be valid.  See ``derive_square_free_any`` for the
    general case.
    """
    if not is_square_free(u):
        raise DerivationError("right-hand side is not square-free")
    if not is_join_free(t) or any(isinstance(s, Star) for _, s in leaves(t)):
        raise DerivationError("left-hand side must use only meet, product and 1")
    if not (_distinct(t) and _distinct(u)):
        raise DerivationError("variables must be pairwise distinct on each side")
    ineq = Inequality(t, u, Mode.POINTED)
    if decide_full(ineq) is None:
        raise DerivationError("inequality is not valid")
    b = Builder(Mode.POINTED)
    goal = _square_free(b, t, u)
    return b.finish(_ensure(b, t, u, goal), ineq)


def derive_square_free_any(t: Term, u: Term) -> Derivation:
    """Like ``derive_square_free`` without the distinct-variable restriction.

    Totalizes a witness, renames both sides apart along the bijection,
    derives the renamed inequality and substitutes the original names back.
    """
    ineq = Inequality(t, u, Mode.POINTED)
    w = decide_full(ineq)
    if w is None:
        raise DerivationError("inequality is not valid")
    if not is_square_free(u):
        raise DerivationError("right-hand side is not square-free")
    tot = totalize_witness(t, u, w)
    fresh = (f"z{i}" for i in count())
    taken = variables(t) | variables(u)
    lmap: dict[str, str] = {}
    back: dict[str, Term] = {}
    for x, y in sorted(tot.mapping.items()):
        name = next(n for n in fresh if n not in taken)
        lmap[y] = name
        back[name] = subterm(tot.rhs, x)
    t_hat = _rename_leaves(tot.lhs, lmap)
    u_hat = _rename_leaves(tot.rhs, {x: lmap[y] for x, y in tot.mapping.items()})
    core = substitute_derivation(derive_square_free(t_hat, u_hat), back)
    return compose(tot.lhs_derivation, core, tot.rhs_derivation)


def _rename_leaves(t: Term, names: dict[str, str], path: str = "") -> Term:
    if isinstance(t, Var):
        return Var(names[path]) if path in names else t
    if isinstance(t, One):
        return t
    if isinstance(t, Star):
        return Star(_rename_leaves(t.child, names, path + "S"))
    return type(t)(_rename_leaves(t.left, names, path + "L"), _rename_leaves(t.right, names, path + "R"))
