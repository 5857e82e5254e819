"""Terms over meet, join, product, the constant 1 and finite parallelization.

ASCII syntax (loosest to tightest)::

    t | u     join
    t & u     meet
    t * u     product
    t^        parallelization (postfix, repeatable)

Binary operators are left-associative.  Variables match ``[a-z][a-z0-9_]*``.
"""

from __future__ import annotations

import re
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterator, Union

__all__ = [
    "Var", "One", "ONE", "Star", "Meet", "Join", "Prod", "Term",
    "ParseError", "parse_term", "render_term", "variables", "leaves",
    "subterm", "size", "subst", "rename", "normalize_star", "simplify_one_pointed",
    "slices", "ac_key", "is_square_free", "is_join_free", "is_star_normal",
    "contains_one", "prod_all", "meet_all", "join_all", "power",
]


# Terms are used as cache keys all over the decider, so each node stores its
# hash once instead of re-walking the tree on every lookup.
_h = field(default=0, init=False, repr=False, compare=False)


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    _h: int = _h

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("v", self.name)))

    def __hash__(self):
        return self._h


@dataclass(frozen=True, slots=True)
class One:
    def __hash__(self):
        return 0x5EED


@dataclass(frozen=True, slots=True)
class Star:
    child: "Term"
    _h: int = _h

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(("s", self.child)))

    def __hash__(self):
        return self._h


@dataclass(frozen=True, slots=True)
class _Binary:
    left: "Term"
    right: "Term"
    _h: int = _h

    def __post_init__(self):
        object.__setattr__(self, "_h", hash((type(self).__name__, self.left, self.right)))

    def __hash__(self):
        return self._h


@dataclass(frozen=True, slots=True, eq=True)
class Meet(_Binary):
    __hash__ = _Binary.__hash__


@dataclass(frozen=True, slots=True, eq=True)
class Join(_Binary):
    __hash__ = _Binary.__hash__


@dataclass(frozen=True, slots=True, eq=True)
class Prod(_Binary):
    __hash__ = _Binary.__hash__


Term = Union[Var, One, Star, Meet, Join, Prod]
ONE = One()

_BINARY = (Meet, Join, Prod)
_SYMBOL = {Join: "|", Meet: "&", Prod: "*"}
_PREC = {Join: 1, Meet: 2, Prod: 3, Star: 4, Var: 5, One: 5}

VAR_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


# -- parsing -----------------------------------------------------------------

class ParseError(ValueError):
    """Syntax error, carrying a 1-based line and column."""

    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"{message} at line {line}, column {col}")
        self.message = message
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(r"\s+|[a-z][a-z0-9_]*|[0-9]+|[|&*^()]|.", re.S)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        tok = m.group()
        if tok.isspace():
            continue
        if tok[0].isdigit():
            if tok != "1":
                raise ParseError(f"numeral {tok!r} is not a term (only 1 is)", *_linecol(text, m.start()))
            kind = "one"
        elif VAR_RE.match(tok):
            kind = "var"
        elif tok in "|&*^()":
            kind = tok
        else:
            raise ParseError(f"unexpected character {tok!r}", *_linecol(text, m.start()))
        tokens.append((kind, tok, m.start()))
    tokens.append(("eof", "", len(text)))
    return tokens


def _linecol(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> str:
        return self.tokens[self.pos][0]

    def fail(self, message: str):
        offset = self.tokens[self.pos][2]
        raise ParseError(message, *_linecol(self.text, offset))

    def take(self, kind: str):
        if self.peek() != kind:
            found = self.tokens[self.pos][1] or "end of input"
            self.fail(f"expected {kind!r}, found {found!r}")
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def binary(self, sub, symbol: str, node):
        left = sub()
        while self.peek() == symbol:
            self.pos += 1
            left = node(left, sub())
        return left

    def join(self):
        return self.binary(self.meet, "|", Join)

    def meet(self):
        return self.binary(self.prod, "&", Meet)

    def prod(self):
        return self.binary(self.star, "*", Prod)

    def star(self):
        t = self.atom()
        while self.peek() == "^":
            self.pos += 1
            t = Star(t)
        return t

    def atom(self):
        kind = self.peek()
        if kind == "var":
            return Var(self.take("var")[1])
        if kind == "one":
            self.pos += 1
            return ONE
        if kind == "(":
            self.pos += 1
            t = self.join()
            self.take(")")
            return t
        found = self.tokens[self.pos][1] or "end of input"
        self.fail(f"expected a term, found {found!r}")


def parse_term(text: str) -> Term:
    """Parse the ASCII term syntax into a tree."""
    p = _Parser(text)
    t = p.join()
    if p.peek() != "eof":
        p.fail(f"unexpected {p.tokens[p.pos][1]!r}")
    return t


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, One):
        return "1"
    if isinstance(t, Star):
        inner = render_term(t.child)
        if _PREC[type(t.child)] < _PREC[Star]:
            inner = f"({inner})"
        return inner + "^"
    prec = _PREC[type(t)]
    left, right = render_term(t.left), render_term(t.right)
    if _PREC[type(t.left)] < prec:
        left = f"({left})"
    if _PREC[type(t.right)] <= prec:
        right = f"({right})"
    return f"{left} {_SYMBOL[type(t)]} {right}"


# -- traversal ---------------------------------------------------------------

def leaves(t: Term, path: str = "") -> Iterator[tuple[str, Term]]:
    """Yield ``(occurrence path, leaf)`` in canonical (lexicographic path) order.

    A leaf is a variable, the constant 1, or a star applied directly to one of
    those.  Paths spell the route from the root: L/R for binary children and
    S for the child of a star.
    """
    if isinstance(t, (Var, One)):
        yield path, t
    elif isinstance(t, Star):
        if isinstance(t.child, (Var, One)):
            yield path, t
        else:
            yield from leaves(t.child, path + "S")
    else:
        yield from leaves(t.left, path + "L")
        yield from leaves(t.right, path + "R")


def subterm(t: Term, path: str) -> Term:
    for step in path:
        if step == "L" and isinstance(t, _BINARY):
            t = t.left
        elif step == "R" and isinstance(t, _BINARY):
            t = t.right
        elif step == "S" and isinstance(t, Star):
            t = t.child
        else:
            raise KeyError(f"no subterm at path {path!r}")
    return t


def replace_at(t: Term, path: str, new: Term) -> Term:
    """``t`` with the subterm at ``path`` replaced by ``new``."""
    if not path:
        return new
    d, rest = path[0], path[1:]
    if d == "S":
        return Star(replace_at(t.child, rest, new))
    if d == "L":
        return type(t)(replace_at(t.left, rest, new), t.right)
    return type(t)(t.left, replace_at(t.right, rest, new))


def size(t: Term) -> int:
    """Number of nodes."""
    if isinstance(t, (Var, One)):
        return 1
    if isinstance(t, Star):
        return 1 + size(t.child)
    return 1 + size(t.left) + size(t.right)


def variables(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, One):
        return frozenset()
    if isinstance(t, Star):
        return variables(t.child)
    return variables(t.left) | variables(t.right)


def _map_binary(t: Term, f) -> Term:
    return type(t)(f(t.left), f(t.right))


def subst(t: Term, x: str, r: Term) -> Term:
    """Replace every occurrence of variable ``x`` by ``r``."""
    if isinstance(t, Var):
        return r if t.name == x else t
    if isinstance(t, One):
        return t
    if isinstance(t, Star):
        return Star(subst(t.child, x, r))
    return _map_binary(t, lambda s: subst(s, x, r))


def rename(t: Term, mapping: dict[str, Term]) -> Term:
    """Simultaneous substitution of variables."""
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, One):
        return t
    if isinstance(t, Star):
        return Star(rename(t.child, mapping))
    return _map_binary(t, lambda s: rename(s, mapping))


def contains_one(t: Term) -> bool:
    if isinstance(t, One):
        return True
    if isinstance(t, Var):
        return False
    if isinstance(t, Star):
        return contains_one(t.child)
    return contains_one(t.left) or contains_one(t.right)


def is_join_free(t: Term) -> bool:
    if isinstance(t, Join):
        return False
    if isinstance(t, (Var, One)):
        return True
    if isinstance(t, Star):
        return is_join_free(t.child)
    return is_join_free(t.left) and is_join_free(t.right)


def is_star_normal(t: Term) -> bool:
    """True iff every star sits directly on a variable."""
    if isinstance(t, Star):
        return isinstance(t.child, Var)
    if isinstance(t, (Var, One)):
        return True
    return is_star_normal(t.left) and is_star_normal(t.right)


def _fold(node, items: list[Term], empty: Term | None = None) -> Term:
    if not items:
        if empty is None:
            raise ValueError("empty fold")
        return empty
    acc = items[0]
    for item in items[1:]:
        acc = node(acc, item)
    return acc


def prod_all(items, empty: Term | None = ONE) -> Term:
    """Left-nested product; the empty product is 1."""
    return _fold(Prod, list(items), empty)


def meet_all(items) -> Term:
    return _fold(Meet, list(items))


def join_all(items) -> Term:
    return _fold(Join, list(items))


def power(t: Term, k: int) -> Term:
    """``t * t * ... * t`` (k copies, left-nested)."""
    if k < 1:
        raise ValueError("power needs k >= 1")
    return prod_all([t] * k)


# -- rewriting ---------------------------------------------------------------

def normalize_star(t: Term) -> Term:
    """Push parallelization down to variables.

    Uses (a|b)^ = a^ * b^, (a&b)^ = a^ & b^, (a*b)^ = 1 | a * a^ * b * b^,
    1^ = 1 and (a^)^ = a^.
    """
    if isinstance(t, (Var, One)):
        return t
    if isinstance(t, Star):
        return _push_star(t.child)
    return _map_binary(t, normalize_star)


def _push_star(c: Term) -> Term:
    # normal form of c^
    if isinstance(c, Var):
        return Star(c)
    if isinstance(c, One):
        return ONE
    if isinstance(c, Star):
        return _push_star(c.child)
    if isinstance(c, Join):
        return Prod(_push_star(c.left), _push_star(c.right))
    if isinstance(c, Meet):
        return Meet(_push_star(c.left), _push_star(c.right))
    a, b = c.left, c.right
    body = Prod(Prod(Prod(normalize_star(a), _push_star(a)), normalize_star(b)), _push_star(b))
    return Join(ONE, body)


def simplify_one_pointed(t: Term) -> Term:
    """Return 1, or a 1-free term equal to ``t`` over pointed degrees."""
    if isinstance(t, (Var, One)):
        return t
    if isinstance(t, Star):
        c = simplify_one_pointed(t.child)
        return ONE if isinstance(c, One) else Star(c)
    a, b = simplify_one_pointed(t.left), simplify_one_pointed(t.right)
    if isinstance(t, Meet):
        if isinstance(a, One) or isinstance(b, One):
            return ONE
    elif isinstance(a, One):
        # 1 * b = b, and 1 | b = b since 1 is bottom
        return b
    elif isinstance(b, One):
        return a
    return type(t)(a, b)


@lru_cache(maxsize=1 << 16)
def ac_key(t: Term):
    """Structural key modulo associativity/commutativity of meet, product, join."""
    if isinstance(t, Var):
        return ("v", t.name)
    if isinstance(t, One):
        return ("1",)
    if isinstance(t, Star):
        return ("s", ac_key(t.child))
    kind = type(t)
    parts = []
    stack = [t]
    while stack:
        s = stack.pop()
        if type(s) is kind:
            stack.append(s.right)
            stack.append(s.left)
        else:
            parts.append(ac_key(s))
    return (_SYMBOL[kind], tuple(sorted(parts)))


def slices(t: Term, limit: int | None = None) -> tuple[Term, ...]:
    """The join-free terms whose join is ``t``, deduplicated modulo AC.

    Order is deterministic: left operand first, first representative kept.
    Raises OverflowError as soon as an intermediate set exceeds ``limit``.
    """
    if isinstance(t, (Var, One, Star)):
        if isinstance(t, Star) and not is_join_free(t.child):
            raise ValueError("slices() needs star-normalized input")
        return (t,)
    left, right = slices(t.left, limit), slices(t.right, limit)
    if isinstance(t, Join):
        out = left + right
    else:
        if limit is not None and len(left) * len(right) > limit * limit:
            raise OverflowError(f"more than {limit} slices")
        out = tuple(type(t)(a, b) for a in left for b in right)
    seen = set()
    kept = []
    for s in out:
        k = ac_key(s)
        if k not in seen:
            seen.add(k)
            kept.append(s)
    if limit is not None and len(kept) > limit:
        raise OverflowError(f"more than {limit} slices")
    return tuple(kept)


def _flatten(t: Term, kind) -> list[Term]:
    if type(t) is kind:
        return _flatten(t.left, kind) + _flatten(t.right, kind)
    return [t]


def is_square_free(t: Term) -> bool:
    """Whether ``t`` is generated, modulo AC, by ``x | t * x | 1 | t & t``."""
    if not is_join_free(t) or _has_star(t):
        raise ValueError("is_square_free is defined on meet/product/1 terms only")
    return _square_free(t)


def _has_star(t: Term) -> bool:
    if isinstance(t, Star):
        return True
    if isinstance(t, (Var, One)):
        return False
    return _has_star(t.left) or _has_star(t.right)


def _square_free(t: Term) -> bool:
    if isinstance(t, (Var, One)):
        return True
    if isinstance(t, Meet):
        return all(_square_free(s) for s in _flatten(t, Meet))
    compound = [s for s in _flatten(t, Prod) if not isinstance(s, (Var, One))]
    return len(compound) <= 1 and all(_square_free(s) for s in compound)
