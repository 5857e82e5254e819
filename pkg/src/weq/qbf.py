"""Quantified boolean formulas in prenex CNF and their encodings as inequalities.

Literals are nonzero integers as in QDIMACS.  In encodings, the positive
literal of variable ``n`` becomes the term variable ``v<n>`` and the negative
one the fresh variable ``n_v<n>``, so a literal and its negation always get
different colours.
"""

from __future__ import annotations

from dataclasses import dataclass

from .decider import Inequality, Mode
from .terms import Join, Meet, Prod, Term, Var, meet_all, power, prod_all

__all__ = [
    "Qbf", "QbfError", "parse_qbf", "render_qbf", "eval_qbf", "literal_var",
    "encoding_k", "encode_sigma2", "encode_pi3", "MAX_EVAL_VARS",
]

MAX_EVAL_VARS = 20


class QbfError(ValueError):
    pass


@dataclass(frozen=True)
class Qbf:
    blocks: tuple[tuple[str, tuple[int, ...]], ...]   # ("e" | "a", variables)
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        bound: set[int] = set()
        for q, vs in self.blocks:
            if q not in ("e", "a"):
                raise QbfError(f"unknown quantifier {q!r}")
            for v in vs:
                if v <= 0:
                    raise QbfError(f"variable {v} must be positive")
                if v in bound:
                    raise QbfError(f"variable {v} bound twice")
                bound.add(v)
        for clause in self.matrix:
            if not clause:
                raise QbfError("empty clause")
            for lit in clause:
                if lit == 0 or abs(lit) not in bound:
                    raise QbfError(f"free variable {abs(lit)}")

    @property
    def prefix(self) -> str:
        return "".join(q for q, _ in self.blocks)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(v for _, vs in self.blocks for v in vs)


def parse_qbf(text: str) -> Qbf:
    """Read the QDIMACS-like format: ``e``/``a`` block lines, then clauses.

    Every line ends with ``0``; ``c`` lines and an optional ``p`` header are
    ignored.  A ``/`` may stand in for a newline.
    """
    blocks: list[tuple[str, tuple[int, ...]]] = []
    matrix: list[tuple[int, ...]] = []
    for lineno, line in enumerate(text.replace("/", "\n").splitlines(), 1):
        words = line.split()
        if not words or words[0] in ("c", "p"):
            continue
        head = words[0]
        body = words[1:] if head in ("e", "a") else words
        try:
            nums = [int(w) for w in body]
        except ValueError:
            raise QbfError(f"line {lineno}: expected integers") from None
        if not nums or nums[-1] != 0 or 0 in nums[:-1]:
            raise QbfError(f"line {lineno}: must end with a single 0")
        nums.pop()
        if head in ("e", "a"):
            if matrix:
                raise QbfError(f"line {lineno}: quantifier block after clauses")
            if any(n < 0 for n in nums):
                raise QbfError(f"line {lineno}: negative variable in a block")
            blocks.append((head, tuple(nums)))
        else:
            if not nums:
                raise QbfError(f"line {lineno}: empty clause")
            matrix.append(tuple(nums))
    try:
        return Qbf(tuple(blocks), tuple(matrix))
    except QbfError as exc:
        raise QbfError(str(exc)) from None


def render_qbf(q: Qbf) -> str:
    lines = [" ".join([b, *map(str, vs), "0"]) for b, vs in q.blocks]
    lines += [" ".join([*map(str, c), "0"]) for c in q.matrix]
    return "\n".join(lines) + "\n"


def eval_qbf(q: Qbf) -> bool:
    """Truth value by recursion over the prefix."""
    order = [(b, v) for b, vs in q.blocks for v in vs]
    if len(order) > MAX_EVAL_VARS:
        raise QbfError(f"more than {MAX_EVAL_VARS} bound variables")
    value: dict[int, bool] = {}

    def sat() -> bool:
        return all(any(value[abs(l)] == (l > 0) for l in c) for c in q.matrix)

    def go(i: int) -> bool:
        if i == len(order):
            return sat()
        b, v = order[i]
        for bit in (False, True):
            value[v] = bit
            if go(i + 1) == (b == "e"):
                return b == "e"
        return b == "a"

    return go(0)


def literal_var(lit: int) -> Var:
    return Var(f"v{lit}" if lit > 0 else f"n_v{-lit}")


def encoding_k(q: Qbf) -> int:
    """One more than the total number of literal occurrences."""
    return 1 + sum(len(c) for c in q.matrix)


def _pair(v: int, k: int, node) -> Term:
    return node(power(literal_var(v), k), power(literal_var(-v), k))


def _parts(q: Qbf, xs, ys) -> tuple[list[Term], list[Term], list[Term], list[Term]]:
    k = encoding_k(q)
    e_l = [_pair(x, k, Meet) for x in xs]
    e_r = [_pair(x, k, Prod) for x in xs]
    a = [_pair(y, k, Meet) for y in ys]
    f = [meet_all(literal_var(l) for l in c) for c in q.matrix]
    return e_l, e_r, a, f


def _expect(q: Qbf, shape: str) -> None:
    if q.prefix != shape:
        raise QbfError(f"expected quantifier prefix {shape!r}, got {q.prefix!r}")


def encode_sigma2(q: Qbf) -> Inequality:
    """Pointed inequality valid iff the exists-forall formula is true."""
    _expect(q, "ea")
    (_, xs), (_, ys) = q.blocks
    e_l, e_r, a, f = _parts(q, xs, ys)
    return Inequality(Prod(prod_all(e_l), prod_all(f)), Prod(prod_all(e_r), prod_all(a)), Mode.POINTED)


def encode_pi3(q: Qbf) -> Inequality:
    """Pointed inequality valid iff the forall-exists-forall formula is true.

    With an empty outer block the result coincides with ``encode_sigma2``.
    """
    _expect(q, "aea")
    (_, zs), (_, xs), (_, ys) = q.blocks
    if not zs:
        return encode_sigma2(Qbf(q.blocks[1:], q.matrix))
    k = encoding_k(q)
    e_l, e_r, a, f = _parts(q, xs, ys)
    z_l = [Join(literal_var(z), literal_var(-z)) for z in zs]
    z_r = [_pair(z, k, Join) for z in zs]
    return Inequality(
        prod_all([prod_all(z_l), prod_all(e_l), prod_all(f)]),
        prod_all([prod_all(z_r), prod_all(e_r), prod_all(a)]),
        Mode.POINTED,
    )
