"""Term generators for sweeps and property tests."""

from __future__ import annotations

import random
from functools import lru_cache
from itertools import product

from .terms import ONE, Join, Meet, Prod, Star, Term, Var

OPS = {"meet": Meet, "prod": Prod, "join": Join}


def random_term(rng: random.Random, max_leaves: int, names=("a", "b"), ops=("meet", "prod"),
                one_prob: float = 0.0, star_prob: float = 0.0, deep_star_prob: float = 0.0) -> Term:
    """Uniform-ish random tree with 1..max_leaves leaves.

    ``star_prob`` stars a variable leaf; ``deep_star_prob`` stars an inner node.
    """
    n = rng.randint(1, max_leaves)
    return _grow(rng, n, names, [OPS[o] for o in ops], one_prob, star_prob, deep_star_prob)


def _grow(rng, n, names, ops, one_prob, star_prob, deep_star_prob) -> Term:
    if n == 1:
        if rng.random() < one_prob:
            t = ONE
        else:
            t = Var(rng.choice(names))
            if rng.random() < star_prob:
                t = Star(t)
        return t
    k = rng.randint(1, n - 1)
    t = rng.choice(ops)(_grow(rng, k, names, ops, one_prob, star_prob, deep_star_prob),
                        _grow(rng, n - k, names, ops, one_prob, star_prob, deep_star_prob))
    if rng.random() < deep_star_prob:
        t = Star(t)
    return t


@lru_cache(maxsize=None)
def _exact(n: int, names: tuple, ops: tuple) -> tuple[Term, ...]:
    if n == 1:
        return tuple(Var(x) for x in names)
    out = []
    for k in range(1, n):
        for op, a, b in product(ops, _exact(k, names, ops), _exact(n - k, names, ops)):
            out.append(OPS[op](a, b))
    return tuple(out)


def all_terms(max_leaves: int, names=("a", "b"), ops=("meet", "prod")) -> list[Term]:
    """Every tree with at most ``max_leaves`` variable leaves."""
    return [t for n in range(1, max_leaves + 1) for t in _exact(n, tuple(names), tuple(ops))]
