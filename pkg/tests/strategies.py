"""Hypothesis strategies for terms."""

from hypothesis import strategies as st

from weq.terms import ONE, Join, Meet, Prod, Star, Var

NAMES = ("a", "b", "c")


def terms(names=NAMES, join=True, one=True, star=True, max_leaves=6):
    leaf = st.sampled_from([Var(n) for n in names])
    if one:
        leaf = leaf | st.just(ONE)
    if star:
        leaf = leaf | st.sampled_from([Star(Var(n)) for n in names])
    nodes = [Meet, Prod] + ([Join] if join else [])

    def extend(children):
        return st.builds(lambda k, l, r: k(l, r), st.sampled_from(nodes), children, children)

    return st.recursive(leaf, extend, max_leaves=max_leaves)


def meet_prod(names=NAMES, max_leaves=6):
    return terms(names, join=False, one=False, star=False, max_leaves=max_leaves)
