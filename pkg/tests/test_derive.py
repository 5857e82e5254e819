import random

import pytest
from hypothesis import given, strategies as st

from weq.axioms import check_derivation
from weq.decider import Inequality, Mode, ReductionWitness, SliceReduction, decide_full, verify_witness
from weq.derive import (
    DerivationError, compose, derive_one_free, derive_square_free, derive_square_free_any,
    derive_star_normal, substitute_derivation, totalize_witness,
)
from weq.gen import random_term
from weq.probe import probe_derivation
from weq.suites import random_square_free
from weq.terms import ONE, Meet, Prod, Star, Var, is_square_free, normalize_star, parse_term, simplify_one_pointed, size

from strategies import meet_prod, terms

P, G = Mode.POINTED, Mode.GENERAL
a, b, c = map(Var, "abc")


def both_ways(d):
    """The conclusion checks, and so does the step marked as its converse."""
    assert check_derivation(d)
    lhs, rhs = d.steps[d.converse].proves
    assert (lhs, rhs) == (d.conclusion.rhs, d.conclusion.lhs)


class TestStarNormal:
    def test_variable_is_reflexivity(self):
        d = derive_star_normal(a)
        assert [s.rule for s in d.steps] == ["reflexivity"] and d.converse == 0
        both_ways(d)

    def test_join(self):
        d = derive_star_normal(parse_term("(a | b)^"))
        assert d.conclusion.rhs == Prod(Star(a), Star(b))
        assert len(d.steps) == 2
        both_ways(d)

    @pytest.mark.parametrize("text", ["(a * b)^", "a^^", "1^", "(a & b^)^ * c", "((a | b) * c)^"])
    def test_examples(self, text):
        t = parse_term(text)
        d = derive_star_normal(t)
        assert d.conclusion == Inequality(t, normalize_star(t), G)
        assert len(d) <= 8 * size(t)
        both_ways(d)

    @given(terms(max_leaves=6) | terms(max_leaves=4).map(Star))
    def test_step_bound(self, t):
        d = derive_star_normal(t)
        assert len(d) <= 8 * size(t)
        both_ways(d)

    def test_no_pointed_axioms(self):
        d = derive_star_normal(parse_term("(1 | a * b)^"))
        assert all(s.axiom != "bottom-pointed" for s in d.steps)


class TestOneFree:
    @given(terms(names=("a", "b"), max_leaves=5))
    def test_conclusion(self, t):
        d = derive_one_free(t)
        assert check_derivation(d)
        assert d.conclusion == Inequality(t, simplify_one_pointed(t), P)


class TestSquareFree:
    def test_identity(self):
        d = derive_square_free(Prod(a, b), Prod(a, b))
        assert check_derivation(d) and d.conclusion == Inequality(Prod(a, b), Prod(a, b), P)

    def test_half_distributivity(self):
        t, u = parse_term("(a * b) & c"), parse_term("a * (b & c)")
        assert check_derivation(derive_square_free(t, u))

    def test_invalid(self):
        with pytest.raises(DerivationError, match="not valid"):
            derive_square_free(a, Meet(a, b))

    def test_not_square_free(self):
        with pytest.raises(DerivationError):
            derive_square_free(a, parse_term("(a & b) * (c & d)"))

    def test_repeated_variables_need_any(self):
        t, u = parse_term("a * (b & c)"), parse_term("a * (b & (a * c))")
        with pytest.raises(DerivationError):
            derive_square_free(t, u)

    @pytest.mark.parametrize("seed", range(15))
    def test_any_round_trip(self, seed):
        rng = random.Random(seed)
        while True:
            t = random_term(rng, 5, names=("a", "b", "c"), one_prob=0.1)
            u = random_square_free(rng, rng.randint(1, 4))
            q = Inequality(t, u, P)
            if decide_full(q) is not None:
                break
        d = derive_square_free_any(t, u)
        assert check_derivation(d) and d.conclusion == q

    @given(meet_prod(("a", "b"), 4), meet_prod(("a", "b"), 3))
    def test_any_exists_iff_valid(self, t, u):
        if not is_square_free(u):
            return
        valid = decide_full(Inequality(t, u, P)) is not None
        try:
            d = derive_square_free_any(t, u)
        except DerivationError:
            assert not valid
        else:
            assert valid and check_derivation(d)


class TestTotalize:
    def _check(self, t, u, w):
        tot = totalize_witness(t, u, w)
        assert verify_witness(Inequality(tot.lhs, tot.rhs), tot.witness)
        assert check_derivation(tot.lhs_derivation) and check_derivation(tot.rhs_derivation)
        assert tot.lhs_derivation.conclusion == Inequality(t, tot.lhs)
        assert tot.rhs_derivation.conclusion == Inequality(tot.rhs, u)
        return tot

    def test_identity(self):
        t = parse_term("a * (b & c)")
        tot = self._check(t, t, decide_full(Inequality(t, t)))
        assert tot.lhs == tot.rhs == t
        assert tot.mapping == {"L": "L", "RL": "RL", "RR": "RR"}

    def test_copying_instance_duplicates(self):
        t, u = parse_term("a * (b & c)"), parse_term("a * (b & (a * c))")
        tot = self._check(t, u, decide_full(Inequality(t, u)))
        assert sorted(tot.mapping) == ["L", "RL", "RRL", "RRR"]
        assert sorted(tot.mapping.values()) == sorted(set(tot.mapping.values()))

    def test_partial_witness_prunes_product(self):
        t, u = parse_term("a * (b & c)"), parse_term("a * (b & (a * c))")
        w = ReductionWitness(P, (SliceReduction(t, u, (("L", "L"), ("RL", "RL"), ("RRR", "RR"))),))
        tot = self._check(t, u, w)
        assert tot.rhs == t and tot.lhs == t

    def test_unhit_lhs_vertex_is_cut(self):
        t, u = parse_term("a & b"), a
        tot = self._check(t, u, decide_full(Inequality(t, u)))
        assert tot.lhs == a and tot.mapping == {"": ""}

    def test_one(self):
        tot = self._check(ONE, a, decide_full(Inequality(ONE, a)))
        assert tot.lhs == tot.rhs == ONE

    def test_rejects_bad_witness(self):
        w = ReductionWitness(P, (SliceReduction(a, b, (("", ""),)),))
        with pytest.raises(DerivationError):
            totalize_witness(a, b, w)

    def test_duplication(self):
        t, u = a, Meet(a, a)
        tot = self._check(t, u, decide_full(Inequality(t, u)))
        assert tot.lhs == Meet(a, a)


class TestCompose:
    def test_chain(self):
        d1 = derive_square_free(parse_term("(a * b) & c"), parse_term("a * (b & c)"))
        d2 = derive_square_free(parse_term("a * (b & c)"), parse_term("a * b"))
        d = compose(d1, d2)
        assert check_derivation(d)
        assert d.conclusion == Inequality(parse_term("(a * b) & c"), parse_term("a * b"), P)

    def test_substitute(self):
        d = derive_square_free(Meet(a, b), a)
        d2 = substitute_derivation(d, {"a": Star(c), "b": Prod(c, c)})
        assert check_derivation(d2)
        assert d2.conclusion == Inequality(Meet(Star(c), Prod(c, c)), Star(c), P)


class TestProbe:
    def test_copying_instance_found_in_general_mode(self):
        # the bounded search does reach this one with meet duplication available
        r = probe_derivation(parse_term("a * (b & c)"), parse_term("a * (b & (a * c))"), G)
        assert r.found and r.depth == 4
        assert check_derivation(r.derivation)
        assert r.derivation.conclusion.mode is G

    def test_not_found_for_invalid(self):
        r = probe_derivation(a, Meet(a, b), P, depth=3)
        assert not r.found and "not found" in str(r)

    @given(st.sampled_from(["(a * b) & c <= a * (b & c)", "a & b <= b", "a <= a * a"]))
    def test_found_derivations_check(self, text):
        lhs, rhs = (parse_term(s) for s in text.split("<="))
        r = probe_derivation(lhs, rhs, G, depth=3)
        assert r.found and check_derivation(r.derivation)
