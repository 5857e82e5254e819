import pytest
from hypothesis import given, strategies as st

from weq.decider import Mode, decide_full
from weq.qbf import (
    MAX_EVAL_VARS, Qbf, QbfError, encode_pi3, encode_sigma2, encoding_k, eval_qbf,
    literal_var, parse_qbf, render_qbf,
)
from weq.terms import Meet, Prod, Var, power, size, variables


def clause(vs):
    lit = st.sampled_from(vs).flatmap(lambda v: st.sampled_from([v, -v]))
    return st.lists(lit, min_size=1, max_size=2, unique_by=abs).map(tuple)


@st.composite
def sigma2(draw):
    nx, ny = draw(st.integers(1, 2)), draw(st.integers(1, 2))
    xs, ys = tuple(range(1, nx + 1)), tuple(range(nx + 1, nx + ny + 1))
    matrix = draw(st.lists(clause(xs + ys), min_size=1, max_size=2))
    return Qbf((("e", xs), ("a", ys)), tuple(matrix))


@st.composite
def pi3(draw):
    inner = draw(sigma2())
    z = max(inner.variables) + 1
    matrix = draw(st.lists(clause(inner.variables + (z,)), min_size=1, max_size=2))
    return Qbf((("a", (z,)),) + inner.blocks, tuple(matrix))


class TestParse:
    def test_sigma2(self):
        f = parse_qbf("e 1 0 / a 2 0 / 1 2 0")
        assert f == Qbf((("e", (1,)), ("a", (2,))), ((1, 2),))
        assert f.prefix == "ea"

    def test_pi3(self):
        f = parse_qbf("a 1 0 / e 2 0 / a 3 0 / -2 0")
        assert f.prefix == "aea" and f.matrix == ((-2,),)

    def test_comments_and_header(self):
        f = parse_qbf("c hello\np cnf 2 1\ne 1 0\na 2 0\n1 -2 0\n")
        assert f.matrix == ((1, -2),)

    @pytest.mark.parametrize("text", [
        "e 1 0 / 0",             # empty clause
        "e 1 0 / 1 2 0",         # free variable
        "e 1 0 / a 1 0 / 1 0",   # bound twice
        "e 1 / 1 0",             # missing terminator
        "e 1 0 / 1 0 / a 2 0",   # block after clauses
        "e 1 0 / x 0",
        "e -1 0 / 1 0",
    ])
    def test_rejects(self, text):
        with pytest.raises(QbfError):
            parse_qbf(text)

    @given(pi3())
    def test_round_trip(self, f):
        assert parse_qbf(render_qbf(f)) == f


class TestEval:
    @pytest.mark.parametrize("text, value", [
        ("e 1 0 / 1 0", True),
        ("a 1 0 / 1 0", False),
        ("e 1 0 / a 2 0 / 1 2 0 / 1 -2 0", True),
        ("a 1 0 / e 2 0 / 1 2 0 / -1 -2 0", True),
        ("e 1 0 / a 2 0 / -2 0", False),
    ])
    def test_examples(self, text, value):
        assert eval_qbf(parse_qbf(text)) is value

    def test_too_many_variables(self):
        n = MAX_EVAL_VARS + 1
        f = Qbf((("e", tuple(range(1, n + 1))),), ((1,),))
        with pytest.raises(QbfError):
            eval_qbf(f)


class TestEncode:
    def test_hand_example(self):
        f = parse_qbf("e 1 0 / a 2 0 / 1 2 0")
        assert encoding_k(f) == 3
        x, nx_, y, ny = Var("v1"), Var("n_v1"), Var("v2"), Var("n_v2")
        ineq = encode_sigma2(f)
        assert ineq.mode is Mode.POINTED
        assert ineq.lhs == Prod(Meet(power(x, 3), power(nx_, 3)), Meet(x, y))
        assert ineq.rhs == Prod(Prod(power(x, 3), power(nx_, 3)), Meet(power(y, 3), power(ny, 3)))

    def test_powers_left_nested(self):
        assert power(Var("x"), 3) == Prod(Prod(Var("x"), Var("x")), Var("x"))

    def test_literal_names(self):
        assert literal_var(3) == Var("v3") and literal_var(-3) == Var("n_v3")

    def test_wrong_prefix(self):
        with pytest.raises(QbfError):
            encode_sigma2(parse_qbf("a 1 0 / 1 0"))
        with pytest.raises(QbfError):
            encode_pi3(parse_qbf("e 1 0 / a 2 0 / 1 0"))

    def test_empty_outer_block(self):
        f = parse_qbf("a 0 / e 1 0 / a 2 0 / 1 2 0")
        assert encode_pi3(f) == encode_sigma2(parse_qbf("e 1 0 / a 2 0 / 1 2 0"))

    @given(sigma2() | pi3())
    def test_k_invariant(self, f):
        assert encoding_k(f) == 1 + sum(len(c) for c in f.matrix)

    @given(sigma2() | pi3())
    def test_size_bound(self, f):
        enc = encode_sigma2(f) if f.prefix == "ea" else encode_pi3(f)
        k, n_lit = encoding_k(f), sum(len(c) for c in f.matrix)
        for side in (enc.lhs, enc.rhs):
            assert size(side) <= 4 * k * (len(f.variables) + n_lit)

    @given(sigma2() | pi3())
    def test_literal_colours_fresh(self, f):
        enc = encode_sigma2(f) if f.prefix == "ea" else encode_pi3(f)
        names = variables(enc.lhs) | variables(enc.rhs)
        assert names <= {f"v{v}" for v in f.variables} | {f"n_v{v}" for v in f.variables}
        for v in f.variables:
            assert literal_var(v) != literal_var(-v)


class TestReduction:
    @given(sigma2())
    def test_sigma2(self, f):
        assert (decide_full(encode_sigma2(f)) is not None) == eval_qbf(f)

    @given(pi3())
    def test_pi3(self, f):
        assert (decide_full(encode_pi3(f)) is not None) == eval_qbf(f)
