"""Self-test suites: each compares two independent routes on a sweep.

``run_suite(name, quick=False)`` returns a ``SuiteResult``.  The full sizes
are the acceptance sizes; ``quick`` shrinks every sweep for a fast smoke run.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from itertools import combinations

import networkx as nx

from .axioms import SCHEMAS, check_derivation, horn_premises, instantiate_axiom
from .cograph import contains_max_clique, interpret, is_cograph, max_cliques
from .decider import Budget, Inequality, Mode, decide_full, parse_inequality, pointed_general_bridge, verify_witness
from .derive import derive_square_free_any, derive_star_normal, totalize_witness
from .gen import all_terms, random_term
from .oracle import brute_force_decide
from .qbf import Qbf, encode_pi3, encode_sigma2, eval_qbf
from .terms import ONE, Join, Meet, Prod, Term, Var, leaves, size

__all__ = ["SuiteResult", "SUITES", "run_suite", "sigma2_sweep", "pi3_sweep", "random_square_free"]


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    failed: int = 0
    seconds: float = 0.0
    failures: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.passed > 0

    def record(self, ok: bool, what) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.failures) < 10:
                self.failures.append(str(what))

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: {self.passed} passed, {self.failed} failed, {self.seconds:.1f}s"


def _valid(q: Inequality, budget: Budget | None = None) -> bool:
    return decide_full(q, budget) is not None


# -- oracle agreement --------------------------------------------------------

def suite_oracle_basic(res: SuiteResult, quick: bool) -> None:
    ts = all_terms(3 if quick else 4)
    res.notes["terms"] = len(ts)
    budget = Budget.from_env()   # resolved once; there are a million pairs
    for lhs in ts:
        for rhs in ts:
            for mode in (Mode.POINTED, Mode.GENERAL):
                q = Inequality(lhs, rhs, mode)
                res.record(_valid(q, budget) == brute_force_decide(q, budget), q)


def _full_term(rng: random.Random, n: int) -> Term:
    return random_term(rng, n, ops=("meet", "prod", "join"), star_prob=0.3)


def suite_oracle_full(res: SuiteResult, quick: bool) -> None:
    rng = random.Random(2)
    for _ in range(200 if quick else 2000):
        mode = rng.choice((Mode.POINTED, Mode.GENERAL))
        q = Inequality(_full_term(rng, 3), _full_term(rng, 3), mode)
        res.record(_valid(q) == brute_force_decide(q), q)


# -- axioms and key instances -----------------------------------------------

def _axiom_term(rng: random.Random) -> Term:
    return random_term(rng, 6, names=("a", "b", "c"), ops=("meet", "prod", "join"),
                       one_prob=0.1, star_prob=0.2, deep_star_prob=0.1)


def suite_axioms(res: SuiteResult, quick: bool) -> None:
    rng = random.Random(3)
    for name, s in SCHEMAS.items():
        modes = [Mode.POINTED] if s.pointed_only else [Mode.POINTED, Mode.GENERAL]
        for _ in range(10 if quick else 100):
            bind = {m: _axiom_term(rng) for m in s.metavariables}
            # make the Horn premises hold so the conclusion is actually exercised
            if name == "meet-glb":
                bind["a"] = Meet(Meet(bind["b"], _axiom_term(rng)), Meet(bind["c"], _axiom_term(rng)))
            elif name == "join-lub":
                bind["a"] = Join(Join(bind["b"], _axiom_term(rng)), Join(bind["c"], _axiom_term(rng)))
            for mode in modes:
                if s.is_horn and not all(_valid(p) for p in horn_premises(name, bind, mode)):
                    res.record(False, f"{name}: premises failed to hold")
                    continue
                for q in instantiate_axiom(name, bind, mode):
                    res.record(_valid(q), f"{name}: {q}")


INSTANCES = (
    ("a*(b&c) <= a*(b&(a*c))", Mode.GENERAL, True),
    ("a*(b&c) <= a*(b&(a*c))", Mode.POINTED, True),
    ("a <= a&b", Mode.POINTED, False),
    ("a <= a&b", Mode.GENERAL, False),
    ("(a*b)&c <= a*(b&c)", Mode.POINTED, True),
    ("(a*b)&c <= a*(b&c)", Mode.GENERAL, True),
)


def suite_instances(res: SuiteResult, quick: bool) -> None:
    for text, mode, expect in INSTANCES:
        q = parse_inequality(text, mode)
        w = decide_full(q)
        ok = (w is not None) == expect and (w is None or verify_witness(q, w))
        res.record(ok and brute_force_decide(q) == expect, f"{q} expected {expect}")


# -- qbf ---------------------------------------------------------------------

def _matrices(vs):
    lits = [lit for v in vs for lit in (v, -v)]
    clauses = [c for r in (1, 2) for c in combinations(lits, r)]
    return [m for r in (1, 2) for m in combinations(clauses, r)]


def sigma2_sweep():
    """Every exists-forall CNF with 1-2 variables per block and 1-2 clauses of 1-2 literals."""
    for ne in (1, 2):
        for na in (1, 2):
            xs = tuple(range(1, ne + 1))
            ys = tuple(range(ne + 1, ne + na + 1))
            for m in _matrices(xs + ys):
                yield Qbf((("e", xs), ("a", ys)), m)


def pi3_sweep():
    """As ``sigma2_sweep`` with one outer universal variable in front."""
    for ne in (1, 2):
        for na in (1, 2):
            xs = tuple(range(2, ne + 2))
            ys = tuple(range(ne + 2, ne + na + 2))
            for m in _matrices((1,) + xs + ys):
                yield Qbf((("a", (1,)), ("e", xs), ("a", ys)), m)


def suite_qbf(res: SuiteResult, quick: bool) -> None:
    for label, sweep, enc in (("sigma2", sigma2_sweep, encode_sigma2), ("pi3", pi3_sweep, encode_pi3)):
        t0 = time.perf_counter()
        qs = list(sweep())
        if quick:
            qs = qs[::10]
        for q in qs:
            res.record(_valid(enc(q)) == eval_qbf(q), q)
        res.notes[label] = {"formulas": len(qs), "seconds": round(time.perf_counter() - t0, 2)}


# -- structural laws ---------------------------------------------------------

def _basic_term(rng: random.Random, n: int, names=("a", "b")) -> Term:
    return random_term(rng, n, names=names)


def suite_bridge(res: SuiteResult, quick: bool) -> None:
    rng = random.Random(6)
    for _ in range(40 if quick else 200):
        lhs, rhs = _basic_term(rng, 3, ("a", "b", "c")), _basic_term(rng, 3, ("a", "b", "c"))
        pointed = _valid(Inequality(lhs, rhs, Mode.POINTED))
        res.record(pointed == _valid(pointed_general_bridge(lhs, rhs)), f"{lhs} / {rhs}")


def _joinfree_term(rng: random.Random, n: int) -> Term:
    return random_term(rng, n, names=("a", "b", "c"), one_prob=0.1, star_prob=0.2)


def suite_join_slice(res: SuiteResult, quick: bool) -> None:
    rng = random.Random(7)
    for _ in range(60 if quick else 300):
        t, u, v = (_joinfree_term(rng, 3) for _ in range(3))
        whole = _valid(Inequality(t, Join(u, v)))
        parts = _valid(Inequality(t, u)) or _valid(Inequality(t, v))
        res.record(whole == parts, f"{t} / {u} / {v}")


def _graph_cliques(g) -> frozenset:
    nxg = nx.Graph()
    nxg.add_nodes_from(g.vertices)
    nxg.add_edges_from(g.edges)
    return frozenset(frozenset(c) for c in nx.find_cliques(nxg))


def suite_structure(res: SuiteResult, quick: bool) -> None:
    rng = random.Random(8)
    for _ in range(100 if quick else 1000):
        t = random_term(rng, 10, names=("a", "b", "c"), one_prob=0.1, star_prob=0.2)
        g = interpret(t)
        res.record(is_cograph(g) and max_cliques(t) == _graph_cliques(g), t)
    for _ in range(1000 if quick else 10000):
        t = random_term(rng, 6, names=("a", "b", "c"), one_prob=0.15, star_prob=0.2)
        g = interpret(t)
        chosen = {v for v in g.vertices if rng.random() < 0.5}
        brute = any(
            all(v in chosen or g.colour[v] is None for v in c) for c in _graph_cliques(g)
        )
        res.record(contains_max_clique(t, chosen) == brute, (t, sorted(chosen)))


# -- derivations -------------------------------------------------------------

def random_square_free(rng: random.Random, n: int, names=("a", "b", "c")) -> Term:
    """Random term of the grammar x | t * x | 1 | t & t."""
    if n <= 1:
        return ONE if rng.random() < 0.1 else Var(rng.choice(names))
    if rng.random() < 0.5:
        k = rng.randint(1, n - 1)
        return Meet(random_square_free(rng, k, names), random_square_free(rng, n - k, names))
    x = Var(rng.choice(names))
    rest = random_square_free(rng, n - 1, names)
    return Prod(rest, x) if rng.random() < 0.5 else Prod(x, rest)


def _valid_pairs(rng: random.Random, k: int):
    while k:
        t = random_term(rng, 6, names=("a", "b", "c"), one_prob=0.1)
        u = random_square_free(rng, rng.randint(1, 5))
        q = Inequality(t, u, Mode.POINTED)
        w = decide_full(q)
        if w is not None:
            k -= 1
            yield q, w


def suite_derive(res: SuiteResult, quick: bool) -> None:
    rng = random.Random(9)
    for q, _ in _valid_pairs(rng, 20 if quick else 100):
        d = derive_square_free_any(q.lhs, q.rhs)
        res.record(check_derivation(d) and d.conclusion == q, q)
    worst = 0.0
    for _ in range(40 if quick else 200):
        t = random_term(rng, 8, names=("a", "b", "c"), ops=("meet", "prod", "join"),
                        one_prob=0.1, star_prob=0.2, deep_star_prob=0.3)
        d = derive_star_normal(t)
        worst = max(worst, len(d) / size(t))
        res.record(check_derivation(d) and len(d) <= 8 * size(t), t)
    res.notes["worst_steps_per_node"] = round(worst, 3)


def _is_total_bijection(t: Term, u: Term, mapping: dict[str, str]) -> bool:
    lhs_paths = [p for p, _ in leaves(t)]
    rhs_paths = [p for p, _ in leaves(u)]
    return sorted(mapping) == sorted(rhs_paths) and sorted(mapping.values()) == sorted(lhs_paths)


def suite_totalize(res: SuiteResult, quick: bool) -> None:
    rng = random.Random(10)
    k = 20 if quick else 100
    while k:
        t = random_term(rng, 5, names=("a", "b", "c"), one_prob=0.1)
        u = random_term(rng, 5, names=("a", "b", "c"), one_prob=0.1)
        q = Inequality(t, u, Mode.POINTED)
        w = decide_full(q)
        if w is None:
            continue
        k -= 1
        tot = totalize_witness(t, u, w)
        ok = (
            verify_witness(Inequality(tot.lhs, tot.rhs), tot.witness)
            and (tot.lhs == ONE or _is_total_bijection(tot.lhs, tot.rhs, tot.mapping))
            and check_derivation(tot.lhs_derivation)
            and check_derivation(tot.rhs_derivation)
            and tot.lhs_derivation.conclusion == Inequality(t, tot.lhs)
            and tot.rhs_derivation.conclusion == Inequality(tot.rhs, u)
        )
        res.record(ok, q)


SUITES = {
    "oracle-basic": suite_oracle_basic,
    "oracle-full": suite_oracle_full,
    "axioms": suite_axioms,
    "instances": suite_instances,
    "qbf": suite_qbf,
    "bridge": suite_bridge,
    "join-slice": suite_join_slice,
    "structure": suite_structure,
    "derive": suite_derive,
    "totalize": suite_totalize,
}


def run_suite(name: str, quick: bool = False) -> SuiteResult:
    res = SuiteResult(name)
    t0 = time.perf_counter()
    try:
        SUITES[name](res, quick)
    except Exception as exc:   # a crash is a failure of the suite, not of the runner
        res.record(False, f"crashed: {type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    return res
