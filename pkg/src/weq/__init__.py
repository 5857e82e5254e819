"""Decision procedures for inequalities between terms over Weihrauch degrees
with meet, join, product, 1 and finite parallelization."""

from .terms import (
    ONE, Join, Meet, One, ParseError, Prod, Star, Term, Var, normalize_star,
    parse_term, render_term, simplify_one_pointed, slices, variables,
)
from .decider import (
    Budget, BudgetExceeded, Inequality, Mode, ReductionWitness, decide_full,
    is_valid, parse_inequality, verify_witness,
)

__version__ = "0.1.0"

__all__ = [
    "ONE", "Join", "Meet", "One", "ParseError", "Prod", "Star", "Term", "Var",
    "normalize_star", "parse_term", "render_term", "simplify_one_pointed", "slices",
    "variables", "Budget", "BudgetExceeded", "Inequality", "Mode", "ReductionWitness",
    "decide_full", "is_valid", "parse_inequality", "verify_witness",
]
