"""Decidable assertion logic: linear integer arithmetic with quantifiers."""

from .decide import Decider, SolverConfig, default_decider
from .qe import eliminate_quantifiers, has_quantifiers
from .smtlib import to_smtlib
from .terms import (
    TRUE,
    FALSE,
    Add,
    And,
    BoolLit,
    Cmp,
    Divisible,
    Exists,
    Expression,
    Forall,
    Formula,
    Implies,
    Lit,
    Mul,
    Not,
    Or,
    Sub,
    Substitution,
    Var,
    all_names,
    brute_force_valid,
    conj,
    conjuncts,
    disj,
    eval_expr,
    eval_formula,
    expr_vars,
    free_vars,
    fresh_name,
    subst_expr,
    substitute,
)

__all__ = [
    "Add", "And", "BoolLit", "Cmp", "Decider", "Divisible", "Exists",
    "Expression", "FALSE", "Forall", "Formula", "Implies", "Lit", "Mul",
    "Not", "Or", "SolverConfig", "Sub", "Substitution", "TRUE", "Var",
    "all_names", "brute_force_valid", "conj", "conjuncts", "default_decider",
    "disj", "eliminate_quantifiers", "eval_expr", "eval_formula", "expr_vars",
    "free_vars",
    "fresh_name", "has_quantifiers", "subst_expr", "substitute", "to_smtlib",
]
