"""Linear integer expressions and first-order formulas over them.

The formula language is the assertion-predicate fragment: comparisons of
linear expressions combined with the usual connectives and integer
quantifiers.  A divisibility atom is included because quantifier
elimination produces it; the surface grammar never does.

All nodes are frozen dataclasses, so formulas are hashable and safe to
share between threads and memo tables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

from ..errors import BudgetExceeded, CaptureError


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True, slots=True)
class Lit:
    """Integer literal."""

    value: int


@dataclass(frozen=True, slots=True)
class Var:
    """Variable reference."""

    name: str


@dataclass(frozen=True, slots=True)
class Add:
    lhs: Expression
    rhs: Expression


@dataclass(frozen=True, slots=True)
class Sub:
    lhs: Expression
    rhs: Expression


@dataclass(frozen=True, slots=True)
class Mul:
    """Product by an integer literal; the only multiplication allowed."""

    coeff: int
    arg: Expression


Expression = Union[Lit, Var, Add, Sub, Mul]


def expr_vars(e: Expression) -> frozenset[str]:
    """Variables occurring in an expression."""
    match e:
        case Lit():
            return frozenset()
        case Var(name):
            return frozenset((name,))
        case Add(l, r) | Sub(l, r):
            return expr_vars(l) | expr_vars(r)
        case Mul(_, a):
            return expr_vars(a)
    raise TypeError(f"not an expression: {e!r}")


def eval_expr(e: Expression, env: Mapping[str, int]) -> int:
    match e:
        case Lit(v):
            return v
        case Var(name):
            return env[name]
        case Add(l, r):
            return eval_expr(l, env) + eval_expr(r, env)
        case Sub(l, r):
            return eval_expr(l, env) - eval_expr(r, env)
        case Mul(k, a):
            return k * eval_expr(a, env)
    raise TypeError(f"not an expression: {e!r}")


def subst_expr(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    match e:
        case Lit():
            return e
        case Var(name):
            return mapping.get(name, e)
        case Add(l, r):
            return Add(subst_expr(l, mapping), subst_expr(r, mapping))
        case Sub(l, r):
            return Sub(subst_expr(l, mapping), subst_expr(r, mapping))
        case Mul(k, a):
            return Mul(k, subst_expr(a, mapping))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True, slots=True)
class BoolLit:
    value: bool


@dataclass(frozen=True, slots=True)
class Cmp:
    """Comparison atom; op is one of = != < <= > >=."""

    op: str
    lhs: Expression
    rhs: Expression


@dataclass(frozen=True, slots=True)
class Not:
    arg: Formula


@dataclass(frozen=True, slots=True)
class And:
    """N-ary conjunction; construction keeps at least two operands."""

    args: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple[Formula, ...]


@dataclass(frozen=True, slots=True)
class Implies:
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True, slots=True)
class Exists:
    names: tuple[str, ...]
    body: Formula


@dataclass(frozen=True, slots=True)
class Forall:
    names: tuple[str, ...]
    body: Formula


@dataclass(frozen=True, slots=True)
class Divisible:
    """d divides e.  Produced by quantifier elimination only."""

    divisor: int
    arg: Expression


Formula = Union[BoolLit, Cmp, Not, And, Or, Implies, Exists, Forall, Divisible]

TRUE = BoolLit(True)
FALSE = BoolLit(False)

CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


def conj(*parts: Formula) -> Formula:
    """Conjunction that flattens nested conjunctions but never simplifies.

    Repairs use this to append predicates; keeping literal `true` operands
    is deliberate (amended predicates show their construction).
    """
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.args)
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.args)
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def conjuncts(f: Formula) -> tuple[Formula, ...]:
    """Top-level conjunct list of a formula (itself when not a conjunction)."""
    if isinstance(f, And):
        return tuple(part for arg in f.args for part in conjuncts(arg))
    return (f,)


def free_vars(f: Formula) -> frozenset[str]:
    match f:
        case BoolLit():
            return frozenset()
        case Cmp(_, l, r):
            return expr_vars(l) | expr_vars(r)
        case Divisible(_, e):
            return expr_vars(e)
        case Not(a):
            return free_vars(a)
        case And(args) | Or(args):
            out: frozenset[str] = frozenset()
            for a in args:
                out |= free_vars(a)
            return out
        case Implies(l, r):
            return free_vars(l) | free_vars(r)
        case Exists(names, body) | Forall(names, body):
            return free_vars(body) - frozenset(names)
    raise TypeError(f"not a formula: {f!r}")


def fresh_name(base: str, used: Iterable[str]) -> str:
    """`base` decorated with apostrophes until it avoids `used`."""
    taken = set(used)
    cand = base
    while cand in taken:
        cand += "'"
    return cand


Substitution = Mapping[str, Expression]


def substitute(f: Formula, mapping: Substitution, *, rename: bool = True) -> Formula:
    """Simultaneous capture-avoiding substitution.

    Binders clashing with free variables of the replacement expressions are
    renamed with apostrophe ticks; with rename=False such a clash raises
    CaptureError instead.
    """
    live = {k: v for k, v in mapping.items()}
    if not live:
        return f
    return _subst(f, live, rename)


def _subst(f: Formula, mapping: dict[str, Expression], rename: bool) -> Formula:
    match f:
        case BoolLit():
            return f
        case Cmp(op, l, r):
            return Cmp(op, subst_expr(l, mapping), subst_expr(r, mapping))
        case Divisible(d, e):
            return Divisible(d, subst_expr(e, mapping))
        case Not(a):
            return Not(_subst(a, mapping, rename))
        case And(args):
            return And(tuple(_subst(a, mapping, rename) for a in args))
        case Or(args):
            return Or(tuple(_subst(a, mapping, rename) for a in args))
        case Implies(l, r):
            return Implies(_subst(l, mapping, rename), _subst(r, mapping, rename))
        case Exists(names, body):
            names2, body2, mapping2 = _enter_binder(names, body, mapping, rename)
            return Exists(names2, _subst(body2, mapping2, rename) if mapping2 else body2)
        case Forall(names, body):
            names2, body2, mapping2 = _enter_binder(names, body, mapping, rename)
            return Forall(names2, _subst(body2, mapping2, rename) if mapping2 else body2)
    raise TypeError(f"not a formula: {f!r}")


def _enter_binder(
    names: tuple[str, ...],
    body: Formula,
    mapping: dict[str, Expression],
    rename: bool,
) -> tuple[tuple[str, ...], Formula, dict[str, Expression]]:
    inner = {k: v for k, v in mapping.items() if k not in names}
    if not inner:
        return names, body, {}
    clash_pool: set[str] = set()
    for v in inner.values():
        clash_pool |= expr_vars(v)
    clashing = [n for n in names if n in clash_pool]
    if not clashing:
        return names, body, inner
    if not rename:
        raise CaptureError(f"binder {clashing[0]!r} would capture a substituted variable")
    avoid = set(clash_pool) | set(free_vars(body)) | set(inner) | set(names)
    ren: dict[str, Expression] = {}
    new_names = []
    for n in names:
        if n in clash_pool:
            n2 = fresh_name(n, avoid)
            avoid.add(n2)
            ren[n] = Var(n2)
            new_names.append(n2)
        else:
            new_names.append(n)
    body2 = _subst(body, ren, rename) if ren else body
    return tuple(new_names), body2, inner


# ---------------------------------------------------------------------------
# Evaluation and the bounded oracle


class _Budget:
    __slots__ = ("left",)

    def __init__(self, cap: int):
        self.left = cap

    def spend(self, n: int = 1) -> None:
        self.left -= n
        if self.left < 0:
            raise BudgetExceeded("bounded evaluation exceeded its assignment budget")


def eval_formula(
    f: Formula,
    env: Mapping[str, int],
    bounds: tuple[int, int] | None = None,
    _budget: _Budget | None = None,
) -> bool:
    """Evaluate under `env`; quantifiers range over `bounds` (inclusive).

    A formula with quantifiers requires bounds.
    """
    match f:
        case BoolLit(v):
            return v
        case Cmp(op, l, r):
            a, b = eval_expr(l, env), eval_expr(r, env)
            match op:
                case "=":
                    return a == b
                case "!=":
                    return a != b
                case "<":
                    return a < b
                case "<=":
                    return a <= b
                case ">":
                    return a > b
                case ">=":
                    return a >= b
            raise ValueError(f"bad comparison op {op!r}")
        case Divisible(d, e):
            return eval_expr(e, env) % d == 0
        case Not(a):
            return not eval_formula(a, env, bounds, _budget)
        case And(args):
            return all(eval_formula(a, env, bounds, _budget) for a in args)
        case Or(args):
            return any(eval_formula(a, env, bounds, _budget) for a in args)
        case Implies(l, r):
            return (not eval_formula(l, env, bounds, _budget)) or eval_formula(r, env, bounds, _budget)
        case Exists(names, body):
            return _eval_quant(names, body, env, bounds, _budget, want=True)
        case Forall(names, body):
            return not _eval_quant(names, Not(body), env, bounds, _budget, want=True)
    raise TypeError(f"not a formula: {f!r}")


def _eval_quant(names, body, env, bounds, budget, want: bool) -> bool:
    if bounds is None:
        raise ValueError("quantified formula evaluated without bounds")
    lo, hi = bounds
    base = dict(env)
    for values in itertools.product(range(lo, hi + 1), repeat=len(names)):
        if budget is not None:
            budget.spend()
        base.update(zip(names, values))
        if eval_formula(body, base, bounds, budget) == want:
            return True
    return False


def brute_force_valid(
    f: Formula,
    bounds: tuple[int, int],
    budget: int = 5_000_000,
) -> bool:
    """Exhaustive validity over the inclusive interval `bounds`.

    Free variables and quantifiers all range over the interval; this is the
    independent oracle the decision procedure is checked against.  Raises
    BudgetExceeded when the assignment count would pass `budget`.
    """
    lo, hi = bounds
    if hi < lo:
        raise ValueError("empty interval")
    names = sorted(free_vars(f))
    width = hi - lo + 1
    total = width ** len(names)
    if total > budget:
        raise BudgetExceeded(f"{total} assignments exceed budget {budget}")
    tracker = _Budget(budget)
    env: dict[str, int] = {}
    for values in itertools.product(range(lo, hi + 1), repeat=len(names)):
        tracker.spend()
        env = dict(zip(names, values))
        if not eval_formula(f, env, bounds, tracker):
            return False
    return True


def all_names(f: Formula) -> frozenset[str]:
    """Free and bound variable names (used for freshness pools)."""
    match f:
        case BoolLit():
            return frozenset()
        case Cmp(_, l, r):
            return expr_vars(l) | expr_vars(r)
        case Divisible(_, e):
            return expr_vars(e)
        case Not(a):
            return all_names(a)
        case And(args) | Or(args):
            out: frozenset[str] = frozenset()
            for a in args:
                out |= all_names(a)
            return out
        case Implies(l, r):
            return all_names(l) | all_names(r)
        case Exists(names, body) | Forall(names, body):
            return all_names(body) | frozenset(names)
    raise TypeError(f"not a formula: {f!r}")
