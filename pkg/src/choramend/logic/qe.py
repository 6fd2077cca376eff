"""Quantifier elimination for linear integer arithmetic, Cooper style.

The engine works on an internal negation-normal core whose only atoms are
strict comparisons with zero and divisibility constraints:

    lt(t)       t < 0
    dvd(d, t)   d | t
    ndvd(d, t)  not (d | t)

with t a linear term.  Each existential variable is eliminated by the
classic split into the minus-infinity part and the lower-boundary part;
universals go through the double negation.  Output formulas are
quantifier-free and equivalent over the integers, though generally not
syntactically pretty; `simplify` keeps the blowup tolerable at the scale
predicates here actually have.
"""

from __future__ import annotations

import math
import time
from typing import Iterable

from ..errors import SolverTimeout, UnsupportedTheory
from . import terms as T

# Linear terms: (const, ((name, coeff), ...)) with names sorted and coeffs nonzero.
Lin = tuple[int, tuple[tuple[str, int], ...]]

TRUE_C = ("true",)
FALSE_C = ("false",)


def lin_make(const: int, coeffs: dict[str, int]) -> Lin:
    return (const, tuple(sorted((v, c) for v, c in coeffs.items() if c != 0)))


def lin_of_expr(e: T.Expression) -> Lin:
    match e:
        case T.Lit(v):
            return (v, ())
        case T.Var(name):
            return (0, ((name, 1),))
        case T.Add(l, r):
            return lin_add(lin_of_expr(l), lin_of_expr(r))
        case T.Sub(l, r):
            return lin_add(lin_of_expr(l), lin_scale(-1, lin_of_expr(r)))
        case T.Mul(k, a):
            if not isinstance(k, int):
                raise UnsupportedTheory("product coefficient must be an integer literal")
            return lin_scale(k, lin_of_expr(a))
    raise TypeError(f"not an expression: {e!r}")


def lin_add(a: Lin, b: Lin) -> Lin:
    coeffs = dict(a[1])
    for v, c in b[1]:
        coeffs[v] = coeffs.get(v, 0) + c
    return lin_make(a[0] + b[0], coeffs)


def lin_scale(k: int, a: Lin) -> Lin:
    if k == 0:
        return (0, ())
    return (k * a[0], tuple((v, k * c) for v, c in a[1]))


def lin_shift(a: Lin, delta: int) -> Lin:
    return (a[0] + delta, a[1])


def lin_coeff(a: Lin, name: str) -> int:
    for v, c in a[1]:
        if v == name:
            return c
    return 0


def lin_drop(a: Lin, name: str) -> Lin:
    return (a[0], tuple((v, c) for v, c in a[1] if v != name))


def lin_subst(a: Lin, name: str, rep: Lin) -> Lin:
    """a with `name` replaced by the term `rep` (coefficient multiplied in)."""
    c = lin_coeff(a, name)
    if c == 0:
        return a
    return lin_add(lin_drop(a, name), lin_scale(c, rep))


def lin_is_const(a: Lin) -> bool:
    return not a[1]


# ---------------------------------------------------------------------------
# Formula -> core (NNF with desugared atoms)


def _cmp_core(op: str, le: Lin, re: Lin, neg: bool):
    """Core form of (l op r) or its negation; all over integers."""
    d = lin_add(le, lin_scale(-1, re))  # l - r
    nd = lin_scale(-1, d)               # r - l
    if neg:
        flip = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}
        op = flip[op]
    match op:
        case "<":
            return ("lt", d)
        case "<=":
            return ("lt", lin_shift(d, -1))
        case ">":
            return ("lt", nd)
        case ">=":
            return ("lt", lin_shift(nd, -1))
        case "=":
            return ("and", (("lt", lin_shift(d, -1)), ("lt", lin_shift(nd, -1))))
        case "!=":
            return ("or", (("lt", d), ("lt", nd)))
    raise ValueError(f"bad comparison op {op!r}")


def _nnf(f: T.Formula, neg: bool, deadline: float | None):
    match f:
        case T.BoolLit(v):
            return FALSE_C if (v == neg) else TRUE_C
        case T.Cmp(op, l, r):
            return _cmp_core(op, lin_of_expr(l), lin_of_expr(r), neg)
        case T.Divisible(d, e):
            tag = "ndvd" if neg else "dvd"
            return (tag, d, lin_of_expr(e))
        case T.Not(a):
            return _nnf(a, not neg, deadline)
        case T.And(args):
            tag = "or" if neg else "and"
            return (tag, tuple(_nnf(a, neg, deadline) for a in args))
        case T.Or(args):
            tag = "and" if neg else "or"
            return (tag, tuple(_nnf(a, neg, deadline) for a in args))
        case T.Implies(l, r):
            if neg:  # l and not r
                return ("and", (_nnf(l, False, deadline), _nnf(r, True, deadline)))
            return ("or", (_nnf(l, True, deadline), _nnf(r, False, deadline)))
        case T.Exists(names, body):
            inner = _eliminate_block(names, _nnf(body, False, deadline), deadline)
            return _negate(inner) if neg else inner
        case T.Forall(names, body):
            # forall x. F == not exists x. not F
            inner = _eliminate_block(names, _nnf(body, True, deadline), deadline)
            return inner if neg else _negate(inner)
    raise TypeError(f"not a formula: {f!r}")


def _negate(core):
    match core[0]:
        case "true":
            return FALSE_C
        case "false":
            return TRUE_C
        case "lt":
            # not (t < 0)  ==  -t - 1 < 0
            return ("lt", lin_shift(lin_scale(-1, core[1]), -1))
        case "dvd":
            return ("ndvd", core[1], core[2])
        case "ndvd":
            return ("dvd", core[1], core[2])
        case "and":
            return ("or", tuple(_negate(a) for a in core[1]))
        case "or":
            return ("and", tuple(_negate(a) for a in core[1]))
    raise ValueError(f"bad core node {core[0]!r}")


# ---------------------------------------------------------------------------
# Simplification


def simplify(core):
    match core[0]:
        case "true" | "false":
            return core
        case "lt":
            return _simp_lt(core[1])
        case "dvd" | "ndvd":
            return _simp_dvd(core[0], core[1], core[2])
        case "and" | "or":
            return _simp_junction(core[0], core[1])
    raise ValueError(f"bad core node {core[0]!r}")


def _simp_lt(t: Lin):
    if lin_is_const(t):
        return TRUE_C if t[0] < 0 else FALSE_C
    g = math.gcd(*(abs(c) for _, c in t[1]))
    if g > 1:
        # g*u + c < 0  ==  u <= floor((-c-1)/g)  ==  u - floor((-c-1)/g) - 1 < 0
        q = (-t[0] - 1) // g
        t = ((-q) - 1, tuple((v, c // g) for v, c in t[1]))
    return ("lt", t)


def _simp_dvd(tag: str, d: int, t: Lin):
    if d < 0:
        d = -d
    if d == 0:
        # 0 | t  ==  t = 0; keep only the ground case exact, else leave as-is
        if lin_is_const(t):
            hit = t[0] == 0
            return (TRUE_C if hit else FALSE_C) if tag == "dvd" else (FALSE_C if hit else TRUE_C)
        return (tag, d, t)
    coeffs = {v: c % d for v, c in t[1]}
    t = lin_make(t[0] % d, coeffs)
    if lin_is_const(t):
        hit = t[0] % d == 0
        if tag == "dvd":
            return TRUE_C if hit else FALSE_C
        return FALSE_C if hit else TRUE_C
    g = math.gcd(d, t[0], *(abs(c) for _, c in t[1]))
    if g > 1:
        d //= g
        t = (t[0] // g, tuple((v, c // g) for v, c in t[1]))
    if d == 1:
        return TRUE_C if tag == "dvd" else FALSE_C
    return (tag, d, t)


def _simp_junction(tag: str, args):
    absorber = FALSE_C if tag == "and" else TRUE_C
    neutral = TRUE_C if tag == "and" else FALSE_C
    out = []
    seen = set()
    for a in args:
        s = simplify(a)
        if s == absorber:
            return absorber
        if s == neutral:
            continue
        if s[0] == tag:
            kids = s[1]
        else:
            kids = (s,)
        for k in kids:
            if k not in seen:
                seen.add(k)
                out.append(k)
    if not out:
        return neutral
    if len(out) == 1:
        return out[0]
    return (tag, tuple(out))


# ---------------------------------------------------------------------------
# Cooper elimination of one existential variable


def _atoms_mentioning(core, name: str) -> bool:
    match core[0]:
        case "lt":
            return lin_coeff(core[1], name) != 0
        case "dvd" | "ndvd":
            return lin_coeff(core[2], name) != 0
        case "and" | "or":
            return any(_atoms_mentioning(a, name) for a in core[1])
    return False


def _coeff_lcm(core, name: str, acc: int) -> int:
    match core[0]:
        case "lt":
            c = lin_coeff(core[1], name)
        case "dvd" | "ndvd":
            c = lin_coeff(core[2], name)
        case "and" | "or":
            for a in core[1]:
                acc = _coeff_lcm(a, name, acc)
            return acc
        case _:
            return acc
    return math.lcm(acc, abs(c)) if c else acc


def _unitize(core, name: str, delta: int):
    """Scale atoms so the coefficient of `name` is exactly +-1.

    Conceptually substitutes xi = delta * x; the caller conjoins
    dvd(delta, xi).
    """
    match core[0]:
        case "lt":
            t = core[1]
            c = lin_coeff(t, name)
            if c == 0:
                return core
            k = delta // abs(c)
            t = lin_scale(k, t)  # coeff now +-delta; k > 0 keeps < direction
            sign = 1 if c > 0 else -1
            t = lin_add(lin_drop(t, name), (0, ((name, sign),)))
            return ("lt", t)
        case "dvd" | "ndvd":
            d, t = core[1], core[2]
            c = lin_coeff(t, name)
            if c == 0:
                return core
            k = delta // abs(c)
            t = lin_scale(k, t)
            sign = 1 if c > 0 else -1
            t = lin_add(lin_drop(t, name), (0, ((name, sign),)))
            return (core[0], d * k, t)
        case "and" | "or":
            return (core[0], tuple(_unitize(a, name, delta) for a in core[1]))
    return core


def _collect_bounds(core, name: str, lowers: list[Lin], divisors: list[int]) -> None:
    match core[0]:
        case "lt":
            c = lin_coeff(core[1], name)
            if c == -1:
                # -x + r < 0, i.e. r < x: lower bound term r
                lowers.append(lin_drop(core[1], name))
        case "dvd" | "ndvd":
            if lin_coeff(core[2], name) != 0:
                divisors.append(core[1])
        case "and" | "or":
            for a in core[1]:
                _collect_bounds(a, name, lowers, divisors)


def _minus_inf(core, name: str):
    match core[0]:
        case "lt":
            c = lin_coeff(core[1], name)
            if c == 1:
                return TRUE_C
            if c == -1:
                return FALSE_C
            return core
        case "and" | "or":
            return (core[0], tuple(_minus_inf(a, name) for a in core[1]))
    return core


def _subst_var(core, name: str, rep: Lin):
    match core[0]:
        case "lt":
            return ("lt", lin_subst(core[1], name, rep))
        case "dvd" | "ndvd":
            return (core[0], core[1], lin_subst(core[2], name, rep))
        case "and" | "or":
            return (core[0], tuple(_subst_var(a, name, rep) for a in core[1]))
    return core


def _check_deadline(deadline: float | None) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise SolverTimeout("validity query exceeded its time budget")


def cooper_one(name: str, core, deadline: float | None = None):
    """Eliminate exists `name` from a quantifier-free core formula."""
    _check_deadline(deadline)
    core = simplify(core)
    if not _atoms_mentioning(core, name):
        return core
    delta = _coeff_lcm(core, name, 1)
    unit = _unitize(core, name, delta)
    if delta > 1:
        unit = ("and", (unit, ("dvd", delta, (0, ((name, 1),)))))
    lowers: list[Lin] = []
    divisors: list[int] = []
    _collect_bounds(unit, name, lowers, divisors)
    m = 1
    for d in divisors:
        m = math.lcm(m, d)
    minf = _minus_inf(unit, name)
    parts = []
    for j in range(1, m + 1):
        _check_deadline(deadline)
        parts.append(simplify(_subst_var(minf, name, (j, ()))))
    # dedupe lower-bound terms before the quadratic part
    for b in dict.fromkeys(lowers):
        for j in range(1, m + 1):
            _check_deadline(deadline)
            parts.append(simplify(_subst_var(unit, name, lin_shift(b, j))))
    return simplify(("or", tuple(parts)))


def _eliminate_block(names: Iterable[str], core, deadline: float | None):
    for name in reversed(tuple(names)):
        core = cooper_one(name, core, deadline)
    return core


# ---------------------------------------------------------------------------
# Core -> formula


def _expr_of_terms(items: list[tuple[str, int]], const: int) -> T.Expression:
    parts: list[T.Expression] = []
    for v, c in items:
        parts.append(T.Var(v) if c == 1 else T.Mul(c, T.Var(v)))
    if const != 0 or not parts:
        parts.append(T.Lit(const))
    out = parts[0]
    for p in parts[1:]:
        out = T.Add(out, p)
    return out


def _formula_of_lt(t: Lin) -> T.Formula:
    pos = [(v, c) for v, c in t[1] if c > 0]
    neg = [(v, -c) for v, c in t[1] if c < 0]
    lc = t[0] if t[0] > 0 else 0
    rc = -t[0] if t[0] < 0 else 0
    return T.Cmp("<", _expr_of_terms(pos, lc), _expr_of_terms(neg, rc))


def to_formula(core) -> T.Formula:
    match core[0]:
        case "true":
            return T.TRUE
        case "false":
            return T.FALSE
        case "lt":
            return _formula_of_lt(core[1])
        case "dvd":
            return T.Divisible(core[1], _expr_of_terms(list(core[2][1]), core[2][0]))
        case "ndvd":
            return T.Not(T.Divisible(core[1], _expr_of_terms(list(core[2][1]), core[2][0])))
        case "and":
            return T.conj(*(to_formula(a) for a in core[1]))
        case "or":
            return T.disj(*(to_formula(a) for a in core[1]))
    raise ValueError(f"bad core node {core[0]!r}")


# ---------------------------------------------------------------------------
# Public entry points


def has_quantifiers(f: T.Formula) -> bool:
    match f:
        case T.Exists() | T.Forall():
            return True
        case T.Not(a):
            return has_quantifiers(a)
        case T.And(args) | T.Or(args):
            return any(has_quantifiers(a) for a in args)
        case T.Implies(l, r):
            return has_quantifiers(l) or has_quantifiers(r)
        case _:
            return False


def eliminate_quantifiers(f: T.Formula, deadline: float | None = None) -> T.Formula:
    """Equivalent quantifier-free formula; inputs already free of
    quantifiers come back untouched."""
    if not has_quantifiers(f):
        return f
    return to_formula(simplify(_nnf(f, False, deadline)))


def satisfiable(f: T.Formula, deadline: float | None = None) -> bool:
    core = _nnf(f, False, deadline)
    core = _eliminate_block(sorted(T.free_vars(f)), core, deadline)
    core = simplify(core)
    if core == TRUE_C:
        return True
    if core == FALSE_C:
        return False
    raise AssertionError(f"ground core failed to fold: {core!r}")


def is_valid(f: T.Formula, deadline: float | None = None) -> bool:
    return not satisfiable(T.Not(f), deadline)
