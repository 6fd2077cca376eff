"""Global assertion syntax: protocol skeletons whose messages carry predicates.

A global assertion describes a multiparty protocol where every message
binds fresh variables under a predicate, branches are guarded, and
recursion carries an invariant over its parameters.  This module holds the
surface syntax, binder normalization, erasure to a bare protocol shape,
and structural well-formedness checks.  The tree view with node ids lives
in `tree`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .logic import (
    Expression,
    Formula,
    Var,
    all_names,
    expr_vars,
    free_vars,
    fresh_name,
    subst_expr,
    substitute,
)


@dataclass(frozen=True)
class SourceSpan:
    """Byte range plus 1-based line/column of its start."""

    start: int
    end: int
    line: int
    column: int


def _span_field():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Interaction:
    sender: str
    receiver: str
    variables: tuple[str, ...]
    predicate: Formula
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Prefix:
    interaction: Interaction
    continuation: "GlobalAssertion"
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Branch:
    guard: Formula
    label: str
    body: "GlobalAssertion"
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class Branching:
    sender: str
    receiver: str
    branches: tuple[Branch, ...]
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class RecDef:
    name: str
    init_args: tuple[Expression, ...]
    params: tuple[str, ...]
    invariant: Formula
    body: "GlobalAssertion"
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class RecCall:
    name: str
    args: tuple[Expression, ...]
    span: SourceSpan | None = _span_field()


@dataclass(frozen=True)
class End:
    span: SourceSpan | None = _span_field()


GlobalAssertion = Union[Prefix, Branching, RecDef, RecCall, End]


# Predicate-free counterpart, the bare protocol shape.

@dataclass(frozen=True)
class TypeInteraction:
    sender: str
    receiver: str
    variables: tuple[str, ...]


@dataclass(frozen=True)
class TypePrefix:
    interaction: TypeInteraction
    continuation: "GlobalType"


@dataclass(frozen=True)
class TypeBranch:
    label: str
    body: "GlobalType"


@dataclass(frozen=True)
class TypeBranching:
    sender: str
    receiver: str
    branches: tuple[TypeBranch, ...]


@dataclass(frozen=True)
class TypeRec:
    name: str
    init_args: tuple[Expression, ...]
    params: tuple[str, ...]
    body: "GlobalType"


@dataclass(frozen=True)
class TypeCall:
    name: str
    args: tuple[Expression, ...]


@dataclass(frozen=True)
class TypeEnd:
    pass


GlobalType = Union[TypePrefix, TypeBranching, TypeRec, TypeCall, TypeEnd]


def erase(g: GlobalAssertion) -> GlobalType:
    """Strip every predicate and recursion invariant, keeping the shape."""
    match g:
        case Prefix(i, cont):
            return TypePrefix(TypeInteraction(i.sender, i.receiver, i.variables), erase(cont))
        case Branching(s, r, branches):
            return TypeBranching(s, r, tuple(TypeBranch(b.label, erase(b.body)) for b in branches))
        case RecDef(name, init_args, params, _, body):
            return TypeRec(name, init_args, params, erase(body))
        case RecCall(name, args):
            return TypeCall(name, args)
        case End():
            return TypeEnd()
    raise TypeError(f"not a global assertion: {g!r}")


def iter_interactions(g: GlobalAssertion) -> Iterator[Interaction]:
    match g:
        case Prefix(i, cont):
            yield i
            yield from iter_interactions(cont)
        case Branching(_, _, branches):
            for b in branches:
                yield from iter_interactions(b.body)
        case RecDef(_, _, _, _, body):
            yield from iter_interactions(body)
        case _:
            pass


def participants(g: GlobalAssertion) -> frozenset[str]:
    out: set[str] = set()

    def walk(a: GlobalAssertion) -> None:
        match a:
            case Prefix(i, cont):
                out.add(i.sender)
                out.add(i.receiver)
                walk(cont)
            case Branching(s, r, branches):
                out.add(s)
                out.add(r)
                for b in branches:
                    walk(b.body)
            case RecDef(_, _, _, _, body):
                walk(body)
            case _:
                pass

    walk(g)
    return frozenset(out)


def assertion_names(g: GlobalAssertion) -> frozenset[str]:
    """Every variable name occurring anywhere, bound or free."""
    out: set[str] = set()

    def walk(a: GlobalAssertion) -> None:
        match a:
            case Prefix(i, cont):
                out.update(i.variables)
                out.update(all_names(i.predicate))
                walk(cont)
            case Branching(_, _, branches):
                for b in branches:
                    out.update(all_names(b.guard))
                    walk(b.body)
            case RecDef(_, init_args, params, invariant, body):
                for e in init_args:
                    out.update(expr_vars(e))
                out.update(params)
                out.update(all_names(invariant))
                walk(body)
            case RecCall(_, args):
                for e in args:
                    out.update(expr_vars(e))
            case _:
                pass

    walk(g)
    return frozenset(out)


def normalize(g: GlobalAssertion) -> GlobalAssertion:
    """Rename binders so every bound name is introduced exactly once.

    Later binders that reuse a taken name get tick suffixes; recursion
    names are deduplicated the same way in their own namespace.
    """
    taken: set[str] = set(assertion_names(g))
    claimed: set[str] = set()
    rec_claimed: set[str] = set()

    def rename_binders(names: tuple[str, ...], env: dict[str, Expression]) -> tuple[tuple[str, ...], dict[str, Expression]]:
        new_env = dict(env)
        fresh: list[str] = []
        for x in names:
            if x in claimed:
                x2 = fresh_name(x, taken)
                taken.add(x2)
                new_env[x] = Var(x2)
                fresh.append(x2)
            else:
                claimed.add(x)
                new_env.pop(x, None)
                fresh.append(x)
        for x in fresh:
            claimed.add(x)
        return tuple(fresh), new_env

    def walk(a: GlobalAssertion, env: dict[str, Expression], rec_env: dict[str, str]) -> GlobalAssertion:
        match a:
            case Prefix(i, cont, span):
                variables, env2 = rename_binders(i.variables, env)
                predicate = substitute(i.predicate, env2) if env2 else i.predicate
                i2 = Interaction(i.sender, i.receiver, variables, predicate, i.span)
                return Prefix(i2, walk(cont, env2, rec_env), span)
            case Branching(s, r, branches, span):
                new_branches = tuple(
                    Branch(
                        substitute(b.guard, env) if env else b.guard,
                        b.label,
                        walk(b.body, env, rec_env),
                        b.span,
                    )
                    for b in branches
                )
                return Branching(s, r, new_branches, span)
            case RecDef(name, init_args, params, invariant, body, span):
                init2 = tuple(subst_expr(e, env) for e in init_args) if env else init_args
                params2, env2 = rename_binders(params, env)
                invariant2 = substitute(invariant, env2) if env2 else invariant
                if name in rec_claimed:
                    name2 = fresh_name(name, rec_claimed)
                else:
                    name2 = name
                rec_claimed.add(name2)
                rec_env2 = dict(rec_env)
                rec_env2[name] = name2
                return RecDef(name2, init2, params2, invariant2, walk(body, env2, rec_env2), span)
            case RecCall(name, args, span):
                args2 = tuple(subst_expr(e, env) for e in args) if env else args
                return RecCall(rec_env.get(name, name), args2, span)
            case End():
                return a
        raise TypeError(f"not a global assertion: {a!r}")

    return walk(g, {}, {})


@dataclass(frozen=True)
class Defect:
    """One well-formedness problem, tied to a preorder node id."""

    kind: str
    message: str
    node_id: int
    name: str | None = None

    def __str__(self) -> str:
        return f"node {self.node_id}: {self.message}"


def check_well_formed(g: GlobalAssertion) -> list[Defect]:
    """Structural checks; an empty result means the assertion is usable.

    Covers unbound variables, self-communication, duplicate binders within
    one binding site, duplicate branch labels, recursion arity and name
    resolution, and unguarded recursive calls.  Node ids follow the same
    preorder numbering the tree view assigns.
    """
    defects: list[Defect] = []
    counter = [0]

    def next_id() -> int:
        n = counter[0]
        counter[0] += 1
        return n

    def dupes(names: tuple[str, ...]) -> list[str]:
        seen: set[str] = set()
        out = []
        for x in names:
            if x in seen and x not in out:
                out.append(x)
            seen.add(x)
        return out

    def check_formula(f: Formula, scope: frozenset[str], nid: int, what: str) -> None:
        for x in sorted(free_vars(f) - scope):
            defects.append(Defect("unbound_variable", f"{what} mentions {x} before any interaction introduces it", nid, x))

    def check_exprs(args: tuple[Expression, ...], scope: frozenset[str], nid: int, what: str) -> None:
        for e in args:
            for x in sorted(expr_vars(e) - scope):
                defects.append(Defect("unbound_variable", f"{what} mentions {x} before any interaction introduces it", nid, x))

    # rec scope maps name -> (arity, guarded-yet flag index)
    def walk(a: GlobalAssertion, scope: frozenset[str], recs: dict[str, tuple[int, int]], depth_guarded: int) -> None:
        # depth_guarded: recs entered at depth > depth_guarded have seen no
        # interaction or branching yet
        match a:
            case Prefix(i, cont):
                nid = next_id()
                if i.sender == i.receiver:
                    defects.append(Defect("self_communication", f"{i.sender} sends to itself", nid, i.sender))
                for x in dupes(i.variables):
                    defects.append(Defect("duplicate_variable", f"variable {x} bound twice in one message", nid, x))
                scope2 = scope | frozenset(i.variables)
                check_formula(i.predicate, scope2, nid, "message predicate")
                walk(cont, scope2, recs, len(recs))
            case Branching(s, r, branches):
                nid = next_id()
                if s == r:
                    defects.append(Defect("self_communication", f"{s} offers a choice to itself", nid, s))
                labels = tuple(b.label for b in branches)
                for lbl in dupes(labels):
                    defects.append(Defect("duplicate_label", f"branch label {lbl} repeated", nid, lbl))
                for b in branches:
                    guard_id = next_id()
                    check_formula(b.guard, scope, guard_id, f"guard of branch {b.label}")
                    walk(b.body, scope, recs, len(recs))
            case RecDef(name, init_args, params, invariant, body):
                nid = next_id()
                check_exprs(init_args, scope, nid, "loop initialization")
                if len(init_args) != len(params):
                    defects.append(
                        Defect(
                            "arity_mismatch",
                            f"loop {name} declares {len(params)} parameters but {len(init_args)} initial values",
                            nid,
                            name,
                        )
                    )
                for x in dupes(params):
                    defects.append(Defect("duplicate_variable", f"parameter {x} bound twice in loop {name}", nid, x))
                scope2 = scope | frozenset(params)
                check_formula(invariant, scope2, nid, f"invariant of loop {name}")
                recs2 = dict(recs)
                recs2[name] = (len(params), nid)
                walk(body, scope2, recs2, depth_guarded)
            case RecCall(name, args):
                nid = next_id()
                check_exprs(args, scope, nid, f"arguments of jump to {name}")
                sig = recs.get(name)
                if sig is None:
                    defects.append(Defect("unknown_recursion", f"jump to undefined loop {name}", nid, name))
                else:
                    arity, _ = sig
                    if len(args) != arity:
                        defects.append(
                            Defect(
                                "arity_mismatch",
                                f"jump to {name} passes {len(args)} values, loop takes {arity}",
                                nid,
                                name,
                            )
                        )
                    if list(recs).index(name) >= depth_guarded:
                        defects.append(
                            Defect(
                                "unguarded_recursion",
                                f"jump to {name} with no interaction between the loop head and the jump",
                                nid,
                                name,
                            )
                        )
            case End():
                next_id()
            case _:
                raise TypeError(f"not a global assertion: {a!r}")

    walk(g, frozenset(), {}, 0)
    return defects
