"""Reachability of future constraints, and the lifting repair.

A protocol can deadlock on values: an early choice may leave a later
sender with no value satisfying its predicate.  The checker walks the
tree accumulating context and tests, at every node, that the context
still leaves room for the node's own constraint.  The repair copies the
troublesome part of a predicate upward, quantified so that earlier
senders rule out the dead ends before they happen.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Literal

from .assertions import GlobalAssertion
from .hs import Change, Failed, Fixed, RepairOutcome, Unchanged, responsible
from .logic import (
    And,
    Decider,
    Exists,
    Forall,
    Formula,
    Implies,
    TRUE,
    conj,
    conjuncts,
    default_decider,
    disj,
    free_vars,
    substitute,
)
from .tree import (
    AssertionTree,
    GuardLabel,
    InteractionLabel,
    RecCallLabel,
    RecDefLabel,
    SelectorLabel,
    assertion_of,
    knows_in_tree,
    pred,
    tree_of,
)

ViolationKind = Literal["interaction", "branching", "rec-def", "rec-call"]


@dataclass(frozen=True)
class TsViolation:
    node_id: int
    kind: ViolationKind
    context: Formula
    obligation: Formula


@dataclass(frozen=True)
class GsatResult:
    ok: bool
    failing_node: int | None = None
    warnings: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def node_obligation(t: AssertionTree, node_id: int) -> Formula | None:
    """What the context must entail at a node; None when nothing is owed."""
    label = t.label(node_id)
    if isinstance(label, InteractionLabel):
        if label.variables:
            return Exists(label.variables, label.predicate)
        return label.predicate
    if isinstance(label, SelectorLabel):
        return disj(*(t.label(c).guard for c in t.children(node_id)))
    if isinstance(label, RecDefLabel):
        return substitute(label.invariant, dict(zip(label.params, label.init_args)))
    if isinstance(label, RecCallLabel):
        return substitute(label.invariant, dict(zip(label.params, label.args)))
    return None


def _kind_of(label) -> ViolationKind:
    if isinstance(label, InteractionLabel):
        return "interaction"
    if isinstance(label, SelectorLabel):
        return "branching"
    if isinstance(label, RecDefLabel):
        return "rec-def"
    return "rec-call"


def _context_after(label, context: Formula) -> Formula:
    if isinstance(label, InteractionLabel):
        return conj(context, label.predicate)
    if isinstance(label, GuardLabel):
        return conj(context, label.guard)
    if isinstance(label, RecDefLabel):
        return conj(context, label.invariant)
    return context


def _violations_in_tree(t: AssertionTree, decider: Decider) -> list[TsViolation]:
    out: list[TsViolation] = []

    def visit(node_id: int, ctx: Formula) -> None:
        label = t.label(node_id)
        obligation = node_obligation(t, node_id)
        if obligation is not None and not decider.entails(ctx, obligation):
            out.append(TsViolation(node_id, _kind_of(label), pred(t, node_id), obligation))
            return
        ctx = _context_after(label, ctx)
        for child in t.children(node_id):
            visit(child, ctx)

    visit(t.ROOT, TRUE)
    return out


def ts_violations(g: GlobalAssertion, decider: Decider | None = None) -> list[TsViolation]:
    """First failing nodes in preorder; descendants of a failure are not reported."""
    return _violations_in_tree(tree_of(g), decider or default_decider())


def gsat(g: GlobalAssertion, psi: Formula = TRUE, decider: Decider | None = None) -> GsatResult:
    """Whole-protocol check under an assumed context.

    Also flags branches whose guard contradicts the context; those are
    warnings, never failures.
    """
    decider = decider or default_decider()
    t = tree_of(g)
    warnings: list[str] = []
    first_failure: int | None = None

    def visit(node_id: int, ctx: Formula) -> bool:
        nonlocal first_failure
        label = t.label(node_id)
        obligation = node_obligation(t, node_id)
        if obligation is not None and not decider.entails(ctx, obligation):
            if first_failure is None:
                first_failure = node_id
            return False
        if isinstance(label, SelectorLabel):
            for guard_id in t.children(node_id):
                guard = t.label(guard_id)
                if not decider.satisfiable(conj(ctx, guard.guard)):
                    warnings.append(
                        f"branch {guard.branch_label} of the choice at node {node_id}"
                        " can never be taken in this context"
                    )
        ctx = _context_after(label, ctx)
        ok = True
        for child in t.children(node_id):
            ok = visit(child, ctx) and ok
        return ok

    ok = visit(t.ROOT, psi)
    return GsatResult(ok, first_failure, tuple(warnings))


def ts_node(t: AssertionTree, node_id: int, decider: Decider | None = None) -> bool:
    """Does the path down to this node hold up, with everything below cut off."""
    decider = decider or default_decider()
    if isinstance(t.label(node_id), GuardLabel):
        return True
    context: Formula = TRUE
    for step in t.path_to(node_id):
        obligation = node_obligation(t, step)
        if obligation is not None and not decider.entails(context, obligation):
            return False
        context = _context_after(t.label(step), context)
    return True


def rewrite(psi: Formula, variables) -> tuple[Formula, Formula]:
    """Partition a conjunction into the part over the given variables and the rest."""
    if isinstance(variables, str):
        names = frozenset({variables})
    else:
        names = frozenset(variables)
    own, rest = [], []
    for part in conjuncts(psi):
        (own if free_vars(part) <= names else rest).append(part)
    return conj(*own), conj(*rest)


def in_conflict(psi: Formula, variables, phi: Formula, context: Formula, decider: Decider | None = None) -> bool:
    """The context admits phi but adding psi closes every option."""
    decider = decider or default_decider()
    names = tuple(variables)
    if not names:
        return False
    return decider.entails(context, Exists(names, phi)) and not decider.entails(
        context, Exists(names, conj(phi, psi))
    )


def split(t: AssertionTree, node_id: int, phi: Formula, psi: Formula, decider: Decider | None = None) -> list[Formula]:
    """Conjunct subsets of psi that are to blame, smallest first."""
    decider = decider or default_decider()
    parts = [p for p in conjuncts(psi) if p != TRUE]
    names = t.introduced_vars(node_id)
    context = pred(t, node_id)
    found = []
    for size in range(1, len(parts) + 1):
        for picked in combinations(range(len(parts)), size):
            chosen = conj(*(parts[i] for i in picked))
            remaining = conj(*(parts[i] for i in range(len(parts)) if i not in picked))
            if in_conflict(chosen, names, conj(phi, remaining), context, decider):
                found.append(chosen)
    return found


@dataclass(frozen=True)
class Insertion:
    """One ancestor node receiving a copy of the lifted predicate."""

    node_id: int
    universal: tuple[str, ...]
    existential: tuple[str, ...]
    predicate: Formula
    satisfiable: bool


@dataclass(frozen=True)
class LiftPlan:
    target: int
    lifted: Formula
    insertions: tuple[Insertion, ...]
    result: GlobalAssertion | None
    refusal: str | None = None
    effective: bool | None = None
    warnings: tuple[str, ...] = ()
    branch_label: str | None = None


def _introduction_order(t: AssertionTree, names: set[str]) -> list[str]:
    ranked = []
    for name in names:
        site = t.introduction_site(name)
        if site is None:
            continue
        ranked.append(((site, t.introduced_vars(site).index(name)), name))
    ranked.sort()
    return [name for _, name in ranked]


def build_plan(t: AssertionTree, node_id: int, psi: Formula, decider: Decider | None = None) -> LiftPlan:
    """Where a lifted predicate would land, and whether every landing is sound."""
    decider = decider or default_decider()
    names = free_vars(psi)
    ancestors = t.path_to(node_id)[:-1]
    for ancestor in ancestors:
        label = t.label(ancestor)
        if isinstance(label, RecDefLabel) and set(label.params) & names:
            bound = ", ".join(sorted(set(label.params) & names))
            return LiftPlan(
                node_id,
                psi,
                (),
                None,
                refusal=f"loop at node {ancestor} binds {bound}; tightening its invariant is refused",
            )
    insertions = []
    updated = t
    all_ok = True
    for ancestor in ancestors:
        label = t.label(ancestor)
        if not isinstance(label, InteractionLabel) or not set(label.variables) & names:
            continue
        sender_knows = knows_in_tree(t, label.sender)
        above = {
            w
            for w in names
            if w not in sender_knows and t.introduction_site(w) in t.path_to(ancestor)
        }
        below_ids = set(t.subtree_ids(ancestor)) - {ancestor}
        below = {w for w in names if t.introduction_site(w) in below_ids}
        universal = tuple(_introduction_order(t, above))
        existential = tuple(_introduction_order(t, below))
        lifted = psi
        if existential:
            lifted = Exists(existential, lifted)
        if universal:
            lifted = Forall(universal, lifted)
        replacement = conj(label.predicate, lifted)
        ok = decider.satisfiable(replacement)
        insertions.append(Insertion(ancestor, universal, existential, replacement, ok))
        all_ok = all_ok and ok
        if ok:
            updated = updated.with_label(
                ancestor,
                InteractionLabel(label.sender, label.receiver, label.variables, replacement),
            )
    result = assertion_of(updated) if all_ok else None
    return LiftPlan(node_id, psi, tuple(insertions), result)


def build(t: AssertionTree, node_id: int, psi: Formula, decider: Decider | None = None) -> AssertionTree | None:
    plan = build_plan(t, node_id, psi, decider)
    if plan.result is None:
        return None
    return tree_of(plan.result)


def _ordered_selection(predicate: Formula, chosen: Formula, extra: Formula) -> Formula:
    """Selected conjuncts in their original order within the node's predicate."""
    wanted = set(conjuncts(chosen)) | set(conjuncts(extra))
    wanted.discard(TRUE)
    parts = [p for p in conjuncts(predicate) if p in wanted]
    return conj(*parts) if parts else TRUE


def _clears(t: AssertionTree, node_id: int, decider: Decider) -> bool:
    obligation = node_obligation(t, node_id)
    if obligation is None:
        return True
    return decider.entails(pred(t, node_id), obligation)


class _LiftMemo:
    """Refuses to lift an equivalent predicate twice at the same target."""

    def __init__(self, decider: Decider):
        self.decider = decider
        self.seen: dict[int, list[Formula]] = {}

    def known(self, node_id: int, psi: Formula) -> bool:
        for earlier in self.seen.get(node_id, []):
            if earlier == psi:
                return True
            if self.decider.is_valid(_iff(earlier, psi)):
                return True
        return False

    def record(self, node_id: int, psi: Formula) -> None:
        self.seen.setdefault(node_id, []).append(psi)


def _iff(a: Formula, b: Formula) -> Formula:
    return And((Implies(a, b), Implies(b, a)))


def ts_res(
    t: AssertionTree,
    node_id: int,
    decider: Decider | None = None,
    memo: _LiftMemo | None = None,
    branch_policy: str | None = None,
) -> AssertionTree | None:
    """One repair attempt at one node; None when no lift helps."""
    decider = decider or default_decider()
    memo = memo or _LiftMemo(decider)
    label = t.label(node_id)

    def attempt(lifted: Formula) -> AssertionTree | None:
        if memo.known(node_id, lifted):
            return None
        plan = build_plan(t, node_id, lifted, decider)
        if plan.result is None:
            return None
        rebuilt = tree_of(plan.result)
        if not _clears(rebuilt, node_id, decider):
            return None
        memo.record(node_id, lifted)
        return rebuilt

    if isinstance(label, InteractionLabel):
        phi, rest = rewrite(label.predicate, label.variables)
        if label.variables and not decider.entails(
            pred(t, node_id), Exists(label.variables, phi)
        ):
            return None
        for candidate in split(t, node_id, phi, rest, decider):
            lifted = _ordered_selection(label.predicate, candidate, phi)
            fixed = attempt(lifted)
            if fixed is not None:
                return fixed
        return None
    if isinstance(label, RecDefLabel):
        lifted = substitute(label.invariant, dict(zip(label.params, label.init_args)))
        return attempt(lifted)
    if isinstance(label, RecCallLabel):
        lifted = substitute(label.invariant, dict(zip(label.params, label.args)))
        return attempt(lifted)
    if isinstance(label, SelectorLabel) and branch_policy == "disjunction":
        guards = [t.label(c).guard for c in t.children(node_id)]
        return attempt(disj(*guards))
    return None


def phi3(
    g: GlobalAssertion,
    decider: Decider | None = None,
    branch_policy: str | None = None,
) -> RepairOutcome:
    """Lift until the checker passes, the options run out, or the budget does."""
    decider = decider or default_decider()
    current = tree_of(g)
    memo = _LiftMemo(decider)
    fuel = 10 * len(current.nodes)
    changes: tuple[Change, ...] = ()
    while True:
        violations = _violations_in_tree(current, decider)
        if not violations:
            if changes:
                return Fixed(assertion_of(current), changes)
            return Unchanged()
        if fuel <= 0:
            return Failed(
                assertion_of(current),
                violations[0].node_id,
                changes,
                reason="lift budget exhausted; refusing to keep rewriting",
            )
        fuel -= 1
        progressed = False
        for violation in violations:
            fixed = ts_res(current, violation.node_id, decider, memo, branch_policy)
            if fixed is not None:
                changes += _diff_changes(current, fixed)
                current = fixed
                progressed = True
                break
        if not progressed:
            return Failed(
                assertion_of(current),
                violations[0].node_id,
                changes,
                reason="no liftable predicate clears the remaining violations",
            )


def _diff_changes(before: AssertionTree, after: AssertionTree) -> tuple[Change, ...]:
    out = []
    for nb, na in zip(before.nodes, after.nodes):
        if nb.label != na.label:
            out.append(Change(nb.node_id, nb.label, na.label, "lifted a future constraint here"))
    return tuple(out)


def branch_repair_options(
    t: AssertionTree, node_id: int, decider: Decider | None = None
) -> list[LiftPlan]:
    """The choices for an unsatisfiable branching: widen with the disjunction,
    or commit to one arm (possibly starving the others)."""
    decider = decider or default_decider()
    label = t.label(node_id)
    if not isinstance(label, SelectorLabel):
        raise TypeError(f"node {node_id} is not a branching point")
    if ts_node(t, node_id, decider):
        return []
    arms = [(c, t.label(c)) for c in t.children(node_id)]
    options = []
    candidates = [(disj(*(g.guard for _, g in arms)), None)]
    candidates.extend((guard.guard, guard.branch_label) for _, guard in arms)
    for lifted, branch_label in candidates:
        plan = build_plan(t, node_id, lifted, decider)
        effective = None
        warnings: tuple[str, ...] = ()
        if plan.result is not None:
            rebuilt = tree_of(plan.result)
            effective = _clears(rebuilt, node_id, decider)
            dead = []
            new_context = pred(rebuilt, node_id)
            for _, guard in arms:
                if not decider.satisfiable(conj(new_context, guard.guard)):
                    dead.append(f"branch {guard.branch_label} can never be taken after this repair")
            warnings = tuple(dead)
        options.append(
            LiftPlan(
                node_id,
                lifted,
                plan.insertions,
                plan.result,
                refusal=plan.refusal,
                effective=effective,
                warnings=warnings,
                branch_label=branch_label,
            )
        )
    return options


@dataclass(frozen=True)
class ConflictReport:
    """Why a node cannot be repaired, with everything the architect could use."""

    node_id: int
    target_vars: tuple[str, ...]
    responsible: str | None
    conflict_sets: tuple[Formula, ...]
    attempts: tuple[LiftPlan, ...]
    constrained_by: tuple[tuple[str, str | None], ...]
    outside_vars: tuple[str, ...]

    @property
    def empty(self) -> bool:
        return not self.conflict_sets and not self.attempts


def conflict_diagnostics(t: AssertionTree, node_id: int, decider: Decider | None = None) -> ConflictReport:
    decider = decider or default_decider()
    label = t.label(node_id)
    target_vars = t.introduced_vars(node_id)
    who = responsible(t, node_id)
    if isinstance(label, SelectorLabel):
        who = label.sender
    if ts_node(t, node_id, decider):
        return ConflictReport(node_id, target_vars, who, (), (), (), ())

    def assessed(plan: LiftPlan) -> LiftPlan:
        if plan.result is None:
            return plan
        rebuilt = tree_of(plan.result)
        return LiftPlan(
            plan.target,
            plan.lifted,
            plan.insertions,
            plan.result,
            effective=_clears(rebuilt, node_id, decider),
        )

    conflict_sets: list[Formula] = []
    attempts: list[LiftPlan] = []
    if isinstance(label, InteractionLabel):
        phi, rest = rewrite(label.predicate, label.variables)
        for candidate in split(t, node_id, phi, rest, decider):
            conflict_sets.append(candidate)
            lifted = _ordered_selection(label.predicate, candidate, phi)
            attempts.append(assessed(build_plan(t, node_id, lifted, decider)))
    elif isinstance(label, (RecDefLabel, RecCallLabel)):
        source = label.init_args if isinstance(label, RecDefLabel) else label.args
        lifted = substitute(label.invariant, dict(zip(label.params, source)))
        conflict_sets.append(lifted)
        attempts.append(assessed(build_plan(t, node_id, lifted, decider)))
    elif isinstance(label, SelectorLabel):
        for plan in branch_repair_options(t, node_id, decider):
            conflict_sets.append(plan.lifted)
            attempts.append(plan)

    blamed = set()
    for chunk in conflict_sets:
        blamed |= free_vars(chunk)
    blamed -= set(target_vars)
    constrained_by = []
    for name in _introduction_order(t, blamed):
        site = t.introduction_site(name)
        site_label = t.label(site) if site is not None else None
        owner = site_label.sender if isinstance(site_label, InteractionLabel) else None
        constrained_by.append((name, owner))
    outside = tuple(name for name, owner in constrained_by if owner != who)
    return ConflictReport(
        node_id,
        target_vars,
        who,
        tuple(conflict_sets),
        tuple(attempts),
        tuple(constrained_by),
        outside,
    )
