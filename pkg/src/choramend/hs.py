"""History sensitivity: senders must know every variable they promise about.

A node violates the property when the participant responsible for its
predicate cannot track some variable in it.  Two repairs are offered:
strengthening replaces the unknown variable with a known one whose context
makes the original promise follow; propagation threads the unknown value
through intermediate messages under fresh alias variables until it reaches
the responsible participant.
"""

from __future__ import annotations

from dataclasses import dataclass

from .assertions import GlobalAssertion, assertion_names
from .logic import And, Cmp, Decider, Formula, Var, conj, conjuncts, free_vars, substitute, default_decider
from .tree import (
    AssertionTree,
    GuardLabel,
    InteractionLabel,
    NodeLabel,
    SelectorLabel,
    assertion_of,
    knowledge_on_path,
    knows,
    pred,
    tree_of,
)


@dataclass(frozen=True)
class HsViolation:
    node_id: int
    responsible: str
    unknown_vars: frozenset[str]


@dataclass(frozen=True)
class Change:
    """One node relabelling, kept for audit logs and diff display."""

    node_id: int
    before: NodeLabel
    after: NodeLabel
    note: str


@dataclass(frozen=True)
class Fixed:
    result: GlobalAssertion
    changes: tuple[Change, ...]


@dataclass(frozen=True)
class Unchanged:
    pass


@dataclass(frozen=True)
class Failed:
    """Repair gave up at node_id; best_effort keeps any earlier progress."""

    best_effort: GlobalAssertion
    node_id: int
    changes: tuple[Change, ...] = ()
    reason: str = ""


RepairOutcome = Fixed | Unchanged | Failed


def responsible(t: AssertionTree, node_id: int) -> str | None:
    """Who has to guarantee the predicate at a node.

    The sender of a message, or the selecting participant for a branch
    guard; nobody for the other labels.
    """
    label = t.label(node_id)
    if isinstance(label, InteractionLabel):
        return label.sender
    if isinstance(label, GuardLabel):
        parent = t.parent(node_id)
        assert parent is not None
        selector = t.label(parent)
        assert isinstance(selector, SelectorLabel)
        return selector.sender
    return None


def violations_in_tree(t: AssertionTree) -> list[HsViolation]:
    out = []
    for node in t.nodes:
        who = responsible(t, node.node_id)
        if who is None:
            continue
        psi = t.predicate_of(node.node_id)
        if psi is None:
            continue
        unknown = free_vars(psi) - knowledge_on_path(t, who, node.node_id)
        if unknown:
            out.append(HsViolation(node.node_id, who, frozenset(unknown)))
    return out


def hs_violations(g: GlobalAssertion) -> list[HsViolation]:
    """All nodes whose responsible participant lacks a predicate variable, in preorder."""
    return violations_in_tree(tree_of(g))


def _set_predicate(label: NodeLabel, predicate: Formula) -> NodeLabel:
    if isinstance(label, InteractionLabel):
        return InteractionLabel(label.sender, label.receiver, label.variables, predicate)
    if isinstance(label, GuardLabel):
        return GuardLabel(predicate, label.branch_label)
    raise TypeError(f"node label carries no rewritable predicate: {label!r}")


def _candidate_order(t: AssertionTree, who: str, node_id: int) -> list[str]:
    """Known variables, the most recently introduced first."""
    known = knowledge_on_path(t, who, node_id)
    ranked = []
    for nid in t.path_to(node_id):
        for idx, name in enumerate(t.introduced_vars(nid)):
            if name in known:
                ranked.append((nid, idx, name))
    ranked.sort(key=lambda r: (r[0], r[1]), reverse=True)
    return [name for _, _, name in ranked]


@dataclass(frozen=True)
class StrengthenOption:
    node_id: int
    variable: str
    replacement: str
    result: GlobalAssertion
    changes: tuple[Change, ...]


def strengthen_candidates(
    g: GlobalAssertion,
    node_id: int,
    variable: str,
    decider: Decider | None = None,
    first_only: bool = False,
) -> list[StrengthenOption]:
    """Replacements v' making the strengthened predicate still imply the original.

    A candidate must keep the node's predicate satisfiable under its
    context; a contradiction would trivially imply anything.
    """
    decider = decider or default_decider()
    t = tree_of(g)
    who = responsible(t, node_id)
    psi = t.predicate_of(node_id)
    if who is None or psi is None:
        return []
    context = pred(t, node_id)
    out = []
    for candidate in _candidate_order(t, who, node_id):
        if candidate == variable:
            continue
        replaced = substitute(psi, {variable: Var(candidate)})
        if not decider.entails_or_false(And((context, replaced)), psi):
            continue
        if not decider.satisfiable_or_false(And((context, replaced))):
            continue
        old = t.label(node_id)
        new = _set_predicate(old, replaced)
        change = Change(node_id, old, new, f"strengthened by substituting {candidate} for {variable}")
        out.append(
            StrengthenOption(node_id, variable, candidate, assertion_of(t.with_label(node_id, new)), (change,))
        )
        if first_only:
            break
    return out


def strengthen_once(g: GlobalAssertion, decider: Decider | None = None) -> RepairOutcome:
    """One strengthening step on the first violation, or Failed if none applies."""
    decider = decider or default_decider()
    violations = hs_violations(g)
    if not violations:
        return Unchanged()
    v = violations[0]
    variable = sorted(v.unknown_vars)[0]
    options = strengthen_candidates(g, v.node_id, variable, decider, first_only=True)
    if not options:
        return Failed(g, v.node_id, reason=f"no known variable can stand in for {variable}")
    best = options[0]
    return Fixed(best.result, best.changes)


def phi1(g: GlobalAssertion, decider: Decider | None = None) -> RepairOutcome:
    """Strengthen until clean or stuck."""
    decider = decider or default_decider()
    changes: tuple[Change, ...] = ()
    current = g
    while True:
        step = strengthen_once(current, decider)
        if isinstance(step, Unchanged):
            return Fixed(current, changes) if changes else Unchanged()
        if isinstance(step, Failed):
            return Failed(current, step.node_id, changes, step.reason)
        changes += step.changes
        current = step.result


def find_chain(t: AssertionTree, variable: str, target: int) -> list[int] | None:
    """Forwarding route for a value: messages along the target's path.

    Each hop's receiver sends the next hop, the final hop's receiver is the
    participant responsible for the target, and the first hop's sender
    already follows the variable when that message happens.  Shortest route
    wins; ties go to the earliest node sequence.
    """
    who = responsible(t, target)
    if who is None:
        return None
    path = t.path_to(target)[:-1]
    hops = [nid for nid in path if isinstance(t.label(nid), InteractionLabel)]

    def sender(nid: int) -> str:
        label = t.label(nid)
        assert isinstance(label, InteractionLabel)
        return label.sender

    def receiver(nid: int) -> str:
        label = t.label(nid)
        assert isinstance(label, InteractionLabel)
        return label.receiver

    starts = [nid for nid in hops if variable in knowledge_on_path(t, sender(nid), nid)]

    for length in range(1, len(hops) + 1):
        def search(prefix: list[int], last: int) -> list[int] | None:
            if len(prefix) == length:
                if receiver(last) == who:
                    return prefix
                return None
            for nxt in hops:
                if nxt <= last:
                    continue
                if receiver(last) == sender(nxt):
                    found = search(prefix + [nxt], nxt)
                    if found is not None:
                        return found
            return None

        for start in starts:
            found = search([start], start)
            if found is not None:
                return found + [target]
    return None


class FreshNames:
    """Hands out alias names u1, u2, ... skipping anything already taken."""

    def __init__(self, used: set[str]):
        self.used = set(used)
        self.counter = 0

    def take(self) -> str:
        while True:
            self.counter += 1
            name = f"u{self.counter}"
            if name not in self.used:
                self.used.add(name)
                return name


@dataclass(frozen=True)
class PropagateOption:
    node_id: int
    variable: str
    chain: tuple[int, ...]
    aliases: tuple[str, ...]
    result: GlobalAssertion
    changes: tuple[Change, ...]
    disclosed_to: tuple[str, ...]


def propagate_candidate(
    g: GlobalAssertion,
    node_id: int,
    variable: str,
    fresh: FreshNames | None = None,
) -> PropagateOption | None:
    """The alias-threading rewrite for one violation, if a route exists."""
    t = tree_of(g)
    chain = find_chain(t, variable, node_id)
    if chain is None:
        return None
    fresh = fresh or FreshNames(set(assertion_names(g)))
    hops = chain[:-1]
    aliases = tuple(fresh.take() for _ in hops)
    changes = []
    gained = []
    for i, hop in enumerate(hops):
        label = t.label(hop)
        assert isinstance(label, InteractionLabel)
        source = variable if i == 0 else aliases[i - 1]
        new_pred = conj(label.predicate, Cmp("=", Var(aliases[i]), Var(source)))
        new = InteractionLabel(label.sender, label.receiver, label.variables + (aliases[i],), new_pred)
        changes.append(Change(hop, label, new, f"forwards {variable} as {aliases[i]}"))
        if variable not in knows(label.receiver, g):
            gained.append(label.receiver)
        t = t.with_label(hop, new)
    old = t.label(node_id)
    psi = t.predicate_of(node_id)
    assert psi is not None
    new = _set_predicate(old, substitute(psi, {variable: Var(aliases[-1])}))
    changes.append(Change(node_id, old, new, f"rephrased over the forwarded alias {aliases[-1]}"))
    t = t.with_label(node_id, new)
    return PropagateOption(
        node_id,
        variable,
        tuple(chain),
        aliases,
        assertion_of(t),
        tuple(changes),
        tuple(dict.fromkeys(gained)),
    )


def propagate_once(g: GlobalAssertion) -> RepairOutcome:
    """One propagation step on the first violation, or Failed without a route."""
    violations = hs_violations(g)
    if not violations:
        return Unchanged()
    v = violations[0]
    variable = sorted(v.unknown_vars)[0]
    option = propagate_candidate(g, v.node_id, variable)
    if option is None:
        return Failed(g, v.node_id, reason=f"no forwarding route brings {variable} to {v.responsible}")
    return Fixed(option.result, option.changes)


def phi2(g: GlobalAssertion) -> RepairOutcome:
    """Propagate until clean or stuck."""
    changes: tuple[Change, ...] = ()
    current = g
    while True:
        step = propagate_once(current)
        if isinstance(step, Unchanged):
            return Fixed(current, changes) if changes else Unchanged()
        if isinstance(step, Failed):
            return Failed(current, step.node_id, changes, step.reason)
        changes += step.changes
        current = step.result


def disclosure_report(before: GlobalAssertion, after: GlobalAssertion) -> list[tuple[str, tuple[str, ...]]]:
    """Who learns which propagated variable if the repair is applied.

    Reconstructed from the label diff: added payload variables whose new
    equality conjunct aliases them to an earlier variable.  Receivers of
    aliasing messages count unless they could already track the variable.
    """
    tb = tree_of(before)
    ta = tree_of(after)
    alias_to_source: dict[str, str] = {}
    alias_receivers: dict[str, list[str]] = {}
    for node_b, node_a in zip(tb.nodes, ta.nodes):
        lb, la = node_b.label, node_a.label
        if not (isinstance(lb, InteractionLabel) and isinstance(la, InteractionLabel)):
            continue
        added = la.variables[len(lb.variables):]
        if not added:
            continue
        new_conjuncts = [c for c in conjuncts(la.predicate) if c not in conjuncts(lb.predicate)]
        for alias in added:
            for c in new_conjuncts:
                if isinstance(c, Cmp) and c.op == "=" and c.lhs == Var(alias) and isinstance(c.rhs, Var):
                    alias_to_source[alias] = c.rhs.name
                    alias_receivers.setdefault(alias, []).append(la.receiver)

    def root_of(name: str) -> str:
        seen = set()
        while name in alias_to_source and name not in seen:
            seen.add(name)
            name = alias_to_source[name]
        return name

    gained: dict[str, list[str]] = {}
    for alias, receivers in alias_receivers.items():
        source = root_of(alias)
        for p in receivers:
            if source not in knows(p, before) and p not in gained.get(source, []):
                gained.setdefault(source, []).append(p)
    return [(v, tuple(sorted(ps))) for v, ps in sorted(gained.items())]
