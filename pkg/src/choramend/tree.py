"""Node-addressed view of a global assertion.

Nodes get stable 0-based preorder ids at construction.  Label rewrites keep
ids, so checkers and repair logs can cite positions that survive edits.
Recursive-call nodes are annotated with their definition's parameters and
invariant during construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Union

from .assertions import (
    Branch,
    Branching,
    End,
    GlobalAssertion,
    Interaction,
    Prefix,
    RecCall,
    RecDef,
    SourceSpan,
)
from .errors import NodeNotFound
from .logic import TRUE, Expression, Formula, conj, expr_vars


@dataclass(frozen=True)
class InteractionLabel:
    sender: str
    receiver: str
    variables: tuple[str, ...]
    predicate: Formula


@dataclass(frozen=True)
class SelectorLabel:
    sender: str
    receiver: str


@dataclass(frozen=True)
class GuardLabel:
    guard: Formula
    branch_label: str


@dataclass(frozen=True)
class RecDefLabel:
    name: str
    init_args: tuple[Expression, ...]
    params: tuple[str, ...]
    invariant: Formula


@dataclass(frozen=True)
class RecCallLabel:
    name: str
    args: tuple[Expression, ...]
    # resolved from the enclosing definition
    params: tuple[str, ...]
    invariant: Formula


@dataclass(frozen=True)
class EndLabel:
    pass


NodeLabel = Union[InteractionLabel, SelectorLabel, GuardLabel, RecDefLabel, RecCallLabel, EndLabel]


@dataclass(frozen=True)
class TreeNode:
    node_id: int
    label: NodeLabel
    parent: int | None
    children: tuple[int, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class AssertionTree:
    nodes: tuple[TreeNode, ...]

    ROOT = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> TreeNode:
        if not 0 <= node_id < len(self.nodes):
            raise NodeNotFound(f"no node {node_id} (tree has {len(self.nodes)} nodes)")
        return self.nodes[node_id]

    def label(self, node_id: int) -> NodeLabel:
        return self.node(node_id).label

    def parent(self, node_id: int) -> int | None:
        return self.node(node_id).parent

    def children(self, node_id: int) -> tuple[int, ...]:
        return self.node(node_id).children

    def path_to(self, node_id: int) -> tuple[int, ...]:
        """Node ids from the root to node_id, inclusive."""
        self.node(node_id)
        out = []
        cur: int | None = node_id
        while cur is not None:
            out.append(cur)
            cur = self.nodes[cur].parent
        return tuple(reversed(out))

    def subtree_ids(self, node_id: int) -> tuple[int, ...]:
        out = []
        stack = [node_id]
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(reversed(self.node(cur).children))
        return tuple(out)

    def introduced_vars(self, node_id: int) -> tuple[str, ...]:
        """Variables first bound at this node: message payloads or loop parameters."""
        label = self.label(node_id)
        if isinstance(label, InteractionLabel):
            return label.variables
        if isinstance(label, RecDefLabel):
            return label.params
        return ()

    def predicate_of(self, node_id: int) -> Formula | None:
        """The predicate asserted at this node, if the label carries one."""
        label = self.label(node_id)
        if isinstance(label, InteractionLabel):
            return label.predicate
        if isinstance(label, GuardLabel):
            return label.guard
        if isinstance(label, RecDefLabel):
            return label.invariant
        return None

    def introduction_site(self, name: str) -> int | None:
        """Preorder-first node that binds the given variable name."""
        for node in self.nodes:
            if name in self.introduced_vars(node.node_id):
                return node.node_id
        return None

    def interaction_ids(self) -> tuple[int, ...]:
        return tuple(n.node_id for n in self.nodes if isinstance(n.label, InteractionLabel))

    def with_label(self, node_id: int, label: NodeLabel) -> "AssertionTree":
        """Same tree with one node relabelled; ids and shape unchanged."""
        old = self.node(node_id)
        nodes = list(self.nodes)
        nodes[node_id] = replace(old, label=label)
        return AssertionTree(tuple(nodes))


def tree_of(g: GlobalAssertion) -> AssertionTree:
    """Preorder arena of the assertion.

    A branching becomes a selector node whose children are guard nodes, one
    per branch, each guard owning the branch body.
    """
    nodes: list[TreeNode] = []

    def add(label: NodeLabel, parent: int | None, span: SourceSpan | None) -> int:
        nid = len(nodes)
        nodes.append(TreeNode(nid, label, parent, (), span))
        return nid

    def attach(parent: int, child: int) -> None:
        nodes[parent] = replace(nodes[parent], children=nodes[parent].children + (child,))

    def walk(a: GlobalAssertion, parent: int | None, defs: dict[str, RecDefLabel]) -> int:
        match a:
            case Prefix(i, cont, span):
                nid = add(InteractionLabel(i.sender, i.receiver, i.variables, i.predicate), parent, i.span or span)
                child = walk(cont, nid, defs)
                attach(nid, child)
                return nid
            case Branching(s, r, branches, span):
                nid = add(SelectorLabel(s, r), parent, span)
                for b in branches:
                    gid = add(GuardLabel(b.guard, b.label), nid, b.span)
                    attach(nid, gid)
                    body = walk(b.body, gid, defs)
                    attach(gid, body)
                return nid
            case RecDef(name, init_args, params, invariant, body, span):
                label = RecDefLabel(name, init_args, params, invariant)
                nid = add(label, parent, span)
                defs2 = dict(defs)
                defs2[name] = label
                child = walk(body, nid, defs2)
                attach(nid, child)
                return nid
            case RecCall(name, args, span):
                d = defs.get(name)
                if d is None:
                    raise NodeNotFound(f"jump to undefined loop {name}")
                return add(RecCallLabel(name, args, d.params, d.invariant), parent, span)
            case End(span):
                return add(EndLabel(), parent, span)
        raise TypeError(f"not a global assertion: {a!r}")

    walk(g, None, {})
    return AssertionTree(tuple(nodes))


def assertion_of(t: AssertionTree) -> GlobalAssertion:
    """Rebuild the syntax from the tree; inverse of tree_of."""

    def build(node_id: int) -> GlobalAssertion:
        node = t.node(node_id)
        label = node.label
        if isinstance(label, InteractionLabel):
            (child,) = node.children
            i = Interaction(label.sender, label.receiver, label.variables, label.predicate, node.span)
            return Prefix(i, build(child), node.span)
        if isinstance(label, SelectorLabel):
            branches = []
            for gid in node.children:
                guard_node = t.node(gid)
                guard = guard_node.label
                assert isinstance(guard, GuardLabel)
                (body,) = guard_node.children
                branches.append(Branch(guard.guard, guard.branch_label, build(body), guard_node.span))
            return Branching(label.sender, label.receiver, tuple(branches), node.span)
        if isinstance(label, RecDefLabel):
            (child,) = node.children
            return RecDef(label.name, label.init_args, label.params, label.invariant, build(child), node.span)
        if isinstance(label, RecCallLabel):
            return RecCall(label.name, label.args, node.span)
        if isinstance(label, EndLabel):
            return End(node.span)
        raise TypeError(f"unexpected label {label!r}")

    return build(AssertionTree.ROOT)


def pred(t: AssertionTree, node_id: int) -> Formula:
    """Everything already promised above a node.

    The conjunction of predicates on the way from the root to the node's
    parent: message predicates, branch guards, and loop invariants.
    """
    parts: list[Formula] = []
    for ancestor in t.path_to(node_id)[:-1]:
        p = t.predicate_of(ancestor)
        if p is not None and p != TRUE:
            parts.append(p)
    if not parts:
        return TRUE
    return conj(*parts)


def _rec_positions(t: AssertionTree) -> list[tuple[str, tuple[str, ...], tuple[Expression, ...], list[tuple[Expression, ...]]]]:
    """Per definition: name, params, init args, and the args of every jump to it."""
    out = []
    for node in t.nodes:
        if isinstance(node.label, RecDefLabel):
            calls = [
                n.label.args
                for nid in t.subtree_ids(node.node_id)
                for n in (t.node(nid),)
                if isinstance(n.label, RecCallLabel) and n.label.name == node.label.name
            ]
            out.append((node.label.name, node.label.params, node.label.init_args, calls))
    return out


def knows_in_tree(t: AssertionTree, participant: str) -> frozenset[str]:
    """Variables the participant can track through the whole protocol.

    A payload variable is known to both ends of its message.  A loop
    parameter is known once the participant can compute its initial value
    and the value passed at every jump.
    """
    known: set[str] = set()
    for nid in t.interaction_ids():
        label = t.label(nid)
        assert isinstance(label, InteractionLabel)
        if participant in (label.sender, label.receiver):
            known.update(label.variables)
    recs = _rec_positions(t)
    changed = True
    while changed:
        changed = False
        for _, params, init_args, calls in recs:
            for i, param in enumerate(params):
                if param in known or i >= len(init_args):
                    continue
                if expr_vars(init_args[i]) <= known and all(
                    i < len(args) and expr_vars(args[i]) <= known for args in calls
                ):
                    known.add(param)
                    changed = True
    return frozenset(known)


def knows(participant: str, g: GlobalAssertion) -> frozenset[str]:
    return knows_in_tree(tree_of(g), participant)


def knowledge_on_path(t: AssertionTree, participant: str, node_id: int) -> frozenset[str]:
    """What the participant has seen by the time the node is reached.

    Messages count only up to and including the node.  A loop parameter on
    the path counts when its initial value is computable from what the
    participant has seen so far and the parameter is trackable across the
    whole protocol.
    """
    on_path = set(t.path_to(node_id))
    known: set[str] = set()
    for nid in t.interaction_ids():
        if nid not in on_path:
            continue
        label = t.label(nid)
        assert isinstance(label, InteractionLabel)
        if participant in (label.sender, label.receiver):
            known.update(label.variables)
    full = knows_in_tree(t, participant)
    rec_heads = [
        t.label(nid)
        for nid in on_path
        if isinstance(t.label(nid), RecDefLabel)
    ]
    changed = True
    while changed:
        changed = False
        for head in rec_heads:
            assert isinstance(head, RecDefLabel)
            for i, param in enumerate(head.params):
                if param in known or i >= len(head.init_args):
                    continue
                if expr_vars(head.init_args[i]) <= known and param in full:
                    known.add(param)
                    changed = True
    return frozenset(known)


def interaction_label(t: AssertionTree, node_id: int) -> InteractionLabel:
    label = t.label(node_id)
    if not isinstance(label, InteractionLabel):
        raise NodeNotFound(f"node {node_id} is not a message node")
    return label


def iter_nodes(t: AssertionTree) -> Iterator[TreeNode]:
    return iter(t.nodes)
