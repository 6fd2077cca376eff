"""Assertion ADT, tree view, knowledge, and well-formedness."""

from pathlib import Path

from hypothesis import given, settings

from choramend.assertions import (
    Branching,
    End,
    Interaction,
    Prefix,
    RecDef,
    TypeEnd,
    TypeInteraction,
    TypePrefix,
    check_well_formed,
    erase,
    normalize,
)
from choramend.logic import TRUE, And, BoolLit, Cmp, Lit, Var
from choramend.parser import format_formula, parse
from choramend.tree import (
    EndLabel,
    GuardLabel,
    InteractionLabel,
    RecCallLabel,
    RecDefLabel,
    SelectorLabel,
    assertion_of,
    knowledge_on_path,
    knows,
    pred,
    tree_of,
)

from .strategies import well_formed_assertions

CORPUS = Path(__file__).parent / "corpus"


def load(name):
    return parse((CORPUS / name).read_text())


class TestTreeShape:
    def test_end_alone(self):
        t = tree_of(End())
        assert len(t) == 1
        assert isinstance(t.label(0), EndLabel)

    def test_two_interactions(self):
        t = tree_of(load("eq1.ga"))
        assert [type(n.label).__name__ for n in t.nodes] == [
            "InteractionLabel",
            "InteractionLabel",
            "EndLabel",
        ]
        assert t.parent(1) == 0
        assert t.children(0) == (1,)

    def test_running_example_numbering(self):
        t = tree_of(load("ex32.ga"))
        assert isinstance(t.label(0), RecDefLabel)
        for nid, sender in ((1, "Alice"), (2, "Bob"), (3, "Carol"), (4, "Carol")):
            label = t.label(nid)
            assert isinstance(label, InteractionLabel)
            assert label.sender == sender
        call = t.label(5)
        assert isinstance(call, RecCallLabel)
        assert call.params == ("v",)
        assert call.invariant == Cmp(">", Var("v"), Lit(0))

    def test_branching_shape(self):
        t = tree_of(load("choice_small.ga"))
        assert isinstance(t.label(0), InteractionLabel)
        assert isinstance(t.label(1), SelectorLabel)
        guards = [t.label(c) for c in t.children(1)]
        assert all(isinstance(g, GuardLabel) for g in guards)
        assert [g.branch_label for g in guards] == ["pay", "quit"]
        # each guard owns exactly the branch body
        pay = t.children(1)[0]
        assert isinstance(t.label(t.children(pay)[0]), InteractionLabel)

    def test_roundtrip_corpus(self):
        for name in ("eq1.ga", "ex21.ga", "ex31.ga", "ex32.ga", "ex36.ga", "choice_small.ga"):
            g = load(name)
            assert assertion_of(tree_of(g)) == g

    @given(well_formed_assertions())
    @settings(max_examples=150, deadline=None)
    def test_roundtrip_generated(self, g):
        assert assertion_of(tree_of(g)) == g

    def test_with_label_keeps_ids(self):
        t = tree_of(load("eq1.ga"))
        old = t.label(1)
        assert isinstance(old, InteractionLabel)
        t2 = t.with_label(1, InteractionLabel(old.sender, old.receiver, old.variables, TRUE))
        assert t2.node(1).parent == t.node(1).parent
        assert t2.label(0) == t.label(0)
        assert isinstance(t2.label(1), InteractionLabel)
        assert t2.label(1).predicate == TRUE


class TestPred:
    def test_root_is_trivial(self):
        t = tree_of(load("ex32.ga"))
        assert pred(t, 0) == TRUE

    def test_collects_ancestor_promises(self):
        t = tree_of(load("ex32.ga"))
        assert format_formula(pred(t, 3)) == "v > 0 && v >= v1 && v2 > v1"

    def test_single_predecessor(self):
        t = tree_of(load("eq1.ga"))
        assert format_formula(pred(t, 1)) == "a > 0"

    def test_guard_contributes(self):
        t = tree_of(load("choice_small.ga"))
        # node 3: interaction inside the pay branch
        assert format_formula(pred(t, 3)) == "price > 0 && price < 100"


class TestKnows:
    def test_relay_loop(self):
        g = load("ex21.ga")
        assert knows("Carol", g) == {"v2"}
        assert knows("Bob", g) == {"v", "v1", "v2"}
        assert knows("Alice", g) == {"v", "v1"}

    def test_empty_for_end(self):
        assert knows("Alice", End()) == frozenset()

    def test_path_restricted_excludes_later_messages(self):
        t = tree_of(load("ex32.ga"))
        # at node 2 Carol has only just received v2
        assert knowledge_on_path(t, "Carol", 2) == {"v2"}
        # by node 4 she has v3 and v4 of her own but still cannot track v
        assert knowledge_on_path(t, "Carol", 4) == {"v2", "v3", "v4"}

    def test_loop_parameter_on_path(self):
        t = tree_of(load("ex32.ga"))
        assert "v" in knowledge_on_path(t, "Bob", 2)
        assert "v" in knowledge_on_path(t, "Alice", 1)


class TestNormalize:
    def test_noop_on_distinct_binders(self):
        g = load("ex32.ga")
        assert normalize(g) == g

    def test_rebound_name_gets_tick(self):
        g = parse("Alice -> Bob : (x | x > 0) . Bob -> Carol : (x | x > 1) . end")
        n = normalize(g)
        assert isinstance(n, Prefix)
        second = n.continuation
        assert isinstance(second, Prefix)
        assert second.interaction.variables == ("x'",)
        assert second.interaction.predicate == Cmp(">", Var("x'"), Lit(1))

    def test_inner_scope_references_follow_rename(self):
        g = parse(
            "Alice -> Bob : (x | x > 0) . "
            "rec t<x>(x | x > 0) . Bob -> Carol : (y | y > x) . t<y>"
        )
        n = normalize(g)
        assert isinstance(n, Prefix)
        loop = n.continuation
        assert isinstance(loop, RecDef)
        assert loop.params == ("x'",)
        # the init argument still refers to the outer x
        assert loop.init_args == (Var("x"),)
        body = loop.body
        assert isinstance(body, Prefix)
        assert body.interaction.predicate == Cmp(">", Var("y"), Var("x'"))

    def test_duplicate_loop_names_renamed(self):
        g = parse(
            "rec t<1>(a | a > 0) . Alice -> Bob : (b | true) . "
            "rec t<2>(c | c > 0) . Bob -> Carol : (d | true) . t<d>"
        )
        n = normalize(g)
        loop = n
        assert isinstance(loop, RecDef)
        inner = loop.body
        assert isinstance(inner, Prefix)
        inner_loop = inner.continuation
        assert isinstance(inner_loop, RecDef)
        assert inner_loop.name == "t'"
        # the call resolves to the inner loop
        call = inner_loop.body
        assert isinstance(call, Prefix)
        assert call.continuation.name == "t'"


class TestErase:
    def test_strips_predicates(self):
        g = load("eq1.ga")
        assert erase(g) == TypePrefix(
            TypeInteraction("Alice", "Bob", ("a",)),
            TypePrefix(TypeInteraction("Bob", "Carol", ("b",)), TypeEnd()),
        )

    @given(well_formed_assertions(max_depth=4))
    @settings(max_examples=60, deadline=None)
    def test_independent_of_predicates(self, g):
        def blank(a):
            match a:
                case Prefix(i, cont, _):
                    return Prefix(
                        Interaction(i.sender, i.receiver, i.variables, BoolLit(True)), blank(cont)
                    )
                case Branching(s, r, branches, _):
                    return Branching(
                        s,
                        r,
                        tuple(b.__class__(BoolLit(True), b.label, blank(b.body)) for b in branches),
                    )
                case RecDef(name, init_args, params, _, body, _):
                    return RecDef(name, init_args, params, BoolLit(True), blank(body))
                case _:
                    return a

        assert erase(g) == erase(blank(g))


class TestWellFormed:
    def test_clean_corpus(self):
        for name in ("eq1.ga", "ex21.ga", "ex31.ga", "ex32.ga", "ex36.ga", "choice_small.ga"):
            assert check_well_formed(load(name)) == []

    def test_unbound_variable(self):
        g = parse("Alice -> Bob : (x | y > 0) . end")
        (d,) = check_well_formed(g)
        assert d.kind == "unbound_variable"
        assert d.name == "y"
        assert d.node_id == 0

    def test_arity_mismatch_at_definition(self):
        g = parse("rec t<1, 2>(v | true) . Alice -> Bob : (x | true) . t<x, x>")
        kinds = [d.kind for d in check_well_formed(g)]
        assert "arity_mismatch" in kinds

    def test_arity_mismatch_at_call(self):
        g = parse("rec t<1>(v | true) . Alice -> Bob : (x | true) . t<x, x>")
        defects = check_well_formed(g)
        assert [d.kind for d in defects] == ["arity_mismatch"]
        assert defects[0].node_id == 2

    def test_unknown_loop(self):
        g = parse("Alice -> Bob : (x | true) . s<x>")
        defects = check_well_formed(g)
        assert [d.kind for d in defects] == ["unknown_recursion"]

    def test_unguarded_jump(self):
        g = parse("rec t<1>(v | true) . t<v>")
        defects = check_well_formed(g)
        assert [d.kind for d in defects] == ["unguarded_recursion"]

    def test_selector_guards_jump(self):
        g = parse("rec t<1>(v | true) . choice Alice -> Bob { {true} again: t<v> ; {true} stop: end }")
        assert check_well_formed(g) == []

    def test_self_communication(self):
        g = parse("Alice -> Alice : (x | true) . end")
        assert [d.kind for d in check_well_formed(g)] == ["self_communication"]

    def test_duplicate_payload_variable(self):
        g = parse("Alice -> Bob : (x x | true) . end")
        assert [d.kind for d in check_well_formed(g)] == ["duplicate_variable"]

    def test_duplicate_branch_label(self):
        g = parse("choice Alice -> Bob { {true} go: end ; {true} go: end }")
        assert [d.kind for d in check_well_formed(g)] == ["duplicate_label"]

    @given(well_formed_assertions())
    @settings(max_examples=150, deadline=None)
    def test_generator_emits_clean_assertions(self, g):
        assert check_well_formed(g) == []
