"""Cross-algorithm guarantees on generated assertions.

Each repair family must stay in its lane: keep the erased type intact,
never break what was already clean, and leave every leaf of the tree with
a context no weaker than before. Validity questions go to the solver;
pathological draws that time out are discarded, never waved through.
"""

from hypothesis import assume, given, settings

from choramend.assertions import erase
from choramend.errors import BudgetExceeded, SolverTimeout
from choramend.hs import Failed, Fixed, hs_violations, phi1, phi2
from choramend.logic import Implies, conj, default_decider
from choramend.tree import pred, tree_of
from choramend.ts import node_obligation, phi3, ts_res, ts_violations

from .strategies import well_formed_assertions


def outcome_tree(g, out):
    if isinstance(out, Fixed):
        return out.result
    if isinstance(out, Failed):
        return out.best_effort
    return g


class TestLaneDiscipline:
    @settings(max_examples=60, deadline=None)
    @given(well_formed_assertions())
    def test_lifting_never_touches_the_erased_type(self, g):
        try:
            out = phi3(g, branch_policy="disjunction")
        except (SolverTimeout, BudgetExceeded):
            assume(False)
            return
        assert erase(outcome_tree(g, out)) == erase(g)

    @settings(max_examples=60, deadline=None)
    @given(well_formed_assertions())
    def test_strengthening_preserves_reachability_cleanliness(self, g):
        decider = default_decider()
        try:
            if ts_violations(g, decider):
                assume(False)
                return
            out = phi1(g, decider)
            assert ts_violations(outcome_tree(g, out), decider) == []
        except (SolverTimeout, BudgetExceeded):
            assume(False)

    @settings(max_examples=60, deadline=None)
    @given(well_formed_assertions())
    def test_forwarding_preserves_reachability_cleanliness(self, g):
        decider = default_decider()
        try:
            if ts_violations(g, decider):
                assume(False)
                return
            out = phi2(g)
            assert ts_violations(outcome_tree(g, out), decider) == []
        except (SolverTimeout, BudgetExceeded):
            assume(False)

    @settings(max_examples=60, deadline=None)
    @given(well_formed_assertions())
    def test_lifting_preserves_knowledge_cleanliness(self, g):
        if hs_violations(g):
            assume(False)
            return
        try:
            out = phi3(g, branch_policy="disjunction")
        except (SolverTimeout, BudgetExceeded):
            assume(False)
            return
        assert hs_violations(outcome_tree(g, out)) == []


def augmented_context(t, leaf, decider):
    owed = [
        obligation
        for m in t.path_to(leaf)
        if (obligation := node_obligation(t, m)) is not None
    ]
    return conj(pred(t, leaf), *owed)


def assert_leaves_only_tighten(g, decider):
    """One repair step: every leaf context may only strengthen, and inside
    the repaired subtree the before and after contexts agree exactly."""
    violations = ts_violations(g, decider)
    if not violations:
        return False
    target = violations[0].node_id
    before = tree_of(g)
    after = ts_res(before, target, decider)
    if after is None:
        return False
    leaves = [n for n in range(len(before.nodes)) if not before.children(n)]
    inside = set(before.subtree_ids(target))
    for leaf in leaves:
        aug_before = augmented_context(before, leaf, decider)
        aug_after = augmented_context(after, leaf, decider)
        assert decider.is_valid(Implies(aug_after, aug_before))
        if leaf in inside:
            assert decider.is_valid(Implies(aug_before, aug_after))
    return True


class TestLeafContexts:
    def test_known_violating_corpus_is_covered(self):
        from pathlib import Path

        from choramend.parser import parse

        corpus = Path(__file__).parent / "corpus"
        exercised = 0
        for name in ("ex41", "ex43", "ex44_game", "ex21", "ex32", "s5_main"):
            g = parse((corpus / f"{name}.ga").read_text())
            if assert_leaves_only_tighten(g, default_decider()):
                exercised += 1
        assert exercised >= 5

    @settings(max_examples=60, deadline=None)
    @given(well_formed_assertions())
    def test_one_lift_only_tightens_leaves_and_fixes_its_subtree_evenly(self, g):
        decider = default_decider()
        try:
            assert_leaves_only_tighten(g, decider)
        except (SolverTimeout, BudgetExceeded):
            assume(False)
