"""Session loop: diagnose, offer, apply, undo, audit, snapshot."""

import json
from pathlib import Path

import pytest

from choramend import session as S
from choramend.assertions import check_well_formed
from choramend.errors import EmptyHistory, StaleChoice
from choramend.parser import format_assertion, parse

CORPUS = Path(__file__).parent / "corpus"


def load(name):
    return parse((CORPUS / f"{name}.ga").read_text())


# Strengthen at node 2 replaces x; the later lift inserts at that same node.
OVERLAP = """p -> q : (x | x < 3) .
q -> r : (y | y > 5) .
r -> q : (z | z > x) .
q -> p : (w | w < z && w > 9) .
end
"""

G2_FIVE_LINES = """rec t<10>(v | v > 0) .
  Alice -> Bob : (v1 | v >= v1) .
  Bob -> Carol : (v2 u1 | v2 > v1 && u1 = v) .
  Carol -> Alice : (v3 | v3 > v2) .
  Carol -> Bob : (v4 | v4 > u1) ."""


class TestDiagnose:
    def test_main_example_lists_knowledge_problems_first(self):
        found = S.diagnose(load("s5_main"))
        assert [(v.id, v.kind, v.node) for v in found] == [
            ("hs-3", "HS", 3),
            ("hs-4", "HS", 4),
            ("ts-7", "TS", 7),
            ("ts-9", "TS", 9),
        ]
        by_id = {v.id: v for v in found}
        assert by_id["hs-3"].responsible == "Carol"
        assert by_id["hs-3"].unknown_vars == ("v1",)
        assert by_id["hs-4"].unknown_vars == ("v",)
        assert by_id["ts-7"].ts_kind == "rec-call"
        assert by_id["ts-9"].ts_kind == "interaction"
        assert by_id["ts-9"].responsible == "Alice"

    def test_spans_point_at_source_lines(self):
        found = S.diagnose(load("s5_main"))
        assert [v.span.line for v in found] == [4, 5, 7, 8]

    def test_clean_assertion_has_no_violations(self):
        assert S.diagnose(load("eq1")) == []

    def test_narrowing_example_reports_one(self):
        found = S.diagnose(load("ex41"))
        assert [(v.id, v.ts_kind) for v in found] == [("ts-2", "interaction")]
        assert found[0].span.line == 4


class TestOffers:
    def test_main_example_offer_batch(self):
        s = S.start_session(load("s5_main"))
        got = [(c.id, c.algorithm) for c in S.offers(s)]
        assert got == [
            ("0:hs-3:phi1:0", "phi1"),
            ("0:hs-3:phi2:1", "phi2"),
            ("0:hs-4:phi2:0", "phi2"),
            ("0:ts-7:phi3-lift:0", "phi3-lift"),
        ]

    def test_strengthen_offer_substitutes_a_seen_variable(self):
        s = S.start_session(load("s5_main"))
        phi1 = S.offers(s)[0]
        assert phi1.variable == "v1"
        assert phi1.replacement == "v2"
        assert [(c.node_id, c.note) for c in phi1.changes] == [
            (3, "strengthened by substituting v2 for v1")
        ]

    def test_forwarding_offers_share_one_alias_allocator(self):
        s = S.start_session(load("s5_main"))
        forwards = [c for c in S.offers(s) if c.algorithm == "phi2"]
        assert [c.changes[0].note for c in forwards] == [
            "forwards v1 as u1",
            "forwards v as u2",
        ]
        assert [c.warnings for c in forwards] == [
            ("forwarding reveals v1 to Carol",),
            ("forwarding reveals v to Carol",),
        ]

    def test_unliftable_violation_gets_no_offer(self):
        s = S.start_session(load("s5_main"))
        assert not [c for c in S.offers(s) if c.violation_id == "ts-9"]

    def test_standalone_candidate_ids_have_no_epoch(self):
        g = load("s5_main")
        violation = S.diagnose(g)[0]
        ids = [c.id for c in S.candidate_repairs(g, violation)]
        assert ids == ["hs-3:phi1:0", "hs-3:phi2:1"]

    def test_branching_violation_offers_every_option(self):
        s = S.start_session(load("ex42"))
        got = [(c.algorithm, c.warnings) for c in S.offers(s)]
        assert got == [
            ("phi3-branch-disjunction", ()),
            ("phi3-branch-single(l1)", ("branch l2 can never be taken after this repair",)),
            ("phi3-branch-single(l2)", ("branch l1 can never be taken after this repair",)),
        ]

    def test_every_preview_is_well_formed(self):
        for name in ("s5_main", "ex41", "ex42", "ex44_game"):
            s = S.start_session(load(name))
            for c in S.offers(s):
                assert check_well_formed(c.preview) == []

    def test_every_preview_resolves_its_own_violation(self):
        for name in ("s5_main", "ex41", "ex42", "ex44_game"):
            s = S.start_session(load(name))
            for c in S.offers(s):
                left_open = {v.id for v in S.diagnose(c.preview, s.decider)}
                assert c.violation_id not in left_open


class TestApply:
    def test_main_example_walkthrough(self):
        s = S.start_session(load("s5_main"))
        s = S.apply(s, "0:hs-3:phi1:0")
        assert [v.id for v in s.violations] == ["hs-4", "ts-7", "ts-9"]
        s = S.apply(s, "1:hs-4:phi2:0")
        head = "\n".join(format_assertion(s.current).splitlines()[:5])
        assert head == G2_FIVE_LINES
        assert [v.id for v in s.violations] == ["ts-7", "ts-9"]
        s = S.apply(s, "2:ts-7:phi3-lift:0")
        assert "Alice -> Bob : (v1 | v >= v1 && v1 > 0) ." in format_assertion(s.current)
        assert [v.id for v in s.violations] == ["ts-9"]
        assert S.offers(s) == ()

    def test_applying_records_history_and_preview_becomes_current(self):
        s0 = S.start_session(load("ex41"))
        choice = S.offers(s0)[0]
        s1 = S.apply(s0, choice.id)
        assert s1.current == choice.preview
        assert s1.history == ((s0.current, choice),)
        assert s1.violations == ()

    def test_stale_epoch_is_refused(self):
        s0 = S.start_session(load("s5_main"))
        s1 = S.apply(s0, "0:hs-3:phi1:0")
        with pytest.raises(StaleChoice):
            S.apply(s1, "0:hs-3:phi2:1")

    def test_unknown_id_at_current_epoch_is_refused(self):
        s = S.start_session(load("s5_main"))
        with pytest.raises(StaleChoice):
            S.apply(s, "0:hs-3:phi1:9")

    def test_every_history_state_is_well_formed(self):
        s = S.start_session(load("s5_main"))
        for cid in ("0:hs-3:phi1:0", "1:hs-4:phi2:0", "2:ts-7:phi3-lift:0"):
            s = S.apply(s, cid)
        states = [before for before, _ in s.history] + [s.current]
        for g in states:
            assert check_well_formed(g) == []


class TestUndo:
    def test_apply_then_undo_is_identity(self):
        s0 = S.start_session(load("ex41"))
        s1 = S.apply(s0, S.offers(s0)[0].id)
        s2 = S.undo(s1)
        assert s2.current == s0.current
        assert s2.history == ()
        assert [v.id for v in s2.violations] == ["ts-2"]

    def test_three_applies_two_undos_lands_after_the_first(self):
        s = S.start_session(load("s5_main"))
        s1 = S.apply(s, "0:hs-3:phi1:0")
        s2 = S.apply(s1, "1:hs-4:phi2:0")
        s3 = S.apply(s2, "2:ts-7:phi3-lift:0")
        back = S.undo(S.undo(s3))
        assert back.current == s1.current
        assert len(back.history) == 1

    def test_undo_on_fresh_session_is_refused(self):
        with pytest.raises(EmptyHistory):
            S.undo(S.start_session(load("eq1")))

    def test_undo_invalidates_outstanding_offers(self):
        s0 = S.start_session(load("ex41"))
        s1 = S.apply(s0, S.offers(s0)[0].id)
        s2 = S.undo(s1)
        with pytest.raises(StaleChoice):
            S.apply(s2, S.offers(s0)[0].id)
        S.apply(s2, S.offers(s2)[0].id)


class TestInterference:
    def test_lift_into_a_strengthened_node_warns(self):
        s = S.start_session(parse(OVERLAP))
        assert [v.id for v in s.violations] == ["hs-2", "ts-3"]
        s = S.apply(s, "0:hs-2:phi1:0")
        s = S.apply(s, "1:ts-3:phi3-lift:0")
        assert s.violations == ()
        applied = s.history[-1][1]
        assert applied.warnings == (
            "lift overlaps the earlier substitution at node 2 (variable y); "
            "re-check that repair after applying",
        )
        events = [json.loads(line)["event"] for line in s.audit]
        assert events.count("interference-warning") == 1

    def test_disjoint_repairs_do_not_warn(self):
        s = S.start_session(load("s5_main"))
        s = S.apply(s, "0:hs-3:phi1:0")
        s = S.apply(s, "1:ts-7:phi3-lift:0")
        applied = s.history[-1][1]
        assert applied.warnings == ()


class TestAudit:
    def test_each_line_is_json_with_event_and_timestamp(self):
        s = S.start_session(load("s5_main"))
        s = S.apply(s, "0:hs-3:phi1:0")
        s = S.undo(s)
        for line in s.audit:
            entry = json.loads(line)
            assert isinstance(entry["timestamp"], float)
            assert entry["event"] in {"created", "applied", "undone"}

    def test_applied_entries_carry_node_algorithm_and_texts(self):
        s = S.start_session(load("s5_main"))
        s = S.apply(s, "0:hs-3:phi1:0")
        entry = json.loads(s.audit[-1])
        assert entry["event"] == "applied"
        assert entry["node"] == 3
        assert entry["algorithm"] == "phi1"
        assert entry["before"] == "v3 > v1"
        assert entry["after"] == "v3 > v2"

    def test_multi_node_repairs_log_one_line_per_change(self):
        s = S.start_session(load("s5_main"))
        s = S.apply(s, "0:hs-3:phi2:1")
        applied = [json.loads(line) for line in s.audit if json.loads(line)["event"] == "applied"]
        assert [e["node"] for e in applied] == [2, 3]

    def test_audit_log_renders_as_json_lines(self):
        s = S.start_session(load("eq1"))
        text = S.audit_log(s)
        assert text.endswith("\n")
        assert json.loads(text.splitlines()[0])["event"] == "created"


class TestSnapshot:
    def test_round_trip_reproduces_state_and_audit(self):
        s = S.start_session(load("s5_main"))
        for cid in ("0:hs-3:phi1:0", "1:hs-4:phi2:0", "2:ts-7:phi3-lift:0"):
            s = S.apply(s, cid)
        restored = S.restore(S.snapshot(s))
        assert restored.current == s.current
        assert len(restored.history) == len(s.history)
        assert restored.audit == s.audit
        assert [v.id for v in restored.violations] == [v.id for v in s.violations]

    def test_replay_from_initial_reproduces_current(self):
        s = S.start_session(parse(OVERLAP))
        s = S.apply(s, "0:hs-2:phi1:0")
        s = S.apply(s, "1:ts-3:phi3-lift:0")
        replayed = S.start_session(s.initial)
        for _, choice in s.history:
            suffix = choice.id.partition(":")[2]
            replayed = S.apply(replayed, f"{replayed.epoch}:{suffix}")
        assert format_assertion(replayed.current) == format_assertion(s.current)
        assert replayed.current == s.current

    def test_snapshot_survives_undo_renumbering(self):
        s = S.start_session(load("s5_main"))
        s = S.apply(s, "0:hs-3:phi1:0")
        s = S.apply(s, "1:hs-4:phi2:0")
        s = S.undo(s)
        s = S.apply(s, f"{s.epoch}:hs-4:phi2:0")
        restored = S.restore(S.snapshot(s))
        assert restored.current == s.current
