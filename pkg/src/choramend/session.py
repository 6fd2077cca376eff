"""Interactive amendment sessions.

The loop a design reviewer drives: diagnose an assertion, look at the
candidate repairs, apply one, repeat, undo when a pick turns out wrong.
Every applied choice lands in an audit log, one JSON object per change.

Sessions are immutable; apply and undo return new sessions. A caller that
needs serialized mutation (the HTTP layer) keeps one lock per session id.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import Iterable

from .assertions import GlobalAssertion, SourceSpan, assertion_names
from .errors import EmptyHistory, StaleChoice
from .hs import (
    Change,
    FreshNames,
    hs_violations,
    propagate_candidate,
    responsible,
    strengthen_candidates,
)
from .logic import Decider, Formula, conjuncts, default_decider, free_vars
from .parser import format_assertion, format_formula, parse
from .tree import (
    AssertionTree,
    GuardLabel,
    InteractionLabel,
    SelectorLabel,
    assertion_of,
    tree_of,
)
from . import ts


@dataclass(frozen=True)
class Violation:
    """One diagnosed problem, tagged with a stable id for the session."""

    id: str
    kind: str  # "HS" | "TS"
    node: int
    span: SourceSpan | None
    responsible: str | None
    unknown_vars: tuple[str, ...] = ()
    ts_kind: str | None = None
    context: Formula | None = None
    obligation: Formula | None = None


@dataclass(frozen=True)
class RepairChoice:
    """A fully materialized repair the reviewer can apply as-is."""

    id: str
    violation_id: str
    algorithm: str
    preview: GlobalAssertion
    changes: tuple[Change, ...]
    warnings: tuple[str, ...] = ()
    target_node: int = -1
    variable: str | None = None
    replacement: str | None = None
    disclosed_to: tuple[str, ...] = ()


@dataclass(frozen=True)
class AmendSession:
    initial: GlobalAssertion
    current: GlobalAssertion
    history: tuple[tuple[GlobalAssertion, RepairChoice], ...]
    violations: tuple[Violation, ...]
    audit: tuple[str, ...]  # JSON lines, append-only
    epoch: int = 0
    decider: Decider = field(default_factory=default_decider, compare=False, repr=False)


def _selector_sender(t: AssertionTree, node_id: int) -> str | None:
    label = t.label(node_id)
    if isinstance(label, SelectorLabel):
        return label.sender
    return responsible(t, node_id)


def diagnose(g: GlobalAssertion, decider: Decider | None = None) -> list[Violation]:
    """All open problems: knowledge violations first, then reachability ones."""
    decider = decider or default_decider()
    t = tree_of(g)
    found: list[Violation] = []
    for hv in hs_violations(g):
        found.append(
            Violation(
                id=f"hs-{hv.node_id}",
                kind="HS",
                node=hv.node_id,
                span=t.node(hv.node_id).span,
                responsible=hv.responsible,
                unknown_vars=tuple(sorted(hv.unknown_vars)),
            )
        )
    for tv in ts.ts_violations(g, decider):
        found.append(
            Violation(
                id=f"ts-{tv.node_id}",
                kind="TS",
                node=tv.node_id,
                span=t.node(tv.node_id).span,
                responsible=_selector_sender(t, tv.node_id),
                ts_kind=tv.kind,
                context=tv.context,
                obligation=tv.obligation,
            )
        )
    return found


def _label_text(label) -> str:
    if isinstance(label, InteractionLabel):
        return format_formula(label.predicate)
    if isinstance(label, GuardLabel):
        return format_formula(label.guard)
    return ""


def _lift_changes(t: AssertionTree, plan: ts.LiftPlan) -> tuple[Change, ...]:
    after = tree_of(plan.result)
    return tuple(
        Change(ins.node_id, t.label(ins.node_id), after.label(ins.node_id), "lifted a future constraint here")
        for ins in plan.insertions
    )


def _hs_choices(
    g: GlobalAssertion,
    violation: Violation,
    decider: Decider,
    fresh: FreshNames,
) -> list[RepairChoice]:
    choices: list[RepairChoice] = []
    for variable in violation.unknown_vars:
        for option in strengthen_candidates(g, violation.node, variable, decider):
            choices.append(
                RepairChoice(
                    id="",
                    violation_id=violation.id,
                    algorithm="phi1",
                    preview=option.result,
                    changes=option.changes,
                    target_node=violation.node,
                    variable=variable,
                    replacement=option.replacement,
                )
            )
    for variable in violation.unknown_vars:
        option = propagate_candidate(g, violation.node, variable, fresh)
        if option is None:
            continue
        warning = "forwarding reveals {0} to {1}".format(
            variable, ", ".join(option.disclosed_to) or "nobody new"
        )
        choices.append(
            RepairChoice(
                id="",
                violation_id=violation.id,
                algorithm="phi2",
                preview=option.result,
                changes=option.changes,
                warnings=(warning,),
                target_node=violation.node,
                variable=variable,
                disclosed_to=option.disclosed_to,
            )
        )
    return choices


def _ts_choices(g: GlobalAssertion, violation: Violation, decider: Decider) -> list[RepairChoice]:
    t = tree_of(g)
    if isinstance(t.label(violation.node), SelectorLabel):
        choices = []
        for plan in ts.branch_repair_options(t, violation.node, decider):
            if not plan.effective:
                continue
            algorithm = (
                "phi3-branch-disjunction"
                if plan.branch_label is None
                else f"phi3-branch-single({plan.branch_label})"
            )
            choices.append(
                RepairChoice(
                    id="",
                    violation_id=violation.id,
                    algorithm=algorithm,
                    preview=plan.result,
                    changes=_lift_changes(t, plan),
                    warnings=plan.warnings,
                    target_node=violation.node,
                )
            )
        return choices
    fixed = ts.ts_res(t, violation.node, decider)
    if fixed is None:
        return []
    return [
        RepairChoice(
            id="",
            violation_id=violation.id,
            algorithm="phi3-lift",
            preview=assertion_of(fixed),
            changes=ts._diff_changes(t, fixed),
            target_node=violation.node,
        )
    ]


def candidate_repairs(
    g: GlobalAssertion,
    violation: Violation,
    decider: Decider | None = None,
    fresh: FreshNames | None = None,
) -> list[RepairChoice]:
    """Everything applicable to one violation, ready to preview.

    Strengthening options come before forwarding ones; a caller offering
    several violations at once should pass one shared allocator so fresh
    names stay distinct across the whole batch.
    """
    decider = decider or default_decider()
    fresh = fresh or FreshNames(set(assertion_names(g)))
    if violation.kind == "HS":
        found = _hs_choices(g, violation, decider, fresh)
    else:
        found = _ts_choices(g, violation, decider)
    return [
        replace(choice, id=f"{violation.id}:{choice.algorithm}:{k}")
        for k, choice in enumerate(found)
    ]


def offers(session: AmendSession) -> tuple[RepairChoice, ...]:
    """Current candidate repairs for every open violation, batch-allocated."""
    fresh = FreshNames(set(assertion_names(session.current)))
    out: list[RepairChoice] = []
    for violation in session.violations:
        for choice in candidate_repairs(session.current, violation, session.decider, fresh):
            out.append(replace(choice, id=f"{session.epoch}:{choice.id}"))
    return tuple(out)


def _entry(event: str, **extra) -> str:
    payload = {"event": event, "timestamp": round(time.time(), 3)}
    payload.update({k: v for k, v in extra.items() if v is not None})
    return json.dumps(payload, sort_keys=True)


def start_session(g: GlobalAssertion, decider: Decider | None = None) -> AmendSession:
    decider = decider or default_decider()
    violations = tuple(diagnose(g, decider))
    audit = (_entry("created", violations=[v.id for v in violations]),)
    return AmendSession(
        initial=g,
        current=g,
        history=(),
        violations=violations,
        audit=audit,
        epoch=0,
        decider=decider,
    )


def _phi1_marks(history: Iterable[tuple[GlobalAssertion, RepairChoice]]) -> list[tuple[int, str]]:
    return [
        (choice.target_node, choice.replacement)
        for _, choice in history
        if choice.algorithm == "phi1" and choice.replacement is not None
    ]


def _added_conjunct_vars(change: Change) -> frozenset[str]:
    if not isinstance(change.after, InteractionLabel) or not isinstance(change.before, InteractionLabel):
        return frozenset()
    before = conjuncts(change.before.predicate)
    added = conjuncts(change.after.predicate)[len(before):]
    names: set[str] = set()
    for part in added:
        names |= free_vars(part)
    return frozenset(names)


def _interference(session: AmendSession, choice: RepairChoice) -> list[str]:
    """Heuristic cross-repair check: a lift stepping on an earlier substitution."""
    if not choice.algorithm.startswith("phi3"):
        return []
    marks = _phi1_marks(session.history)
    if not marks:
        return []
    touched = {c.node_id for c in choice.changes}
    lifted_vars: set[str] = set()
    for c in choice.changes:
        lifted_vars |= _added_conjunct_vars(c)
    notes = []
    for node, variable in marks:
        if node in touched or variable in lifted_vars:
            notes.append(
                f"lift overlaps the earlier substitution at node {node} (variable {variable}); "
                "re-check that repair after applying"
            )
    return notes


def apply(session: AmendSession, choice_id: str) -> AmendSession:
    """Apply one currently offered repair; stale or unknown ids are refused."""
    prefix, _, _ = choice_id.partition(":")
    if prefix != str(session.epoch):
        raise StaleChoice(f"choice {choice_id} was offered for an earlier state")
    matches = [c for c in offers(session) if c.id == choice_id]
    if not matches:
        raise StaleChoice(f"choice {choice_id} is not currently offered")
    choice = matches[0]
    interference = _interference(session, choice)
    entries = [
        _entry(
            "applied",
            node=change.node_id,
            algorithm=choice.algorithm,
            violation=choice.violation_id,
            before=_label_text(change.before),
            after=_label_text(change.after),
        )
        for change in choice.changes
    ]
    for note in interference:
        entries.append(_entry("interference-warning", note=note, violation=choice.violation_id))
    applied = replace(choice, warnings=choice.warnings + tuple(interference))
    return replace(
        session,
        current=choice.preview,
        history=session.history + ((session.current, applied),),
        violations=tuple(diagnose(choice.preview, session.decider)),
        audit=session.audit + tuple(entries),
        epoch=session.epoch + 1,
    )


def undo(session: AmendSession) -> AmendSession:
    if not session.history:
        raise EmptyHistory("nothing to undo")
    previous, choice = session.history[-1]
    return replace(
        session,
        current=previous,
        history=session.history[:-1],
        violations=tuple(diagnose(previous, session.decider)),
        audit=session.audit + (_entry("undone", violation=choice.violation_id),),
        epoch=session.epoch + 1,
    )


def audit_log(session: AmendSession) -> str:
    """The whole audit trail as JSON lines."""
    return "\n".join(session.audit) + "\n" if session.audit else ""


def _span_payload(span: SourceSpan | None) -> dict | None:
    if span is None:
        return None
    return {"start": span.start, "end": span.end, "line": span.line, "column": span.column}


def choice_payload(choice: RepairChoice) -> dict:
    out = {
        "id": choice.id,
        "violationId": choice.violation_id,
        "algorithm": choice.algorithm,
        "preview": format_assertion(choice.preview),
        "warnings": list(choice.warnings),
        "changes": [
            {
                "node": c.node_id,
                "before": _label_text(c.before),
                "after": _label_text(c.after),
                "note": c.note,
            }
            for c in choice.changes
        ],
    }
    if choice.variable is not None:
        out["variable"] = choice.variable
    if choice.replacement is not None:
        out["replacement"] = choice.replacement
    if choice.disclosed_to:
        out["disclosedTo"] = list(choice.disclosed_to)
    return out


def _conflict_payload(report: ts.ConflictReport) -> dict:
    return {
        "targetVars": list(report.target_vars),
        "responsible": report.responsible,
        "conflictSets": [format_formula(f) for f in report.conflict_sets],
        "constrainedBy": [
            {"variable": name, "owner": owner} for name, owner in report.constrained_by
        ],
        "outsideVars": list(report.outside_vars),
        "attempts": [
            {
                "lifted": format_formula(plan.lifted),
                "effective": plan.effective,
                "refusal": plan.refusal,
                "insertions": [
                    {
                        "node": ins.node_id,
                        "predicate": format_formula(ins.predicate),
                        "satisfiable": ins.satisfiable,
                    }
                    for ins in plan.insertions
                ],
            }
            for plan in report.attempts
        ],
    }


def violation_payload(
    violation: Violation,
    choices: Iterable[RepairChoice] = (),
    conflict: ts.ConflictReport | None = None,
) -> dict:
    out = {
        "id": violation.id,
        "kind": violation.kind,
        "node": violation.node,
        "span": _span_payload(violation.span),
        "options": [choice_payload(c) for c in choices],
    }
    if violation.responsible is not None:
        out["responsible"] = violation.responsible
    if violation.kind == "HS":
        out["unknownVars"] = list(violation.unknown_vars)
    if violation.ts_kind is not None:
        out["tsKind"] = violation.ts_kind
    if violation.context is not None:
        out["context"] = format_formula(violation.context)
    if violation.obligation is not None:
        out["obligation"] = format_formula(violation.obligation)
    if conflict is not None and not conflict.empty:
        out["conflict"] = _conflict_payload(conflict)
    return out


def session_payload(session: AmendSession) -> list[dict]:
    """The violations array a front end consumes: options attached, and a
    conflict report wherever a reachability problem has no repair left."""
    offered = offers(session)
    t = tree_of(session.current)
    out = []
    for violation in session.violations:
        mine = [c for c in offered if c.violation_id == violation.id]
        conflict = None
        if not mine and violation.kind == "TS":
            conflict = ts.conflict_diagnostics(t, violation.node, session.decider)
        out.append(violation_payload(violation, mine, conflict))
    return out


def snapshot(session: AmendSession) -> str:
    """Serialize enough to rebuild the session elsewhere.

    Applied choices are stored by their epoch-free ids; replaying them from
    the initial assertion reproduces the current one exactly.
    """
    applied = [choice.id.partition(":")[2] for _, choice in session.history]
    return json.dumps(
        {
            "initial": format_assertion(session.initial),
            "applied": applied,
            "audit": list(session.audit),
        },
        sort_keys=True,
    )


def restore(text: str, decider: Decider | None = None) -> AmendSession:
    """Rebuild a session from a snapshot by replaying its applied choices."""
    data = json.loads(text)
    session = start_session(parse(data["initial"]), decider)
    for suffix in data["applied"]:
        session = apply(session, f"{session.epoch}:{suffix}")
    audit = data.get("audit")
    if audit is not None:
        session = replace(session, audit=tuple(audit))
    return session
