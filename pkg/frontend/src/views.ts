/**
 * Pure HTML renderers. Every function takes server payloads (plus a little
 * UI state) and returns a string; nothing here talks to the network or the
 * DOM, which keeps the lot unit-testable without a browser.
 */

import type {
  ConflictView,
  OptionView,
  SessionView,
  ViolationPayload,
} from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const esc = escapeHtml;

/** One display row per server violation id. */
export interface ViolationView {
  violation: ViolationPayload;
  badge: "HS" | "TS";
  warningBadges: string[];
}

export function toViolationViews(view: SessionView): ViolationView[] {
  return view.violations.map((violation) => {
    const warningBadges: string[] = [];
    if (violation.options.some((o) => (o.disclosedTo ?? []).length > 0)) {
      warningBadges.push("discloses");
    }
    if (violation.options.some((o) => o.warnings.some((w) => w.includes("can never be taken")))) {
      warningBadges.push("dead branch");
    }
    if (violation.options.length === 0 && violation.conflict) {
      warningBadges.push("unrepairable");
    }
    return { violation, badge: violation.kind, warningBadges };
  });
}

export function renderBadges(views: ViolationView[]): string {
  return views
    .map(
      (v) =>
        `<button class="badge ${v.badge.toLowerCase()}" data-viol="${esc(v.violation.id)}">` +
        `${esc(v.violation.id)}</button>`,
    )
    .join(" ");
}

/**
 * Source pane with the text of each flagged node wrapped in a mark span.
 * Marks are split at line breaks and at each other's boundaries, so nested
 * or adjacent violations stack classes instead of producing broken HTML.
 */
export function renderSource(source: string, violations: ViolationPayload[]): string {
  const marks = violations
    .filter((v) => v.span !== null)
    .map((v) => ({ start: v.span!.start, end: v.span!.end, kind: v.kind.toLowerCase(), id: v.id }));

  const bounds = new Set<number>([0, source.length]);
  for (const m of marks) {
    bounds.add(m.start);
    bounds.add(m.end);
  }
  for (let i = 0; i < source.length; i++) {
    if (source[i] === "\n") {
      bounds.add(i);
      bounds.add(i + 1);
    }
  }
  const points = [...bounds].sort((a, b) => a - b);

  let html = "";
  for (let i = 0; i + 1 < points.length; i++) {
    const a = points[i]!;
    const b = points[i + 1]!;
    const text = source.slice(a, b);
    if (text === "") continue;
    if (text === "\n") {
      html += "\n";
      continue;
    }
    const covering = marks.filter((m) => m.start <= a && b <= m.end);
    if (covering.length === 0) {
      html += esc(text);
      continue;
    }
    const classes = [...new Set(covering.map((m) => m.kind))].join(" ");
    const ids = covering.map((m) => m.id).join(" ");
    html += `<span class="mark ${classes}" data-viol="${esc(ids)}">${esc(text)}</span>`;
  }

  const lines = html.split("\n");
  if (lines[lines.length - 1] === "") lines.pop();
  return lines
    .map((line, i) => `<span class="line"><span class="ln">${i + 1}</span>${line}</span>`)
    .join("\n");
}

export function algorithmLabel(algorithm: string): string {
  if (algorithm === "phi1") return "strengthen";
  if (algorithm === "phi2") return "forward";
  if (algorithm === "phi3-lift") return "lift";
  if (algorithm === "phi3-branch-disjunction") return "allow either branch";
  const single = algorithm.match(/^phi3-branch-single\((.+)\)$/);
  if (single) return `commit to branch ${single[1]}`;
  return algorithm;
}

function renderOption(option: OptionView, inFlight: boolean): string {
  const discloses = (option.disclosedTo ?? []).length > 0;
  const chips = discloses
    ? `<span class="chip warn">reveals ${esc(option.variable ?? "a value")} to ${esc(
        (option.disclosedTo ?? []).join(", "),
      )}</span>`
    : "";
  const diff = option.changes
    .map(
      (c) =>
        `<li class="diff-row"><span class="where">node ${c.node}</span> ` +
        `<del>${esc(c.before)}</del> <ins>${esc(c.after)}</ins> ` +
        `<span class="note">${esc(c.note)}</span></li>`,
    )
    .join("");
  const warnings = option.warnings
    .map((w) => `<p class="warning">${esc(w)}</p>`)
    .join("");
  return (
    `<div class="option" data-option="${esc(option.id)}">` +
    `<div class="option-head"><span class="algo">${esc(algorithmLabel(option.algorithm))}</span>${chips}</div>` +
    `<ul class="diff">${diff}</ul>` +
    warnings +
    `<button class="apply" data-action="apply" data-option="${esc(option.id)}"${inFlight ? " disabled" : ""}>Apply</button>` +
    `</div>`
  );
}

function renderConflict(conflict: ConflictView): string {
  const constrained = conflict.constrainedBy
    .map((c) => `<code>${esc(c.variable)}</code> (introduced by ${esc(c.owner ?? "nobody")})`)
    .join(", ");
  const attempts = conflict.attempts
    .map((attempt) => {
      const rows = attempt.insertions
        .map(
          (ins) =>
            `<li>needs <code>${esc(ins.predicate)}</code> at node ${ins.node}` +
            `${ins.satisfiable ? "" : ' <span class="chip bad">unsatisfiable</span>'}</li>`,
        )
        .join("");
      const refusal = attempt.refusal ? `<li>${esc(attempt.refusal)}</li>` : "";
      return `<li>lifting <code>${esc(attempt.lifted)}</code><ul>${rows}${refusal}</ul></li>`;
    })
    .join("");
  return (
    `<div class="conflict">` +
    `<p>constrained by ${constrained}</p>` +
    `<ul class="attempts">${attempts}</ul>` +
    `</div>`
  );
}

function violationHeadline(v: ViolationPayload): string {
  if (v.kind === "HS") {
    const vars = (v.unknownVars ?? []).join(", ");
    return `${esc(v.responsible ?? "someone")} never learns <code>${esc(vars)}</code>`;
  }
  const who = v.responsible ? `${esc(v.responsible)} ` : "";
  return `${who}cannot ensure <code>${esc(v.obligation ?? "")}</code>`;
}

export function renderViolationCard(view: ViolationView, inFlight: boolean): string {
  const v = view.violation;
  const where = v.span ? `line ${v.span.line}` : `node ${v.node}`;
  const badges = view.warningBadges
    .map((b) => `<span class="chip warn">${esc(b)}</span>`)
    .join(" ");
  const unrepairable = v.options.length === 0 && v.conflict;
  let body: string;
  if (v.options.length > 0) {
    body = `<div class="options">${v.options.map((o) => renderOption(o, inFlight)).join("")}</div>`;
  } else if (v.conflict) {
    body = renderConflict(v.conflict);
  } else {
    body = `<p class="muted">no automated repair available</p>`;
  }
  return (
    `<div class="card ${v.kind.toLowerCase()}${unrepairable ? " failed" : ""}" data-viol="${esc(v.id)}" id="card-${esc(v.id)}">` +
    `<h3><span class="badge ${v.kind.toLowerCase()}">${v.kind}</span> ` +
    `${esc(v.id)} <span class="where">${esc(where)}</span> ${badges}</h3>` +
    `<p class="headline">${violationHeadline(v)}</p>` +
    body +
    `</div>`
  );
}

export function renderCards(views: ViolationView[], inFlight: boolean): string {
  return views.map((v) => renderViolationCard(v, inFlight)).join("");
}

export function renderWellAsserted(): string {
  return `<div class="banner ok">well-asserted: no violations</div>`;
}

export function renderConnectionLost(detail: string): string {
  return (
    `<div class="banner bad">connection lost: ${esc(detail)} ` +
    `<button data-action="retry">Retry</button></div>`
  );
}

export function renderNotice(text: string): string {
  return `<div class="banner info">${esc(text)}</div>`;
}

/** Confirmation step shown before a repair that widens who sees a value. */
export function renderDisclosureConfirm(option: OptionView): string {
  const warnings = option.warnings.map((w) => `<p>${esc(w)}</p>`).join("");
  return (
    `<div class="confirm" data-option="${esc(option.id)}">` +
    `<h3>This repair discloses a value</h3>` +
    warnings +
    `<button data-action="confirm-apply">Apply anyway</button> ` +
    `<button data-action="cancel-apply">Cancel</button>` +
    `</div>`
  );
}
