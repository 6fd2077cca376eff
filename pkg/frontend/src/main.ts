/**
 * DOM wiring. All rendering goes through the pure functions in views.ts;
 * all server talk goes through the Controller. This file only connects
 * events to the two.
 */

import { Client } from "./api.js";
import { Controller } from "./state.js";
import type { AppState } from "./state.js";
import { download, exportAssertion, exportAudit } from "./export.js";
import {
  renderBadges,
  renderCards,
  renderConnectionLost,
  renderDisclosureConfirm,
  renderNotice,
  renderSource,
  renderWellAsserted,
  toViolationViews,
} from "./views.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

const apiBase = el<HTMLInputElement>("api-base");
const input = el<HTMLTextAreaElement>("input");
const fileInput = el<HTMLInputElement>("file");
const loadButton = el<HTMLButtonElement>("load");
const banner = el<HTMLDivElement>("banner");
const notice = el<HTMLDivElement>("notice");
const workspace = el<HTMLElement>("workspace");
const badges = el<HTMLDivElement>("badges");
const sourcePane = el<HTMLPreElement>("source");
const cards = el<HTMLDivElement>("cards");
const confirmBox = el<HTMLDivElement>("confirm");
const undoButton = el<HTMLButtonElement>("undo");
const exportGa = el<HTMLButtonElement>("export-ga");
const exportAuditButton = el<HTMLButtonElement>("export-audit");

let controller = new Controller(new Client(apiBase.value.replace(/\/$/, "")), render);

function render(state: AppState): void {
  const view = state.view;

  if (state.phase === "lost") {
    banner.innerHTML = renderConnectionLost(state.lostDetail ?? "unreachable");
  } else if (state.phase === "ready" && view && view.violations.length === 0) {
    banner.innerHTML = renderWellAsserted();
  } else {
    banner.innerHTML = "";
  }

  notice.innerHTML = state.notice ? renderNotice(state.notice) : "";
  workspace.hidden = view === null;
  loadButton.disabled = controller.inFlight;

  if (view) {
    const views = toViolationViews(view);
    badges.innerHTML = renderBadges(views);
    sourcePane.innerHTML = renderSource(view.source, view.violations);
    cards.innerHTML = renderCards(views, controller.inFlight);
  }

  confirmBox.innerHTML = state.confirm ? renderDisclosureConfirm(state.confirm) : "";

  const busyOrEmpty = controller.inFlight || view === null;
  undoButton.disabled = busyOrEmpty;
  exportGa.disabled = view === null;
  exportAuditButton.disabled = view === null;
}

loadButton.addEventListener("click", () => {
  // a fresh load replaces the single active session for this tab
  controller = new Controller(new Client(apiBase.value.replace(/\/$/, "")), render);
  void controller.load(input.value);
});

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  void file.text().then((text) => {
    input.value = text;
  });
});

undoButton.addEventListener("click", () => void controller.undo());

exportGa.addEventListener("click", () => {
  if (controller.state.view) download(exportAssertion(controller.state.view));
});

exportAuditButton.addEventListener("click", () => {
  if (controller.state.view) download(exportAudit(controller.state.view));
});

document.addEventListener("click", (event) => {
  const target = event.target as HTMLElement | null;
  if (!target) return;
  const action = target.dataset["action"];
  if (action === "apply" && target.dataset["option"]) {
    void controller.requestApply(target.dataset["option"]);
  } else if (action === "confirm-apply") {
    void controller.confirmApply();
  } else if (action === "cancel-apply") {
    controller.cancelConfirm();
  } else if (action === "retry") {
    void controller.retry();
  } else if (target.classList.contains("badge") && target.dataset["viol"]) {
    const card = document.getElementById(`card-${target.dataset["viol"]}`);
    card?.scrollIntoView({ behavior: "smooth", block: "nearest" });
  }
});

render(controller.state);
