/**
 * Export builders. The assertion text is exactly what the server's GET
 * returned; the audit log is the server's entries re-serialized as one
 * JSON array for readability.
 */

import type { SessionView } from "./api.js";

export interface ExportFile {
  name: string;
  text: string;
  mime: string;
}

export function exportAssertion(view: SessionView): ExportFile {
  return {
    name: `amended-${view.sessionId}.ga`,
    text: view.source,
    mime: "text/plain",
  };
}

export function exportAudit(view: SessionView): ExportFile {
  const entries = view.audit.map((line) => JSON.parse(line) as unknown);
  return {
    name: `audit-${view.sessionId}.json`,
    text: JSON.stringify(entries, null, 2) + "\n",
    mime: "application/json",
  };
}

export function download(file: ExportFile): void {
  const blob = new Blob([file.text], { type: file.mime });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = file.name;
  document.body.appendChild(anchor);
  anchor.click();
  anchor.remove();
  URL.revokeObjectURL(url);
}
