/**
 * Typed client for the repair-session HTTP API.
 *
 * Every string the UI displays comes out of these payloads; the UI never
 * derives predicates or repair text on its own.
 */

export interface SpanView {
  start: number;
  end: number;
  line: number;
  column: number;
}

export interface ChangeView {
  node: number;
  before: string;
  after: string;
  note: string;
}

export interface OptionView {
  id: string;
  violationId: string;
  algorithm: string;
  preview: string;
  warnings: string[];
  changes: ChangeView[];
  variable?: string;
  replacement?: string;
  disclosedTo?: string[];
}

export interface ConstraintView {
  variable: string;
  owner: string | null;
}

export interface InsertionView {
  node: number;
  predicate: string;
  satisfiable: boolean;
}

export interface AttemptView {
  lifted: string;
  effective: boolean | null;
  refusal: string | null;
  insertions: InsertionView[];
}

export interface ConflictView {
  targetVars: string[];
  responsible: string | null;
  conflictSets: string[];
  constrainedBy: ConstraintView[];
  outsideVars: string[];
  attempts: AttemptView[];
}

export interface ViolationPayload {
  id: string;
  kind: "HS" | "TS";
  node: number;
  span: SpanView | null;
  options: OptionView[];
  responsible?: string;
  unknownVars?: string[];
  tsKind?: string;
  context?: string;
  obligation?: string;
  conflict?: ConflictView;
}

export interface SessionView {
  sessionId: string;
  historyLength: number;
  source: string;
  violations: ViolationPayload[];
  audit: string[];
}

/** Server answered with a non-2xx status. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.name = "ApiError";
  }
}

/** The request never reached the server (network down, server gone). */
export class ConnectionLost extends Error {
  constructor(cause: string) {
    super(`connection lost: ${cause}`);
    this.name = "ConnectionLost";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly base: string,
    fetchImpl?: FetchLike,
  ) {
    // bind lazily so a fetch defined after construction (tests) still works
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new ConnectionLost(String(err));
    }
    if (!res.ok) {
      let detail: unknown;
      try {
        detail = ((await res.json()) as { detail?: unknown }).detail;
      } catch {
        detail = res.statusText;
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  createSession(source: string): Promise<SessionView> {
    return this.post("/sessions", { source });
  }

  getSession(id: string): Promise<SessionView> {
    return this.request(`/sessions/${id}`);
  }

  getOptions(id: string, violationId: string): Promise<OptionView[]> {
    return this.request(`/sessions/${id}/violations/${violationId}/options`);
  }

  apply(id: string, optionId: string): Promise<SessionView> {
    return this.post(`/sessions/${id}/apply`, { optionId });
  }

  undo(id: string): Promise<SessionView> {
    return this.post(`/sessions/${id}/undo`, {});
  }
}
