/**
 * Session state machine. One active session at a time; every mutation is
 * followed by a state refetch, and nothing renders that did not come back
 * from the server.
 */

import { ApiError, Client, ConnectionLost } from "./api.js";
import type { OptionView, SessionView } from "./api.js";

export type Phase = "idle" | "busy" | "ready" | "lost";

export interface AppState {
  phase: Phase;
  view: SessionView | null;
  /* option awaiting the disclosure confirmation step, if any */
  confirm: OptionView | null;
  notice: string | null;
  lostDetail: string | null;
}

const INITIAL: AppState = {
  phase: "idle",
  view: null,
  confirm: null,
  notice: null,
  lostDetail: null,
};

export class Controller {
  state: AppState = { ...INITIAL };

  constructor(
    private readonly client: Client,
    private readonly onChange: (state: AppState) => void = () => {},
  ) {}

  get inFlight(): boolean {
    return this.state.phase === "busy";
  }

  private emit(): void {
    this.onChange(this.state);
  }

  private set(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    this.emit();
  }

  private findOption(optionId: string): OptionView | null {
    for (const v of this.state.view?.violations ?? []) {
      for (const o of v.options) {
        if (o.id === optionId) return o;
      }
    }
    return null;
  }

  async load(source: string): Promise<void> {
    if (this.inFlight) return;
    this.set({ phase: "busy", notice: null, confirm: null });
    try {
      const created = await this.client.createSession(source);
      const view = await this.client.getSession(created.sessionId);
      this.set({ phase: "ready", view, lostDetail: null });
    } catch (err) {
      this.fail(err);
    }
  }

  async refresh(): Promise<void> {
    const view = this.state.view;
    if (!view || this.inFlight) return;
    this.set({ phase: "busy" });
    try {
      const fresh = await this.client.getSession(view.sessionId);
      this.set({ phase: "ready", view: fresh, lostDetail: null });
    } catch (err) {
      this.fail(err);
    }
  }

  /**
   * Apply entry point. Options that disclose a value to new participants
   * stop at a confirmation step instead of firing immediately.
   */
  requestApply(optionId: string): Promise<void> {
    if (this.inFlight) return Promise.resolve();
    const option = this.findOption(optionId);
    if (!option) {
      this.set({ notice: `option ${optionId} is no longer on offer` });
      return Promise.resolve();
    }
    if ((option.disclosedTo ?? []).length > 0) {
      this.set({ confirm: option });
      return Promise.resolve();
    }
    return this.fire(option);
  }

  async confirmApply(): Promise<void> {
    const option = this.state.confirm;
    if (!option) return;
    this.set({ confirm: null });
    await this.fire(option);
  }

  cancelConfirm(): void {
    this.set({ confirm: null });
  }

  private async fire(option: OptionView): Promise<void> {
    const view = this.state.view;
    if (!view || this.inFlight) return;
    this.set({ phase: "busy", notice: null });
    try {
      await this.client.apply(view.sessionId, option.id);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.set({ notice: "that offer went stale; the list below is current again" });
      } else {
        this.fail(err);
        return;
      }
    }
    await this.refetch(view.sessionId);
  }

  async undo(): Promise<void> {
    const view = this.state.view;
    if (!view || this.inFlight) return;
    this.set({ phase: "busy", notice: null, confirm: null });
    try {
      await this.client.undo(view.sessionId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.set({ notice: "nothing to undo" });
      } else {
        this.fail(err);
        return;
      }
    }
    await this.refetch(view.sessionId);
  }

  async retry(): Promise<void> {
    if (!this.state.view) {
      this.set({ phase: "idle", lostDetail: null });
      return;
    }
    this.set({ phase: "ready", lostDetail: null });
    await this.refresh();
  }

  private async refetch(sessionId: string): Promise<void> {
    try {
      const fresh = await this.client.getSession(sessionId);
      this.set({ phase: "ready", view: fresh, lostDetail: null });
    } catch (err) {
      this.fail(err);
    }
  }

  private fail(err: unknown): void {
    if (err instanceof ConnectionLost) {
      this.set({ phase: "lost", lostDetail: err.message });
      return;
    }
    if (err instanceof ApiError) {
      this.set({
        phase: this.state.view ? "ready" : "idle",
        notice: `server rejected the request (${err.status}): ${err.message}`,
      });
      return;
    }
    this.set({ phase: "lost", lostDetail: String(err) });
  }
}
