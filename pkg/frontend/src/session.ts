/** Session state machine for the submit -> revise -> resubmit loop.
 *
 * History is append-only within the browser session and exactly one entry is
 * appended per *completed* analysis: a rapid second submit supersedes the
 * first (its in-flight request is aborted and a late response is dropped).
 * Nothing is ever sent anywhere except the configured analyze function.
 */

import type { UiAnalysis } from "./types.js";

export interface HistoryEntry {
  draft: string;
  analysis: UiAnalysis;
}

export type AnalyzeFn = (text: string, signal?: AbortSignal) => Promise<UiAnalysis>;

export class FeedbackSession {
  readonly history: HistoryEntry[] = [];
  private inflight: AbortController | null = null;
  private latestRequest = 0;

  constructor(private readonly analyzeFn: AnalyzeFn) {}

  get current(): HistoryEntry | null {
    return this.history.length ? this.history[this.history.length - 1]! : null;
  }

  get previous(): HistoryEntry | null {
    return this.history.length > 1 ? this.history[this.history.length - 2]! : null;
  }

  get busy(): boolean {
    return this.inflight !== null;
  }

  /** Resolves with the analysis if it was applied, or null if a newer
   * submit superseded this one. Errors propagate; history is untouched. */
  async submit(draft: string): Promise<UiAnalysis | null> {
    if (!draft.trim()) throw new Error("draft is empty");
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const requestId = ++this.latestRequest;
    try {
      const analysis = await this.analyzeFn(draft, controller.signal);
      if (requestId !== this.latestRequest) return null; // superseded
      this.history.push({ draft, analysis });
      return analysis;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }
}
