/** Session controller: the server is the only authority, so every mutation
 * is a POST followed by a full refetch; nothing is predicted locally. */

import { ApiError, ReviewApi } from "./api.js";
import {
  AnnotationRow,
  CandidateRow,
  ViewState,
  emptyState,
  sortRows,
} from "./model.js";

export class ReviewController {
  state: ViewState;

  constructor(
    private readonly api: ReviewApi,
    sessionId: string,
  ) {
    this.state = emptyState(sessionId);
  }

  /** Fetch summary, candidates, and per-concept annotations into view state. */
  async load(): Promise<void> {
    try {
      const summary = await this.api.summary(this.state.sessionId);
      const candidates = await this.api.candidates(this.state.sessionId);

      const snippetsByConcept = new Map<string, AnnotationRow[]>();
      for (const concept of new Set(candidates.map((c) => c.source))) {
        try {
          snippetsByConcept.set(
            concept,
            await this.api.annotations(this.state.sessionId, concept),
          );
        } catch (err) {
          // a synthesized pair's concept may have no annotated samples
          if (!(err instanceof ApiError && err.status === 404)) throw err;
          snippetsByConcept.set(concept, []);
        }
      }

      const rows: CandidateRow[] = sortRows(candidates).map((c) => ({
        ...c,
        snippets: snippetsByConcept.get(c.source) ?? [],
      }));
      this.state = {
        ...this.state,
        loaded: true,
        rows,
        progress: summary.progress,
        statusCounts: summary.statusCounts,
        approvedPairs: summary.approvedPairs,
        error: null,
      };
    } catch (err) {
      this.state = {
        ...emptyState(this.state.sessionId),
        error: err instanceof ApiError ? `${err.code}: ${err.message}` : String(err),
      };
    }
  }

  /** POST one decision; refetch on success, keep state and show the error otherwise. */
  async decide(pairId: string, action: string, target?: string): Promise<void> {
    try {
      await this.api.decide(this.state.sessionId, pairId, action, target);
    } catch (err) {
      this.state = {
        ...this.state,
        error: err instanceof ApiError ? `${err.code}: ${err.message}` : String(err),
      };
      return;
    }
    await this.load();
  }

  async compile(epoch?: number): Promise<void> {
    try {
      const config = await this.api.compile(this.state.sessionId, epoch);
      this.state = { ...this.state, config, error: null };
    } catch (err) {
      this.state = {
        ...this.state,
        error: err instanceof ApiError ? `${err.code}: ${err.message}` : String(err),
      };
    }
  }
}
