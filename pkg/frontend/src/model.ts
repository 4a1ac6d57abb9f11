/** View model: plain data derived from API payloads, no DOM and no fetch. */

export type Status = "PENDING" | "APPROVED" | "REJECTED" | "SUPERSEDED";

/** Column labels for the candidate feature vector, in payload order. */
export const FEATURE_NAMES = [
  "exactName",
  "levSim",
  "tokenJaccard",
  "propertyJaccard",
  "parentSim",
  "childOverlap",
  "descOverlap",
] as const;

export interface Progress {
  decided: number;
  total: number;
}

export interface ApprovedPair {
  source: string;
  target: string;
}

export interface SessionSummary {
  sessionId: string;
  progress: Progress;
  statusCounts: Partial<Record<Status, number>>;
  approvedPairs: ApprovedPair[];
}

/** One candidate as served by GET /candidates. */
export interface Candidate {
  pairId: string;
  source: string;
  target: string;
  score: number;
  status: Status;
  recommended: boolean;
  decidedBy: string | null;
  features?: number[];
}

/** One annotated sample row as served by GET /annotations/{concept}. */
export interface AnnotationRow {
  sourcePath: string;
  sourceConcept: string;
  candidates: { targetConcept: string; score: number }[];
  snippet: unknown;
  sampleIndex: number;
}

export interface CandidateRow extends Candidate {
  snippets: AnnotationRow[];
}

export interface ViewState {
  sessionId: string;
  loaded: boolean;
  rows: CandidateRow[];
  progress: Progress;
  statusCounts: Partial<Record<Status, number>>;
  approvedPairs: ApprovedPair[];
  /** Inline error from the last failed action; cleared by the next success. */
  error: string | null;
  /** Compiled translation config, present after a successful compile. */
  config: unknown | null;
}

export function emptyState(sessionId: string): ViewState {
  return {
    sessionId,
    loaded: false,
    rows: [],
    progress: { decided: 0, total: 0 },
    statusCounts: {},
    approvedPairs: [],
    error: null,
    config: null,
  };
}

/** Same ordering the server emits: recommended first, score desc, pairId asc. */
export function sortRows<T extends Candidate>(rows: T[]): T[] {
  return [...rows].sort((a, b) => {
    if (a.recommended !== b.recommended) return a.recommended ? -1 : 1;
    if (a.score !== b.score) return b.score - a.score;
    return a.pairId < b.pairId ? -1 : a.pairId > b.pairId ? 1 : 0;
  });
}

export function compileEnabled(state: ViewState): boolean {
  return (state.statusCounts.APPROVED ?? 0) >= 1;
}

/** Actions the server will accept for a row in its current status. */
export function actionsFor(status: Status): string[] {
  switch (status) {
    case "PENDING":
      return ["approve", "reject", "remap"];
    case "APPROVED":
      return ["reject"];
    default:
      return [];
  }
}

export function featureBreakdown(row: Candidate): { name: string; value: number }[] {
  const feats = row.features ?? [];
  return feats.map((value, i) => ({ name: FEATURE_NAMES[i] ?? `f${i}`, value }));
}

export function distinctTargets(rows: Candidate[]): string[] {
  return [...new Set(rows.map((r) => r.target))].sort();
}
