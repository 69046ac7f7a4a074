export interface Candidate {
  source_name: string;
  explanation: string;
}

export interface Task {
  task_id: string;
  target_name: string;
  target_background: string;
  domain: string;
  candidates: Candidate[];
  completed: boolean;
}

export interface CandidateScores {
  coherence: number;
  mapping: number;
  explanatory: number;
}

export const DIMENSIONS = ['coherence', 'mapping', 'explanatory'] as const;
export type Dimension = (typeof DIMENSIONS)[number];

export interface Submission {
  annotator_id: string;
  task_id: string;
  scores: CandidateScores[];
  ranking: number[];
  confidence: number;
}

/** Partially filled task state, persisted so a reload loses nothing. */
export interface Draft {
  scores: Array<Partial<CandidateScores>>;
  /** display order of candidate indices, best first */
  order: number[];
  confidence: number | null;
}

export function emptyDraft(): Draft {
  return { scores: [{}, {}, {}], order: [0, 1, 2], confidence: null };
}
