// Wire types mirroring the litrag HTTP API. The UI is a pure client of this
// contract: it never computes retrieval or metrics locally.

export interface ConfigOverrides {
  retrieval?: string;
  prompt?: string;
  chunk_k?: number;
  abstract_k?: number;
  chunk_strategy?: string;
}

export interface AskRequest {
  question: string;
  overrides?: ConfigOverrides;
}

export interface ReferenceMeta {
  article_id: string;
  title: string;
  authors: string[];
  abstract: string;
  published: string;
  pdf_url: string | null;
  abstract_missing: boolean;
}

export interface ChunkHit {
  chunk_id: string;
  article_id: string;
  text: string;
  score: number;
  word_count: number;
}

export interface AskResponse {
  answer: string;
  references: ReferenceMeta[];
  chunks: ChunkHit[];
  word_count: number;
  config: Required<ConfigOverrides>;
}

export interface ScoreRequest {
  question: string;
  answer: string;
  chunks: string[];
}

export interface ScoreResponse {
  context_relevance: number | null;
  faithfulness: number | null;
  answer_relevance: number | null;
  context_word_count: number;
}

export interface CorpusStats {
  articles: number;
  clean_documents: number;
  chunks: Record<string, number>;
  indexes: Record<string, number>;
}

export interface ConfigsResponse {
  default: Required<ConfigOverrides>;
  labeled: Record<string, ConfigOverrides>;
  retrieval_modes: string[];
  prompt_variants: string[];
  chunk_strategies: string[];
}

export interface ApiErrorShape {
  message: string;
  code: string;
  status: number;
}

// One chat turn. The config snapshot is frozen when the request is issued
// and never mutated afterwards.
export interface SessionTurn {
  question: string;
  config: Readonly<ConfigOverrides>;
  response: AskResponse | null;
  error: ApiErrorShape | null;
  scores: ScoreResponse | null;
  scoresError: ApiErrorShape | null;
  scoring: boolean;
}
