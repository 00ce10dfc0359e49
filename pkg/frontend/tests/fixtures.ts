// Recorded responses from the litrag HTTP API (mock-provider workspace).
import type { AskResponse, ConfigsResponse, CorpusStats, ScoreResponse } from "../src/types.js";

export const ASK_RESPONSE: AskResponse = {
  answer: "The volatility analysis uses smoothing models for horizon studies in study 705.",
  references: [
    {
      article_id: "art007",
      title: "A study of forecasting (7)",
      authors: ["Author 7", "Author B"],
      abstract: "This article studies forecasting and seasonal trends.",
      published: "2024-01-08",
      pdf_url: null,
      abstract_missing: false,
    },
    {
      article_id: "art012",
      title: "A study of forecasting (12)",
      authors: ["Author 12", "Author B"],
      abstract: "This article studies forecasting horizons.",
      published: "2024-01-13",
      pdf_url: null,
      abstract_missing: false,
    },
  ],
  chunks: [
    { chunk_id: "art007:semantic:1", article_id: "art007",
      text: "The volatility analysis uses smoothing models for horizon studies in study 705.",
      score: 0.3212, word_count: 12 },
    { chunk_id: "art012:semantic:0", article_id: "art012",
      text: "The trend approach uses lag evaluation for seasonal results in study 1200.",
      score: 0.2981, word_count: 12 },
    { chunk_id: "art007:semantic:3", article_id: "art007",
      text: "The horizon method uses autoregressive datasets for volatility training in study 714.",
      score: 0.2744, word_count: 12 },
    { chunk_id: "art002:semantic:2", article_id: "art002",
      text: "The seasonal models use smoothing analysis for trend results in study 208.",
      score: 0.2201, word_count: 12 },
    { chunk_id: "art012:semantic:4", article_id: "art012",
      text: "The lag studies use horizon datasets for forecasting methods in study 1244.",
      score: 0.2034, word_count: 12 },
  ],
  word_count: 60,
  config: { retrieval: "abstract-first", prompt: "enhanced", chunk_k: 5,
            abstract_k: 8, chunk_strategy: "semantic" },
};

export const SCORE_RESPONSE: ScoreResponse = {
  context_relevance: 0.4,
  faithfulness: 0.5,
  answer_relevance: 0.86,
  context_word_count: 60,
};

export const CONFIGS_RESPONSE: ConfigsResponse = {
  default: { retrieval: "direct", prompt: "baseline", chunk_k: 5,
             abstract_k: 100, chunk_strategy: "semantic" },
  labeled: {
    baseline: { retrieval: "direct", prompt: "baseline" },
    enhanced: { retrieval: "abstract-first", prompt: "enhanced" },
  },
  retrieval_modes: ["direct", "abstract-first"],
  prompt_variants: ["baseline", "enhanced"],
  chunk_strategies: ["semantic", "recursive"],
};

export const CORPUS_STATS: CorpusStats = {
  articles: 20,
  clean_documents: 20,
  chunks: { semantic: 140 },
  indexes: { abstracts: 20, chunks: 140 },
};

export const ERROR_503 = { error: "embedding service down", code: "provider_unavailable" };
export const ERROR_400 = { error: "question field required", code: "bad_request" };

export function jsonResponse(status: number, body: unknown) {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => body,
  };
}
