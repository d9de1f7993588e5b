// Wire types for the /v1 service endpoints.

export interface EvidenceSpan {
  start: number;
  end: number;
  text: string;
  sources: string[];
  scores: Record<string, number>;
  overlaps: boolean;
}

export interface Snippet {
  rank: number;
  para_id: string;
  doc_id: string;
  title: string;
  source_uri: string | null;
  text: string;
  rerank_score: number;
  match_score: number;
  confidence: number;
  highlights: [number, number][];
  evidence_sentences: number[];
  spans: EvidenceSpan[];
}

export interface ExtractiveSentence {
  para_id: string;
  sentence_index: number;
  similarity: number;
  text: string;
}

export interface AbstractiveSegment {
  para_id: string;
  text: string;
}

export interface AbstractiveSummary {
  text: string;
  segments: AbstractiveSegment[];
  consumed: number;
  notes: string[];
}

export interface SummaryBundle {
  query: string;
  extractive: ExtractiveSentence[];
  extractive_short: boolean;
  abstractive: AbstractiveSummary | null;
  k: number;
  word_budget: number | null;
}

export interface QueryResult {
  query: string;
  notes: string[];
  snippets?: Snippet[];
  summary: SummaryBundle | null;
}

export interface QueryResponse {
  results: QueryResult[];
  config: Record<string, unknown>;
  timings?: Record<string, unknown>;
}

export interface QueryRequestBody {
  queries: string[];
  top_n?: number;
  top_k?: number;
  variant?: string;
  include?: string[];
  budget?: number | null;
}

export interface HealthStatus {
  status: string;
  n_paragraphs?: number;
  backends?: Record<string, string>;
}

export interface CorpusManifest {
  corpus_id: string;
  n_documents: number;
  n_paragraphs: number;
}
