/** Typed client for the convsearch session service. */

export interface UtteranceDoc {
  speaker: "self" | "partner";
  tokens: number[];
  text: string;
  truncated: boolean;
}

export interface ScoredSequenceDoc {
  root_index: number;
  utterances: UtteranceDoc[];
  score: number;
}

export interface HypothesisSetDoc {
  depth: number;
  entries: ScoredSequenceDoc[];
}

export interface TraceDoc {
  params: {
    width: number;
    steps: number;
    max_tokens: number;
    iterations: number;
    similarity_threshold: number;
  };
  algorithm: string;
  partner_kind: string | null;
  h0: HypothesisSetDoc;
  expansions: { depth: number; candidates: ScoredSequenceDoc[] }[];
  hypothesis_sets: HypothesisSetDoc[];
  selected_root_index: number;
  selected_rank_in_h0: number;
  model_call_count: number;
  lookahead_call_count: number;
}

export interface SessionDoc {
  id: string;
  config: Record<string, unknown>;
  created_at: string;
  updated_at: string;
  next_speaker: "self" | "partner";
  conversation: {
    self_context: string[];
    partner_context: string[];
    utterances: UtteranceDoc[];
  };
  traces: TraceDoc[];
}

export interface ModelInfo {
  id: string;
  kind: string;
  vocab: string[];
  eos: string;
  context_keys?: string[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: unknown };
      if (typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async listModels(): Promise<ModelInfo[]> {
    return unwrap(await fetch(this.url("/models")));
  }

  async createSession(config: Record<string, unknown>): Promise<SessionDoc> {
    return unwrap(
      await fetch(this.url("/sessions"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(config),
      }),
    );
  }

  async getSession(id: string): Promise<SessionDoc> {
    return unwrap(await fetch(this.url(`/sessions/${id}`)));
  }

  async postUtterance(
    id: string,
    text: string,
    turn?: number,
  ): Promise<{ reply: UtteranceDoc; trace_index: number }> {
    return unwrap(
      await fetch(this.url(`/sessions/${id}/utterances`), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(turn === undefined ? { text } : { text, turn }),
      }),
    );
  }

  async getTrace(id: string, turn: number): Promise<TraceDoc> {
    return unwrap(await fetch(this.url(`/sessions/${id}/traces/${turn}`)));
  }
}
