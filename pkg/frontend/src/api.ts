/** Typed client for the docqa HTTP API; the UI's only server access path. */

export interface Link {
  topic_id: string;
  title: string;
  url: string;
}

export interface AskResponse {
  request_id: string;
  outcome: string;
  answer_html?: string | null;
  links: Link[];
  highlighted_terms: string[];
}

export type Verdict = "yes" | "no" | "unset";

export interface EvalRecord {
  record_id: string;
  question: string;
  language: string;
  qclass: string;
  answer_html: string;
  links: Link[];
  outcome: string;
  created_at: string;
  verdicts: Record<string, Verdict>;
  key_terms: { term: string; start?: number; end?: number }[];
  tags: string[];
  feedback: string | null;
}

export interface AnnotatePatch {
  verdicts?: Record<string, Verdict>;
  key_terms?: { term: string; start?: number; end?: number }[];
  tags?: string[];
  annotator?: string;
}

export type Rating = "helpful" | "somewhat-helpful" | "unhelpful";

export const RATINGS: Rating[] = ["helpful", "somewhat-helpful", "unhelpful"];

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}`);
  }
}

async function parseDetail(response: Response): Promise<unknown> {
  try {
    const body = await response.json();
    return body.detail ?? body;
  } catch {
    return null;
  }
}

export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw new ApiError(response.status, await parseDetail(response));
    }
    return (await response.json()) as T;
  }

  ask(text: string, locale?: string): Promise<AskResponse> {
    return this.request<AskResponse>("/ask", {
      method: "POST",
      body: JSON.stringify(locale ? { text, locale } : { text }),
    });
  }

  feedback(requestId: string, rating: Rating): Promise<{ ok: boolean; orphan: boolean }> {
    return this.request("/feedback", {
      method: "POST",
      body: JSON.stringify({ request_id: requestId, rating }),
    });
  }

  records(filter = ""): Promise<EvalRecord[]> {
    const query = filter ? `?filter=${encodeURIComponent(filter)}` : "";
    return this.request<EvalRecord[]>(`/eval/records${query}`);
  }

  annotate(recordId: string, patch: AnnotatePatch): Promise<EvalRecord> {
    return this.request<EvalRecord>(`/eval/records/${encodeURIComponent(recordId)}/annotate`, {
      method: "POST",
      body: JSON.stringify(patch),
    });
  }
}
