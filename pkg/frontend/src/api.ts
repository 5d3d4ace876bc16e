// Typed client for the ctxforge HTTP API. Network failures are retried
// once; API error bodies ({error_code, message}) become ApiError.

export interface Problem {
  id: string;
  title: string | null;
  body: string;
  formula: string | null;
  sub_questions: string[];
  variable_note: string | null;
}

export interface Interest {
  label: string;
  keywords: string[];
}

export type Outcome = "pass" | "fail" | "warn" | "skipped";

export interface CheckResult {
  check_id: string;
  outcome: Outcome;
  details: string;
  evidence: Record<string, unknown>;
}

export interface Report {
  checks: CheckResult[];
  overall: "pass" | "warn" | "fail";
}

export interface Variant {
  id: string;
  problem_id: string;
  interest_label: string;
  state: string;
  overall: string | null;
  text: string;
  attempt: number;
  report: Report | null;
}

export interface Job {
  job_id: string;
  phase: "queued" | "running" | "done" | "aborted";
  table: { summary?: { total: number; failed: number } } | null;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public errorCode: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const url = this.base + path;
    let response: Response;
    try {
      response = await this.fetchFn(url, init);
    } catch {
      // One retry on transport failure, then surface.
      response = await this.fetchFn(url, init);
    }
    if (!response.ok) {
      let code = "internal";
      let message = `HTTP ${response.status}`;
      try {
        const body = await response.json();
        code = body.error_code ?? code;
        message = body.message ?? message;
      } catch {
        // keep the defaults
      }
      throw new ApiError(response.status, code, message);
    }
    return response;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.request(path, init);
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown, method = "POST"): Promise<T> {
    return this.json<T>(path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listProblems(): Promise<Problem[]> {
    return this.json("/api/problems");
  }

  listInterests(): Promise<Interest[]> {
    return this.json("/api/interests");
  }

  addInterest(label: string, keywords: string[] = []): Promise<{ label: string }> {
    return this.post("/api/interests", { label, keywords });
  }

  contextualize(problemIds: string[], interests: string[]): Promise<{ job_id: string }> {
    return this.post("/api/contextualize", { problem_ids: problemIds, interests });
  }

  jobStatus(jobId: string): Promise<Job> {
    return this.json(`/api/jobs/${jobId}`);
  }

  listVariants(filter: { problem_id?: string; interest?: string; state?: string } = {}): Promise<Variant[]> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(filter)) {
      if (value) params.set(key, value);
    }
    const query = params.toString();
    return this.json(`/api/variants${query ? "?" + query : ""}`);
  }

  editVariant(id: string, text: string): Promise<Variant> {
    return this.post(`/api/variants/${id}`, { text }, "PATCH");
  }

  decideVariant(id: string, decision: "accept" | "reject"): Promise<Variant> {
    return this.post(`/api/variants/${id}/decision`, { decision });
  }

  async exportCsv(): Promise<string> {
    const response = await this.request("/api/export?format=csv");
    return response.text();
  }
}
