/** Typed client for the annotation service JSON API. */

export interface QueryPainting {
  painting_id: string;
  sentiment: "positive" | "negative";
  dominant_emotion: string | null;
  image_url: string;
}

export interface Candidate {
  painting_id: string;
  provenance: "nearest" | "high-score";
  image_url: string;
}

export interface TaskPayload {
  task_id: string;
  query: QueryPainting;
  candidates: Candidate[];
  includes_no_image: boolean;
  no_image_value: string;
  allowed_emotions: string[];
  required_submissions: number;
  completed_submissions: number;
  lease_expiry?: number;
}

export interface SubmissionRequest {
  task_id: string;
  worker_id: string;
  selection: string;
  emotion?: string;
  utterance?: string;
}

export interface SubmissionResponse {
  submission_id: string;
  review_status: string;
  task_status: string;
  completed_submissions: number;
}

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

/** Error carrying the HTTP status and the server's message. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function readError(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") return body.error;
    return JSON.stringify(body);
  } catch {
    return response.statusText || `HTTP ${response.status}`;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(url: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.baseUrl + url, init);
    if (!response.ok) {
      throw new ApiError(response.status, await readError(response));
    }
    return response;
  }

  async registerWorker(workerId?: string): Promise<string> {
    const response = await this.request("/workers", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(workerId ? { worker_id: workerId } : {}),
    });
    const body = await response.json();
    return body.worker_id as string;
  }

  /** Next open task for the worker, or null when none remain. */
  async nextTask(workerId: string): Promise<TaskPayload | null> {
    const response = await this.request(
      `/tasks/next?worker=${encodeURIComponent(workerId)}`,
    );
    const body = await response.json();
    return (body.task ?? null) as TaskPayload | null;
  }

  async submit(submission: SubmissionRequest): Promise<SubmissionResponse> {
    const response = await this.request("/submissions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(submission),
    });
    return (await response.json()) as SubmissionResponse;
  }
}
