import type {
  ControlData,
  ErrorDetail,
  ErrorKind,
  ExperimentsData,
  JobDetailData,
  JobsPageData,
  LoginData,
  PageEnvelope,
  QosData,
  QosPutBody,
  QosPutData,
  ResourcesData,
  RestartFailedData,
  StatusData,
} from "./types.js";

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

/** The portal answered with an error detail: broker refusal, bad input, dead session. */
export class ApiError extends Error {
  readonly kind: ErrorKind;
  readonly code: number;

  constructor(kind: ErrorKind, code: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.kind = kind;
    this.code = code;
  }
}

/** The request never produced a portal answer (network down, portal unreachable). */
export class TransportError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "TransportError";
  }
}

/**
 * Thin typed client for the portal. Holds the session token and attaches
 * it to every request after login. All methods resolve to the full
 * PageEnvelope so callers keep access to the `times` list.
 */
export class PortalClient {
  token: string | null = null;

  private readonly fetchFn: FetchFn;
  private readonly base: string;

  constructor(fetchFn: FetchFn, base = "") {
    this.fetchFn = fetchFn;
    this.base = base;
  }

  async login(tzOffsetMin: number, broker?: string): Promise<PageEnvelope<LoginData>> {
    const body: Record<string, unknown> = { tz_offset_min: tzOffsetMin };
    if (broker) body.broker = broker;
    const env = await this.request<LoginData>("POST", "/api/login", body);
    this.token = env.data.token;
    return env;
  }

  async logout(): Promise<void> {
    try {
      await this.request("POST", "/api/logout");
    } finally {
      this.token = null;
    }
  }

  experiments(): Promise<PageEnvelope<ExperimentsData>> {
    return this.request("GET", "/api/experiments");
  }

  status(expId: string): Promise<PageEnvelope<StatusData>> {
    return this.request("GET", `/api/experiments/${encodeURIComponent(expId)}/status`);
  }

  qos(expId: string): Promise<PageEnvelope<QosData>> {
    return this.request("GET", `/api/experiments/${encodeURIComponent(expId)}/qos`);
  }

  putQos(expId: string, body: QosPutBody): Promise<PageEnvelope<QosPutData>> {
    return this.request("PUT", `/api/experiments/${encodeURIComponent(expId)}/qos`, body);
  }

  control(expId: string, action: string): Promise<PageEnvelope<ControlData>> {
    return this.request("POST", `/api/experiments/${encodeURIComponent(expId)}/control`, {
      action,
    });
  }

  jobs(
    expId: string,
    offset: number,
    limit: number,
    state?: string,
  ): Promise<PageEnvelope<JobsPageData>> {
    const query = new URLSearchParams({ offset: String(offset), limit: String(limit) });
    if (state) query.set("state", state);
    return this.request(
      "GET",
      `/api/experiments/${encodeURIComponent(expId)}/jobs?${query.toString()}`,
    );
  }

  job(expId: string, jobId: string): Promise<PageEnvelope<JobDetailData>> {
    return this.request(
      "GET",
      `/api/experiments/${encodeURIComponent(expId)}/jobs/${encodeURIComponent(jobId)}`,
    );
  }

  restartJob(expId: string, jobId: string): Promise<PageEnvelope<ControlData>> {
    return this.request(
      "POST",
      `/api/experiments/${encodeURIComponent(expId)}/jobs/${encodeURIComponent(jobId)}/restart`,
    );
  }

  restartFailed(expId: string): Promise<PageEnvelope<RestartFailedData>> {
    return this.request(
      "POST",
      `/api/experiments/${encodeURIComponent(expId)}/restart-failed`,
    );
  }

  resources(): Promise<PageEnvelope<ResourcesData>> {
    return this.request("GET", "/api/resources");
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<PageEnvelope<T>> {
    const headers: Record<string, string> = { Accept: "application/json" };
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["X-Session-Token"] = this.token;

    let res: Response;
    try {
      res = await this.fetchFn(this.base + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new TransportError(err instanceof Error ? err.message : String(err));
    }

    if (!res.ok) {
      let detail: ErrorDetail | undefined;
      try {
        detail = (await res.json()).detail;
      } catch {
        // non-JSON error body, fall through to the generic mapping
      }
      if (detail && detail.kind) {
        throw new ApiError(detail.kind, detail.code, detail.message);
      }
      throw new ApiError("transport", res.status, `HTTP ${res.status}`);
    }

    return (await res.json()) as PageEnvelope<T>;
  }
}

/** One-line rendering of any error for the inline message strip. */
export function describeError(err: unknown): string {
  if (err instanceof ApiError) return `${err.kind} error ${err.code}: ${err.message}`;
  if (err instanceof TransportError) return `transport error: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
