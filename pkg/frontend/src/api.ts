import type { LoginResponse, Metric, NotificationItem, Rules, SeriesResponse } from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin typed client over the service API. Every data request carries the
 * session token; a non-2xx response surfaces as ApiError so the caller can
 * route 401s back to the login view.
 */
export class ApiClient {
  private token: string | null = null;

  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  hasToken(): boolean {
    return this.token !== null;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const headers: Record<string, string> = { ...((init?.headers as Record<string, string>) ?? {}) };
    if (this.token !== null) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const response = await this.fetchImpl(this.base + path, { ...init, headers });
    if (!response.ok) {
      throw new ApiError(response.status, `${path} failed with ${response.status}`);
    }
    return (await response.json()) as T;
  }

  async login(username: string, password: string): Promise<LoginResponse> {
    const result = await this.request<LoginResponse>("/api/v1/login", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ username, password }),
    });
    this.setToken(result.token);
    return result;
  }

  async series(device: string, metric: Metric, fromTs: number, toTs: number): Promise<SeriesResponse> {
    const params = new URLSearchParams({
      device,
      metric,
      from: String(fromTs),
      to: String(toTs),
    });
    return this.request<SeriesResponse>(`/api/v1/series?${params}`);
  }

  async notifications(device: string): Promise<{ notifications: NotificationItem[] }> {
    const params = new URLSearchParams({ device });
    return this.request<{ notifications: NotificationItem[] }>(`/api/v1/notifications?${params}`);
  }

  async rules(): Promise<Rules> {
    return this.request<Rules>("/api/v1/rules");
  }
}
