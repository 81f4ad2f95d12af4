import type {
  ChatMessage,
  NearbyPoi,
  PresenceInfo,
  SearchRow,
  SessionInfo,
  SosAlert,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    public status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchFn = typeof fetch;

/** Thin typed client over the gateway route map. */
export class ApiClient {
  token: string | null = null;

  constructor(
    private baseUrl: string,
    private fetchFn: FetchFn = fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      const err = (payload?.error ?? {}) as { code?: string; message?: string };
      throw new ApiError(err.code ?? "Internal", response.status, err.message ?? "request failed");
    }
    return payload as T;
  }

  register(first: string, last: string, email: string, password: string) {
    return this.request<{ user_id: string }>("POST", "/auth/register", {
      first_name: first,
      last_name: last,
      email,
      password,
    });
  }

  verify(token: string) {
    return this.request<{ user_id: string; verified: boolean }>("POST", "/auth/verify", { token });
  }

  async login(email: string, password: string): Promise<SessionInfo> {
    const body = await this.request<{
      token: string;
      expires_at: number;
      user: SessionInfo["user"];
    }>("POST", "/auth/login", { email, password });
    this.token = body.token;
    return { token: body.token, expiresAt: body.expires_at, user: body.user };
  }

  registerDeviceToken(token: string) {
    return this.request<{ ok: boolean }>("POST", "/auth/device-token", { token });
  }

  async getContacts(): Promise<string[] | null> {
    const body = await this.request<{ numbers: string[] | null }>("GET", "/contacts");
    return body.numbers;
  }

  async setContacts(numbers: string[]): Promise<string[]> {
    const body = await this.request<{ numbers: string[] }>("PUT", "/contacts", { numbers });
    return body.numbers;
  }

  sos(lat: number, lon: number): Promise<SosAlert> {
    return this.request<SosAlert>("POST", "/sos", { lat, lon });
  }

  async alerts(): Promise<SosAlert[]> {
    const body = await this.request<{ alerts: SosAlert[] }>("GET", "/alerts");
    return body.alerts;
  }

  async nearby(
    lat: number,
    lon: number,
    category?: string,
    k?: number,
    radius?: number,
  ): Promise<NearbyPoi[]> {
    const params = new URLSearchParams({ lat: String(lat), lon: String(lon) });
    if (category && category !== "all") params.set("category", category);
    if (k !== undefined) params.set("k", String(k));
    if (radius !== undefined) params.set("radius", String(radius));
    const body = await this.request<{ results: NearbyPoi[] }>("GET", `/nearby?${params}`);
    return body.results;
  }

  async searchUsers(query: string, limit = 20): Promise<SearchRow[]> {
    const params = new URLSearchParams({ q: query, limit: String(limit) });
    const body = await this.request<{ results: SearchRow[] }>("GET", `/users/search?${params}`);
    return body.results;
  }

  sendMessage(peerId: string, body: string): Promise<ChatMessage> {
    return this.request<ChatMessage>("POST", `/chats/${peerId}/messages`, { body });
  }

  async getMessages(peerId: string, after?: string, limit = 100): Promise<ChatMessage[]> {
    const params = new URLSearchParams({ limit: String(limit) });
    if (after) params.set("after", after);
    const body = await this.request<{ messages: ChatMessage[] }>(
      "GET",
      `/chats/${peerId}/messages?${params}`,
    );
    return body.messages;
  }

  /** Page through the full history; resolves with the messages and the
   * number of GETs it took (a short page means the end was reached). */
  async fetchHistory(
    peerId: string,
    pageSize = 10,
    after?: string,
  ): Promise<{ messages: ChatMessage[]; fetches: number }> {
    const messages: ChatMessage[] = [];
    let cursor = after;
    let fetches = 0;
    for (;;) {
      const page = await this.getMessages(peerId, cursor, pageSize);
      fetches += 1;
      messages.push(...page);
      if (page.length < pageSize) break;
      cursor = page[page.length - 1]!.id;
    }
    return { messages, fetches };
  }

  checkpoint(name: string) {
    return this.request<{ ok: boolean }>("POST", "/presence/checkpoint", { name });
  }

  presence(userId: string): Promise<PresenceInfo & { user_id: string }> {
    return this.request<PresenceInfo & { user_id: string }>("GET", `/users/${userId}/presence`);
  }

  health() {
    return this.request<{ status: string; users: number }>("GET", "/health");
  }
}
