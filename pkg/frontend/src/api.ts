// Typed client for the session service. Every mutation round-trips the
// server; the only local state is the offline report queue.

export type Condition = "FEED" | "SEARCH" | "USER_CHAT" | "AI_INIT";

export interface FeedCard {
  item_id: string;
  category: string;
  title: string;
  engagement_count: number;
  origin: "initial" | "blended";
  index: number;
}

export interface Page {
  session_id: string;
  condition: Condition;
  offset: number;
  total: number;
  cursor: number;
  refresh_count: number;
  composition: Record<string, number>;
  items: FeedCard[];
}

export interface DialogueOption {
  option_id: string;
  label: string;
  kind: string;
  direction: { mode: string; target_categories: string[]; refinement: string };
}

export interface DialogueSnapshot {
  stage: "Idle" | "InsightShown" | "AwaitingResponse" | "Narrowing" | "Blending" | "Dismissed";
  insight: Record<string, unknown> | null;
  options: DialogueOption[];
  narrowing_rounds_used: number;
  chosen_direction: Record<string, unknown> | null;
  turn_count: number;
  initiation: string | null;
  cycles_completed: number;
  idle_prompt?: string;
}

export interface AssistantTurn {
  role: string;
  turn_index: number;
  text?: string;
  options?: DialogueOption[];
  stage: string;
  [key: string]: unknown;
}

export interface DialogueReply {
  turn: AssistantTurn;
  confirmation: AssistantTurn | null;
  dialogue: DialogueSnapshot;
}

export interface Notification {
  seq: number;
  type: "trigger" | "blend_confirmed";
  t_ms: number;
  [key: string]: unknown;
}

export interface RefreshResult {
  k_requested: number;
  replaced: number;
  shortfall: number;
  fallback: boolean;
  replaced_indices: number[];
  composition: Record<string, number>;
  triggered: boolean;
  page: Page;
}

export interface CreateResult {
  session_id: string;
  condition: Condition;
  capabilities: string[];
  created: string;
  page: Page;
  dialogue: DialogueSnapshot;
}

export interface SearchResult {
  results: FeedCard[];
  result_count: number;
  inserted_at: number | null;
}

export interface Metrics {
  session_id: string;
  condition: Condition;
  [measure: string]: unknown;
}

// The condition -> interaction-surface table is part of the documented API
// contract, so a reloaded client can rebuild capabilities from the page's
// condition field alone.
export const CAPABILITIES: Record<Condition, string[]> = {
  FEED: ["feed"],
  SEARCH: ["feed", "search"],
  USER_CHAT: ["chat", "feed"],
  AI_INIT: ["analyze", "chat", "feed", "options"],
};

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

interface QueuedReport {
  path: string;
  body: Record<string, unknown>;
}

/** Milliseconds since the session started; injectable for scripted tests. */
export type Clock = () => number;

export class SessionApi {
  offline = false;
  onOfflineChange: (offline: boolean) => void = () => {};
  private queue: QueuedReport[] = [];
  private chain: Promise<unknown> = Promise.resolve();
  private fetchFn: FetchFn;

  constructor(
    public baseUrl: string,
    public now: Clock,
    fetchFn?: FetchFn,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  queuedReports(): number {
    return this.queue.length;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      // could not reach the server at all; an HTTP error below does not count
      this.setOffline(true);
      throw err;
    }
    const data = (await response.json()) as Record<string, unknown>;
    this.setOffline(false);
    if (!response.ok) {
      const err = (data.error ?? {}) as { code?: string; message?: string };
      throw new ApiError(response.status, err.code ?? "error", err.message ?? "request failed");
    }
    return data as T;
  }

  /** Serialize a call behind everything already submitted, so behavioral
   * reports and dialogue/feed mutations reach the server in the order the
   * user produced them. Reads stay out of the chain. */
  private ordered<T>(fn: () => Promise<T>): Promise<T> {
    const run = this.chain.then(fn);
    this.chain = run.then(
      () => undefined,
      () => undefined,
    );
    return run;
  }

  /** Mutations flush any queued reports first; their timestamps precede the
   * mutation's, and the server enforces a monotone event clock. */
  private mutate<T>(fn: () => Promise<T>): Promise<T> {
    return this.ordered(async () => {
      await this.drain();
      return fn();
    });
  }

  private setOffline(offline: boolean): void {
    if (offline !== this.offline) {
      this.offline = offline;
      this.onOfflineChange(offline);
    }
  }

  /** Behavioral reports tolerate connectivity gaps: on network failure they
   * queue locally (keeping their timestamps) and flush in order once a
   * report gets through again. */
  private report(path: string, body: Record<string, unknown>): Promise<void> {
    this.queue.push({ path, body });
    return this.ordered(() => this.drain());
  }

  private async drain(): Promise<void> {
    while (this.queue.length > 0) {
      const next = this.queue[0];
      try {
        await this.request("POST", next.path, next.body);
      } catch (err) {
        if (err instanceof ApiError) {
          // the server saw it and rejected it; dropping beats wedging the queue
          this.queue.shift();
          continue;
        }
        this.setOffline(true);
        return;
      }
      this.queue.shift();
    }
    this.setOffline(false);
  }

  async flushReports(): Promise<boolean> {
    await this.ordered(() => this.drain());
    return this.queue.length === 0;
  }

  // -- lifecycle -------------------------------------------------------------

  createSession(body: {
    condition: Condition;
    session_id?: string;
    seed?: number;
    feed_spec?: Record<string, unknown>;
    config?: Record<string, unknown>;
  }): Promise<CreateResult> {
    return this.request("POST", "/sessions", body);
  }

  closeSession(sessionId: string): Promise<{ ok: boolean }> {
    return this.request("DELETE", `/sessions/${sessionId}`);
  }

  // -- feed --------------------------------------------------------------------

  getPage(sessionId: string): Promise<Page> {
    return this.request("GET", `/sessions/${sessionId}/page`);
  }

  refresh(sessionId: string): Promise<RefreshResult> {
    const body = { t_ms: this.now() };
    return this.mutate(() => this.request("POST", `/sessions/${sessionId}/refresh`, body));
  }

  reportImpression(sessionId: string, itemId: string, action: "enter" | "exit", tMs?: number): Promise<void> {
    return this.report(`/sessions/${sessionId}/impressions`, {
      item_id: itemId,
      action,
      t_ms: tMs ?? this.now(),
    });
  }

  reportScroll(sessionId: string, positionPx: number, tMs?: number): Promise<void> {
    return this.report(`/sessions/${sessionId}/scroll`, {
      position_px: positionPx,
      t_ms: tMs ?? this.now(),
    });
  }

  reportClick(sessionId: string, body: { item_id?: string; target?: string }): Promise<void> {
    return this.report(`/sessions/${sessionId}/click`, { ...body, t_ms: this.now() });
  }

  // -- search --------------------------------------------------------------------

  search(sessionId: string, query: string, replace = false): Promise<SearchResult> {
    const body = { query, replace, t_ms: this.now() };
    return this.mutate(() => this.request("POST", `/sessions/${sessionId}/search`, body));
  }

  // -- dialogue --------------------------------------------------------------------

  getDialogue(sessionId: string): Promise<DialogueSnapshot> {
    return this.request("GET", `/sessions/${sessionId}/dialogue`);
  }

  selectOption(sessionId: string, optionId: string): Promise<DialogueReply> {
    const body = { option_id: optionId, t_ms: this.now() };
    return this.mutate(() =>
      this.request("POST", `/sessions/${sessionId}/dialogue/option`, body),
    );
  }

  sendText(sessionId: string, text: string): Promise<DialogueReply> {
    const body = { text, t_ms: this.now() };
    return this.mutate(() =>
      this.request("POST", `/sessions/${sessionId}/dialogue/text`, body),
    );
  }

  dismissDialogue(sessionId: string): Promise<DialogueSnapshot> {
    const body = { t_ms: this.now() };
    return this.mutate(() =>
      this.request("POST", `/sessions/${sessionId}/dialogue/dismiss`, body),
    );
  }

  requestAnalysis(sessionId: string): Promise<Record<string, unknown>> {
    const body = { t_ms: this.now() };
    return this.mutate(() =>
      this.request("POST", `/sessions/${sessionId}/analyze`, body),
    );
  }

  markPhase(sessionId: string, phase: string, mark: "start" | "end", tMs: number): Promise<void> {
    const body = { phase, mark, t_ms: tMs };
    return this.mutate(() =>
      this.request("POST", `/sessions/${sessionId}/phase`, body),
    );
  }

  // -- notifications, metrics --------------------------------------------------

  getNotifications(sessionId: string, after: number): Promise<{ notifications: Notification[] }> {
    return this.request("GET", `/sessions/${sessionId}/notifications?after=${after}`);
  }

  getMetrics(sessionId: string): Promise<Metrics> {
    return this.request("GET", `/sessions/${sessionId}/metrics`);
  }

  getEvents(sessionId: string): Promise<{ header: Record<string, unknown>; events: Array<Record<string, unknown>> }> {
    return this.request("GET", `/sessions/${sessionId}/events`);
  }
}
