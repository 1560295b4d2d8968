import type { Notification, SessionApi } from "./api.js";

/** Server-initiated moments (trigger, blend confirmation) arrive here.
 * WebSocket when the platform has one, interval polling otherwise; either
 * way each notification is delivered exactly once, in seq order. */
export class NotificationChannel {
  after = 0;
  private timer: ReturnType<typeof setInterval> | null = null;
  private socket: WebSocket | null = null;

  constructor(
    private api: SessionApi,
    private sessionId: string,
    private onNotification: (note: Notification) => void,
  ) {}

  private deliver(note: Notification): void {
    if (note.seq <= this.after) return;
    this.after = note.seq;
    this.onNotification(note);
  }

  /** One polling round; the test driver calls this directly. */
  async poll(): Promise<void> {
    try {
      const data = await this.api.getNotifications(this.sessionId, this.after);
      for (const note of data.notifications) this.deliver(note);
    } catch {
      // connectivity gaps are the report queue's problem; polling just retries
    }
  }

  start(intervalMs = 500): void {
    if (this.connectSocket()) return;
    this.timer = setInterval(() => void this.poll(), intervalMs);
  }

  private connectSocket(): boolean {
    const WS = (globalThis as { WebSocket?: typeof WebSocket }).WebSocket;
    if (!WS) return false;
    const wsBase = this.api.baseUrl.replace(/^http/, "ws");
    try {
      this.socket = new WS(`${wsBase}/sessions/${this.sessionId}/push?after=${this.after}`);
    } catch {
      return false;
    }
    this.socket.onmessage = (event) => {
      this.deliver(JSON.parse(String(event.data)) as Notification);
    };
    this.socket.onerror = () => {
      this.stop();
      this.timer = setInterval(() => void this.poll(), 500);
    };
    return true;
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
    if (this.socket) {
      this.socket.onerror = null;
      this.socket.close();
      this.socket = null;
    }
  }
}
