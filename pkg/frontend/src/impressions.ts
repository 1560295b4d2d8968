import type { Clock } from "./api.js";

/** Fraction of a card currently inside the viewport, by item id. */
export type VisibilityProbe = (itemId: string) => number;

export interface ImpressionSink {
  (itemId: string, action: "enter" | "exit", tMs: number): void;
}

const VISIBLE_FRACTION = 0.5;
const DEBOUNCE_MS = 100;

/** Turns raw visibility into impression events: a card counts as surfaced
 * once it has been at least half visible for 100 ms without interruption,
 * and the matching exit fires when it drops back below half. The debounce
 * keeps fast scroll-through from logging phantom impressions. */
export class ImpressionTracker {
  private candidateSince = new Map<string, number>();
  private entered = new Set<string>();
  private items: string[] = [];

  constructor(
    private probe: VisibilityProbe,
    private clock: Clock,
    private sink: ImpressionSink,
  ) {}

  setItems(itemIds: string[]): void {
    this.items = [...itemIds];
    for (const id of [...this.candidateSince.keys()]) {
      if (!this.items.includes(id)) this.candidateSince.delete(id);
    }
    // items replaced while on screen close out their impressions
    for (const id of [...this.entered]) {
      if (!this.items.includes(id)) {
        this.entered.delete(id);
        this.sink(id, "exit", this.clock());
      }
    }
  }

  /** Re-examine every card; call on scroll and on a steady tick. */
  evaluate(): void {
    const now = this.clock();
    for (const id of this.items) {
      const visible = this.probe(id) >= VISIBLE_FRACTION;
      if (visible) {
        if (this.entered.has(id)) continue;
        const since = this.candidateSince.get(id);
        if (since === undefined) {
          this.candidateSince.set(id, now);
        } else if (now - since >= DEBOUNCE_MS) {
          this.candidateSince.delete(id);
          this.entered.add(id);
          this.sink(id, "enter", now);
        }
      } else {
        this.candidateSince.delete(id);
        if (this.entered.has(id)) {
          this.entered.delete(id);
          this.sink(id, "exit", now);
        }
      }
    }
  }

  /** Close any open impressions (page hide, session end). */
  flush(): void {
    const now = this.clock();
    for (const id of [...this.entered]) {
      this.entered.delete(id);
      this.sink(id, "exit", now);
    }
  }
}
