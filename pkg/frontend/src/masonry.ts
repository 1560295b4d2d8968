import type { FeedCard, Page } from "./api.js";
import type { VisibilityProbe } from "./impressions.js";

export interface MasonryOptions {
  /** Reveal origin tags (blended vs initial). Off by default: blended items
   * must look exactly like the rest of the feed. */
  debugOrigins?: boolean;
  columns?: number;
}

function estimateHeight(card: FeedCard): number {
  // no layout engine is guaranteed; a deterministic estimate keeps the two
  // columns near balanced everywhere
  return 140 + Math.min(card.title.length, 80) * 2;
}

function renderCard(doc: Document, card: FeedCard, debug: boolean): HTMLElement {
  const el = doc.createElement("article");
  el.className = "card";
  el.dataset.itemId = card.item_id;
  el.dataset.origin = card.origin;
  el.dataset.category = card.category;
  const title = doc.createElement("h3");
  title.textContent = card.title;
  el.appendChild(title);
  const meta = doc.createElement("span");
  meta.className = "meta";
  meta.textContent = `${card.engagement_count}`;
  el.appendChild(meta);
  if (debug) {
    const badge = doc.createElement("span");
    badge.className = `origin-badge origin-${card.origin}`;
    badge.textContent = card.origin;
    el.appendChild(badge);
  }
  return el;
}

/** Two-column masonry feed. The container element is created once and kept;
 * refreshes swap card nodes inside it, never the page. */
export class MasonryFeed {
  readonly element: HTMLElement;
  private columns: HTMLElement[] = [];

  constructor(doc: Document, private options: MasonryOptions = {}) {
    this.element = doc.createElement("div");
    this.element.className = "feed";
    const n = options.columns ?? 2;
    for (let i = 0; i < n; i += 1) {
      const col = doc.createElement("div");
      col.className = "column";
      col.dataset.col = String(i);
      this.columns.push(col);
      this.element.appendChild(col);
    }
  }

  update(page: Page): void {
    const doc = this.element.ownerDocument;
    const heights = this.columns.map(() => 0);
    for (const col of this.columns) col.replaceChildren();
    if (page.items.length === 0) {
      const empty = doc.createElement("p");
      empty.className = "placeholder";
      empty.textContent = "Nothing here yet.";
      this.columns[0].appendChild(empty);
      return;
    }
    for (const card of page.items) {
      let target = 0;
      for (let i = 1; i < heights.length; i += 1) {
        if (heights[i] < heights[target]) target = i;
      }
      this.columns[target].appendChild(
        renderCard(doc, card, this.options.debugOrigins ?? false),
      );
      heights[target] += estimateHeight(card);
    }
  }

  itemIds(): string[] {
    return [...this.element.querySelectorAll<HTMLElement>(".card")].map(
      (el) => el.dataset.itemId ?? "",
    );
  }

  cardElement(itemId: string): HTMLElement | null {
    return this.element.querySelector(`.card[data-item-id="${itemId}"]`);
  }
}

/** Real-browser visibility: fraction of the card's height inside the
 * viewport. Tests substitute their own probe. */
export function viewportProbe(feed: MasonryFeed, win: Window): VisibilityProbe {
  return (itemId: string) => {
    const el = feed.cardElement(itemId);
    if (!el) return 0;
    const rect = el.getBoundingClientRect();
    if (rect.height <= 0) return 0;
    const top = Math.max(rect.top, 0);
    const bottom = Math.min(rect.bottom, win.innerHeight);
    return Math.max(0, bottom - top) / rect.height;
  };
}
