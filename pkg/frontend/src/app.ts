import { SessionApi, type Condition } from "./api.js";
import { ImpressionTracker, type VisibilityProbe } from "./impressions.js";
import { MasonryFeed, viewportProbe } from "./masonry.js";
import { DialoguePanel } from "./panel.js";
import { NotificationChannel } from "./push.js";
import { SearchBar } from "./search.js";
import { SessionViewModel } from "./viewmodel.js";

export interface AppOptions {
  api: SessionApi;
  root: HTMLElement;
  condition?: Condition;
  sessionId?: string;
  seed?: number;
  config?: Record<string, unknown>;
  debugOrigins?: boolean;
  probe?: VisibilityProbe;
  /** Leave timers unstarted; a test driver calls tick()/poll() itself. */
  manual?: boolean;
}

export class App {
  vm: SessionViewModel;
  feed: MasonryFeed;
  panel: DialoguePanel;
  searchBar: SearchBar;
  tracker: ImpressionTracker;
  channel: NotificationChannel | null = null;
  banner: HTMLElement;
  refreshButton: HTMLButtonElement;
  chatButton: HTMLButtonElement;
  private timers: Array<ReturnType<typeof setInterval>> = [];

  constructor(private options: AppOptions) {
    const doc = options.root.ownerDocument;
    this.vm = new SessionViewModel(options.api);

    this.banner = doc.createElement("div");
    this.banner.className = "offline-banner";
    this.banner.textContent = "offline, interactions will sync when back";
    this.banner.hidden = true;
    options.root.appendChild(this.banner);

    const toolbar = doc.createElement("div");
    toolbar.className = "toolbar";
    this.refreshButton = doc.createElement("button");
    this.refreshButton.className = "refresh";
    this.refreshButton.textContent = "Refresh";
    this.refreshButton.addEventListener("click", () => {
      this.vm.refresh().catch(() => {
        // unreachable server: the offline banner is already up
      });
    });
    toolbar.appendChild(this.refreshButton);
    this.chatButton = doc.createElement("button");
    this.chatButton.className = "chat-open";
    this.chatButton.textContent = "Chat";
    this.chatButton.addEventListener("click", () => this.vm.openPanel());
    toolbar.appendChild(this.chatButton);
    options.root.appendChild(toolbar);

    this.searchBar = new SearchBar(doc, this.vm);
    options.root.appendChild(this.searchBar.element);

    this.feed = new MasonryFeed(doc, { debugOrigins: options.debugOrigins });
    options.root.appendChild(this.feed.element);

    this.panel = new DialoguePanel(doc, this.vm);
    options.root.appendChild(this.panel.affordance);
    options.root.appendChild(this.panel.element);

    const probe = options.probe ?? viewportProbe(this.feed, doc.defaultView as Window);
    this.tracker = new ImpressionTracker(probe, options.api.now, (itemId, action, tMs) => {
      void this.vm.reportImpression(itemId, action, tMs);
    });

    this.vm.onChange = () => this.render();
    options.api.onOfflineChange = (offline) => {
      // back online: push any reports that queued during the gap
      if (!offline) void options.api.flushReports();
      this.render();
    };
  }

  async start(): Promise<void> {
    if (this.options.sessionId) {
      await this.vm.attach(this.options.sessionId);
    } else {
      await this.vm.create({
        condition: this.options.condition ?? "FEED",
        seed: this.options.seed,
        config: this.options.config,
      });
    }
    this.channel = new NotificationChannel(this.options.api, this.vm.sessionId, (note) => {
      this.vm.handleNotification(note);
    });
    if (!this.options.manual) {
      this.channel.start();
      this.timers.push(setInterval(() => this.tick(), 100));
      const win = this.options.root.ownerDocument.defaultView;
      win?.addEventListener("scroll", () => this.handleScroll(win.scrollY || 0));
    }
    this.render();
  }

  handleScroll(positionPx: number): void {
    void this.vm.reportScroll(Math.round(positionPx));
    this.tick();
  }

  /** One visibility pass plus a re-render. */
  tick(): void {
    this.tracker.evaluate();
    this.render();
  }

  render(): void {
    this.banner.hidden = !this.vm.offline;
    this.chatButton.hidden = !this.vm.showChatAffordance;
    this.searchBar.render();
    if (this.vm.page) {
      this.feed.update(this.vm.page);
      this.tracker.setItems(this.vm.page.items.map((it) => it.item_id));
    }
    this.panel.render();
  }

  stop(): void {
    for (const timer of this.timers) clearInterval(timer);
    this.timers = [];
    this.channel?.stop();
    this.tracker.flush();
  }
}

export async function mountApp(options: AppOptions): Promise<App> {
  const app = new App(options);
  await app.start();
  return app;
}

/** Browser entry: read the query string and mount into #app. */
export async function bootstrap(win: Window): Promise<App> {
  const params = new URLSearchParams(win.location.search);
  const baseUrl = params.get("api") ?? "";
  const t0 = Date.now();
  const api = new SessionApi(baseUrl, () => Date.now() - t0);
  const root = win.document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  return mountApp({
    api,
    root,
    condition: (params.get("condition") as Condition | null) ?? "AI_INIT",
    sessionId: params.get("session") ?? undefined,
    seed: params.has("seed") ? Number(params.get("seed")) : undefined,
    debugOrigins: params.get("debug") === "1",
  });
}
