import {
  CAPABILITIES,
  type AssistantTurn,
  type Condition,
  type DialogueSnapshot,
  type Notification,
  type Page,
  type SessionApi,
} from "./api.js";

/** Render-ready session state. Holds no experiment semantics of its own:
 * every field is rebuilt from server responses, so a page reload that
 * re-attaches to the session reproduces the same view. */
export class SessionViewModel {
  sessionId = "";
  condition: Condition = "FEED";
  capabilities: string[] = [];
  page: Page | null = null;
  dialogue: DialogueSnapshot | null = null;
  panelOpen = false;
  pendingReply = false;
  transcript: AssistantTurn[] = [];
  lastNotification: Notification | null = null;
  onChange: () => void = () => {};
  private seenTurns = new Set<string>();

  constructor(public api: SessionApi) {}

  private changed(): void {
    this.onChange();
  }

  get offline(): boolean {
    return this.api.offline;
  }

  // -- derived render state ----------------------------------------------------

  get showSearchBar(): boolean {
    return this.capabilities.includes("search");
  }

  get showChatAffordance(): boolean {
    return this.capabilities.includes("chat");
  }

  /** The floating attention cue: there is an open dialogue the user has not
   * looked at yet. Derived purely from server-side dialogue stage. */
  get showTriggerAffordance(): boolean {
    if (this.panelOpen || !this.dialogue) return false;
    return ["AwaitingResponse", "Narrowing", "Blending"].includes(this.dialogue.stage);
  }

  get idlePrompt(): string {
    return this.dialogue?.idle_prompt ?? "";
  }

  get options() {
    return this.dialogue?.options ?? [];
  }

  // -- lifecycle ---------------------------------------------------------------

  async create(body: Parameters<SessionApi["createSession"]>[0]): Promise<void> {
    const created = await this.api.createSession(body);
    this.sessionId = created.session_id;
    this.condition = created.condition;
    this.capabilities = created.capabilities;
    this.page = created.page;
    this.dialogue = created.dialogue;
    this.changed();
  }

  /** Re-attach to an existing session (page reload path). */
  async attach(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    this.page = await this.api.getPage(sessionId);
    this.condition = this.page.condition;
    this.capabilities = CAPABILITIES[this.condition];
    this.dialogue = await this.api.getDialogue(sessionId);
    this.changed();
  }

  // -- feed actions --------------------------------------------------------------

  async refresh(): Promise<void> {
    const result = await this.api.refresh(this.sessionId);
    this.page = result.page;
    this.changed();
    if (result.triggered) await this.syncDialogue();
  }

  async reportImpression(itemId: string, action: "enter" | "exit", tMs?: number): Promise<void> {
    await this.api.reportImpression(this.sessionId, itemId, action, tMs);
    this.changed();
  }

  async reportScroll(positionPx: number, tMs?: number): Promise<void> {
    await this.api.reportScroll(this.sessionId, positionPx, tMs);
    this.changed();
  }

  async search(query: string): Promise<void> {
    await this.api.search(this.sessionId, query);
    this.page = await this.api.getPage(this.sessionId);
    this.changed();
  }

  // -- dialogue actions ------------------------------------------------------------

  private addTurn(turn: AssistantTurn): void {
    const key = `${turn.role}:${turn.turn_index}`;
    if (this.seenTurns.has(key)) return;
    this.seenTurns.add(key);
    this.transcript.push(turn);
  }

  handleNotification(note: Notification): void {
    this.lastNotification = note;
    const turn = note.turn as AssistantTurn | undefined;
    if (turn) this.addTurn(turn);
    void this.syncDialogue();
  }

  async syncDialogue(): Promise<void> {
    this.dialogue = await this.api.getDialogue(this.sessionId);
    this.changed();
  }

  openPanel(): void {
    this.panelOpen = true;
    this.changed();
  }

  closePanel(): void {
    this.panelOpen = false;
    this.changed();
  }

  private absorbReply(reply: { turn: AssistantTurn; confirmation: AssistantTurn | null; dialogue: DialogueSnapshot }): void {
    this.addTurn(reply.turn);
    if (reply.confirmation) this.addTurn(reply.confirmation);
    this.dialogue = reply.dialogue;
  }

  /** Options are disabled from click until the reply arrives, so a double
   * tap cannot send twice. */
  async selectOption(optionId: string): Promise<void> {
    if (this.pendingReply) return;
    this.pendingReply = true;
    this.changed();
    try {
      this.absorbReply(await this.api.selectOption(this.sessionId, optionId));
    } catch (err) {
      // a stale option set (e.g. second tab confirmed already): re-sync
      await this.syncDialogue();
      throw err;
    } finally {
      this.pendingReply = false;
      this.changed();
    }
  }

  async sendText(text: string): Promise<void> {
    if (this.pendingReply || !text.trim()) return;
    this.pendingReply = true;
    this.changed();
    try {
      this.absorbReply(await this.api.sendText(this.sessionId, text));
    } finally {
      this.pendingReply = false;
      this.changed();
    }
  }

  async dismiss(): Promise<void> {
    this.dialogue = await this.api.dismissDialogue(this.sessionId);
    this.panelOpen = false;
    this.changed();
  }
}
