import type { SessionViewModel } from "./viewmodel.js";

/** Slide-in dialogue panel: insight text, clickable options, a free-text
 * field, and dismiss. The feed stays interactive beside it. */
export class DialoguePanel {
  readonly element: HTMLElement;
  readonly affordance: HTMLElement;
  private transcriptEl: HTMLElement;
  private optionsEl: HTMLElement;
  private promptEl: HTMLElement;
  private input: HTMLInputElement;

  constructor(doc: Document, private vm: SessionViewModel) {
    this.affordance = doc.createElement("button");
    this.affordance.className = "trigger-affordance pulse";
    this.affordance.textContent = "✦";
    this.affordance.addEventListener("click", () => {
      this.vm.openPanel();
    });

    this.element = doc.createElement("aside");
    this.element.className = "panel";

    const header = doc.createElement("div");
    header.className = "panel-header";
    const title = doc.createElement("span");
    title.textContent = "Assistant";
    header.appendChild(title);
    const dismiss = doc.createElement("button");
    dismiss.className = "dismiss";
    dismiss.textContent = "×";
    dismiss.addEventListener("click", () => {
      this.vm.dismiss().catch(() => {});
    });
    header.appendChild(dismiss);
    this.element.appendChild(header);

    this.promptEl = doc.createElement("p");
    this.promptEl.className = "idle-prompt";
    this.element.appendChild(this.promptEl);

    this.transcriptEl = doc.createElement("div");
    this.transcriptEl.className = "transcript";
    this.element.appendChild(this.transcriptEl);

    this.optionsEl = doc.createElement("div");
    this.optionsEl.className = "options";
    this.element.appendChild(this.optionsEl);

    const form = doc.createElement("form");
    form.className = "composer";
    this.input = doc.createElement("input");
    this.input.type = "text";
    this.input.placeholder = "Type a message";
    form.appendChild(this.input);
    const send = doc.createElement("button");
    send.type = "submit";
    send.textContent = "Send";
    form.appendChild(send);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const text = this.input.value;
      this.input.value = "";
      this.vm.sendText(text).catch(() => {});
    });
    this.element.appendChild(form);
  }

  render(): void {
    const doc = this.element.ownerDocument;
    this.affordance.hidden = !this.vm.showTriggerAffordance;
    this.element.hidden = !this.vm.panelOpen;

    this.promptEl.textContent = this.vm.idlePrompt;
    this.promptEl.hidden = this.vm.idlePrompt === "";

    this.transcriptEl.replaceChildren();
    for (const turn of this.vm.transcript) {
      if (!turn.text) continue;
      const line = doc.createElement("p");
      line.className = `turn turn-${turn.role}`;
      line.textContent = turn.text;
      this.transcriptEl.appendChild(line);
    }

    this.optionsEl.replaceChildren();
    for (const option of this.vm.options) {
      const button = doc.createElement("button");
      button.className = "option";
      button.dataset.optionId = option.option_id;
      button.dataset.kind = option.kind;
      button.dataset.mode = option.direction.mode;
      button.textContent = option.label;
      button.disabled = this.vm.pendingReply;
      button.addEventListener("click", () => {
        this.vm.selectOption(option.option_id).catch(() => {
          // stale set: the vm re-synced the panel from the server already
        });
      });
      this.optionsEl.appendChild(button);
    }
  }
}
