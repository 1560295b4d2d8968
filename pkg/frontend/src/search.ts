import type { SessionViewModel } from "./viewmodel.js";

/** Search bar, rendered only when the session's condition allows search.
 * Submitting splices results into the feed server-side and re-reads the
 * page, so the results land in the masonry like everything else. */
export class SearchBar {
  readonly element: HTMLElement;
  private input: HTMLInputElement;
  private status: HTMLElement;

  constructor(doc: Document, private vm: SessionViewModel) {
    this.element = doc.createElement("form");
    this.element.className = "search-bar";
    this.input = doc.createElement("input");
    this.input.type = "search";
    this.input.placeholder = "Search";
    this.element.appendChild(this.input);
    const go = doc.createElement("button");
    go.type = "submit";
    go.textContent = "Search";
    this.element.appendChild(go);
    this.status = doc.createElement("span");
    this.status.className = "search-status";
    this.element.appendChild(this.status);

    this.element.addEventListener("submit", (event) => {
      event.preventDefault();
      const query = this.input.value.trim();
      if (!query) return;
      this.vm.search(query).then(
        () => {
          this.status.textContent = "results added to your feed";
        },
        () => {
          this.status.textContent = "search failed, try again";
        },
      );
    });
  }

  render(): void {
    this.element.hidden = !this.vm.showSearchBar;
  }
}
