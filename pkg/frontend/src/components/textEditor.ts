// Text Editor (E): read-only pane filled with the kernel's textual output.

import type { Diagnostic } from "../types";

export class TextEditor {
  constructor(private readonly container: HTMLElement) {
    this.container.innerHTML =
      `<pre class="text-pane" data-role="compile-text"></pre>`;
  }

  private pane(): HTMLElement {
    return this.container.querySelector(".text-pane")!;
  }

  showCompileOutput(text: string): void {
    this.pane().classList.remove("error");
    this.pane().textContent = text;
  }

  showDiagnostics(diagnostics: Diagnostic[]): void {
    this.pane().classList.add("error");
    this.pane().textContent = diagnostics
      .map((d) => `[${d.kind}] ${d.message}${d.nodeId ? ` (${d.nodeId})` : ""}`)
      .join("\n");
  }

  text(): string {
    return this.pane().textContent ?? "";
  }
}
