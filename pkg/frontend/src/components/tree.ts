// Directory Tree (H): interactive listing of the project root. Project files
// open as new tabs; model files import.

import type { ApiClient } from "../api";

export interface TreeCallbacks {
  openProject(path: string): Promise<void>;
  importModel(path: string): Promise<void>;
  onError(error: unknown): void;
}

export class DirectoryTree {
  constructor(private readonly container: HTMLElement,
              private readonly api: ApiClient,
              private readonly callbacks: TreeCallbacks) {}

  async refresh(): Promise<void> {
    this.container.innerHTML = "";
    await this.renderDir(this.container, ".");
  }

  private async renderDir(parent: HTMLElement, path: string): Promise<void> {
    let listing;
    try {
      listing = await this.api.listDir(path);
    } catch (error) {
      this.callbacks.onError(error);
      return;
    }
    const list = document.createElement("ul");
    list.className = "tree-level";
    for (const entry of listing.entries) {
      const item = document.createElement("li");
      item.className = `tree-${entry.kind}`;
      const label = document.createElement("span");
      label.textContent = entry.name;
      label.dataset.path = path === "." ? entry.name : `${path}/${entry.name}`;
      item.appendChild(label);
      if (entry.kind === "dir") {
        label.addEventListener("click", () => {
          const open = item.querySelector("ul");
          if (open) {
            open.remove();
          } else {
            void this.renderDir(item, label.dataset.path!);
          }
        });
      } else if (entry.name.endsWith(".sketch")) {
        label.classList.add("openable");
        label.addEventListener("click", () => {
          this.callbacks.openProject(label.dataset.path!)
            .catch(this.callbacks.onError);
        });
      } else if (entry.name.endsWith(".onnx")) {
        label.classList.add("importable");
        label.addEventListener("click", () => {
          this.callbacks.importModel(label.dataset.path!)
            .catch(this.callbacks.onError);
        });
      }
      list.appendChild(item);
    }
    parent.appendChild(list);
  }
}
