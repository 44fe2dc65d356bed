// Toolbox (C): one draggable entry per catalog layer type.

import type { CatalogEntry } from "../types";

export const LAYER_MIME = "application/x-sketch-layer";

export function renderToolbox(container: HTMLElement,
                              catalog: CatalogEntry[]): void {
  container.innerHTML = "";
  for (const entry of catalog) {
    const item = document.createElement("div");
    item.className = "tool";
    item.draggable = true;
    item.dataset.layerType = entry.type;
    item.textContent = entry.type;
    item.title = entry.params
      .map((p) => `${p.name} = ${JSON.stringify(p.default)}`)
      .join("\n") || "no parameters";
    item.addEventListener("dragstart", (event) => {
      event.dataTransfer?.setData(LAYER_MIME, entry.type);
      event.dataTransfer?.setData("text/plain", entry.type);
    });
    container.appendChild(item);
  }
}
