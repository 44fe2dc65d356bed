// Group Canvas (F): the expanded view of one collapsed group, showing its
// member chain. Selecting a member binds it to the Node Editor.

import { paramSummary } from "../scene";
import type { GraphDoc, GroupDoc } from "../types";

export interface GroupCanvasCallbacks {
  selectNode(nodeId: string): void;
  ungroup(groupId: string): Promise<void>;
  close(): void;
}

export class GroupCanvas {
  private openGroup: string | null = null;

  constructor(private readonly container: HTMLElement,
              private readonly callbacks: GroupCanvasCallbacks) {}

  open(groupId: string): void {
    this.openGroup = groupId;
  }

  close(): void {
    this.openGroup = null;
    this.render(null);
  }

  current(): string | null {
    return this.openGroup;
  }

  render(doc: GraphDoc | null): void {
    this.container.innerHTML = "";
    this.container.classList.toggle("hidden", this.openGroup === null);
    if (!doc || this.openGroup === null) return;
    const group: GroupDoc | undefined =
      doc.groups.find((g) => g.id === this.openGroup);
    if (!group) {
      // dissolved elsewhere; the pane follows the authoritative document
      this.openGroup = null;
      this.container.classList.add("hidden");
      return;
    }
    const title = document.createElement("div");
    title.className = "group-title";
    title.textContent = `${group.name} (${group.id})`;
    this.container.appendChild(title);

    const row = document.createElement("div");
    row.className = "group-chain";
    const byId = new Map(doc.nodes.map((n) => [n.id, n]));
    group.members.forEach((memberId, index) => {
      if (index > 0) {
        const arrow = document.createElement("span");
        arrow.className = "chain-arrow";
        arrow.textContent = "→";
        row.appendChild(arrow);
      }
      const node = byId.get(memberId);
      const cell = document.createElement("button");
      cell.className = "chain-block";
      cell.dataset.member = memberId;
      cell.textContent = node ? `${node.type}\n${paramSummary(node)}` : memberId;
      cell.addEventListener("click", () => this.callbacks.selectNode(memberId));
      row.appendChild(cell);
    });
    this.container.appendChild(row);

    const actions = document.createElement("div");
    actions.className = "group-actions";
    const dissolve = document.createElement("button");
    dissolve.textContent = "Ungroup";
    dissolve.dataset.action = "ungroup";
    dissolve.addEventListener("click", () => {
      void this.callbacks.ungroup(group.id);
    });
    const close = document.createElement("button");
    close.textContent = "Close";
    close.dataset.action = "close";
    close.addEventListener("click", () => this.callbacks.close());
    actions.append(dissolve, close);
    this.container.appendChild(actions);
  }
}
