// Editor shell wiring all regions together. The server owns all state: every
// interaction posts a mutation and then refetches the full graph document, so
// the scene is always a pure render of authoritative data.

import { ApiClient, ApiError } from "./api";
import {
  BLOCK_H,
  BLOCK_W,
  ViewState,
  emptyView,
  hitZone,
  placeBlocks,
  renderScene,
  toWorld,
} from "./scene";
import { GroupCanvas } from "./components/groupCanvas";
import { NodeEditor } from "./components/nodeEditor";
import { TextEditor } from "./components/textEditor";
import { Toaster } from "./components/toast";
import { DirectoryTree } from "./components/tree";
import { LAYER_MIME, renderToolbox } from "./components/toolbox";
import type {
  CanvasInfo,
  CatalogEntry,
  Diagnostic,
  GraphDoc,
  KernelDoc,
  Mutation,
  ParamValue,
} from "./types";

export interface AppElements {
  tabs: HTMLElement;
  menu: HTMLElement;
  toolbox: HTMLElement;
  canvas: HTMLElement;
  textEditor: HTMLElement;
  groupCanvas: HTMLElement;
  nodeEditor: HTMLElement;
  tree: HTMLElement;
  toasts: HTMLElement;
}

interface DragState {
  nodeId: string;
  startWorld: [number, number];
  startPosition: [number, number];
  moved: boolean;
  additive: boolean;
}

interface PanState {
  startScreen: [number, number];
  startPan: [number, number];
}

export class App {
  readonly view: ViewState = emptyView();
  catalog: CatalogEntry[] = [];
  kernels: KernelDoc[] = [];
  tabs: CanvasInfo[] = [];
  activeCanvas: string | null = null;
  doc: GraphDoc | null = null;
  revision = -1;
  diagnostics: Diagnostic[] = [];

  readonly nodeEditor: NodeEditor;
  readonly textEditor: TextEditor;
  readonly groupCanvas: GroupCanvas;
  readonly tree: DirectoryTree;
  readonly toaster: Toaster;

  private drag: DragState | null = null;
  private pan: PanState | null = null;
  private catalogByType = new Map<string, CatalogEntry>();
  private keyHandler: ((event: KeyboardEvent) => void) | null = null;
  private inflight: Promise<unknown> = Promise.resolve();

  constructor(readonly api: ApiClient, readonly els: AppElements) {
    this.toaster = new Toaster(els.toasts);
    this.textEditor = new TextEditor(els.textEditor);
    this.nodeEditor = new NodeEditor(els.nodeEditor, this.catalogByType, {
      updateParams: async (nodeId, params) => {
        await this.mutate({ op: "node.update", nodeId, params });
      },
    });
    this.groupCanvas = new GroupCanvas(els.groupCanvas, {
      selectNode: (nodeId) => {
        this.view.selection = new Set([nodeId]);
        this.renderAll();
      },
      ungroup: async (groupId) => {
        await this.mutate({ op: "group.dissolve", groupId });
        this.groupCanvas.close();
      },
      close: () => {
        this.groupCanvas.close();
        this.renderAll();
      },
    });
    this.tree = new DirectoryTree(els.tree, api, {
      openProject: (path) => this.openProject(path),
      importModel: (path) => this.importFromPath(path),
      onError: (error) => this.toaster.error(error),
    });
    this.bindCanvasEvents();
    this.bindKeyboard();
  }

  // --- boot -----------------------------------------------------------------

  async boot(): Promise<void> {
    this.catalog = await this.api.catalog();
    this.catalogByType.clear();
    for (const entry of this.catalog) this.catalogByType.set(entry.type, entry);
    this.kernels = await this.api.kernels();
    renderToolbox(this.els.toolbox, this.catalog);
    this.renderMenu();
    const listing = await this.api.listCanvases();
    this.tabs = listing.canvases;
    if (this.tabs.length === 0) {
      const created = await this.api.createCanvas({});
      this.tabs = (await this.api.listCanvases()).canvases;
      this.activeCanvas = created.canvasId;
    } else {
      this.activeCanvas =
        (this.tabs[listing.activeTab] ?? this.tabs[0])!.canvasId;
    }
    await this.refresh();
    await this.tree.refresh();
  }

  /** Refetch the graph document and re-render every region from it. */
  async refresh(): Promise<void> {
    if (!this.activeCanvas) return;
    const response = await this.api.getGraph(this.activeCanvas);
    this.doc = response.graph;
    this.revision = response.revision;
    this.diagnostics = response.diagnostics;
    const ids = new Set(this.doc.nodes.map((n) => n.id));
    for (const gid of this.doc.groups.map((g) => g.id)) ids.add(gid);
    this.view.selection =
      new Set([...this.view.selection].filter((id) => ids.has(id)));
    this.renderAll();
  }

  renderAll(): void {
    if (!this.doc) return;
    this.els.canvas.innerHTML =
      renderScene(this.doc, this.view, this.diagnostics);
    const selected = this.doc.nodes.filter((n) => this.view.selection.has(n.id));
    this.nodeEditor.render(selected);
    this.groupCanvas.render(this.doc);
    this.renderTabs();
  }

  // --- server round trips ------------------------------------------------------

  /** Mutations queue behind each other: at most one in flight per canvas. */
  mutate(mutation: Mutation): Promise<void> {
    const run = async () => {
      if (!this.activeCanvas) return;
      try {
        await this.api.mutate(this.activeCanvas, mutation);
      } finally {
        // win or lose, the server remains the source of truth
        await this.refresh();
      }
    };
    const next = this.inflight.then(run, run);
    this.inflight = next.catch(() => undefined);
    return next;
  }

  private guard(promise: Promise<unknown>): void {
    promise.catch((error) => {
      if (error instanceof ApiError) this.toaster.error(error);
      else this.toaster.error(error);
    });
  }

  async undo(): Promise<void> {
    if (!this.activeCanvas) return;
    await this.api.undo(this.activeCanvas);
    await this.refresh();
  }

  async redo(): Promise<void> {
    if (!this.activeCanvas) return;
    await this.api.redo(this.activeCanvas);
    await this.refresh();
  }

  async compile(): Promise<void> {
    if (!this.activeCanvas) return;
    const kernel = (this.els.menu.querySelector(
      "[data-role=kernel]") as HTMLSelectElement | null)?.value ?? "onnx";
    try {
      const result = await this.api.compile(this.activeCanvas, kernel);
      this.textEditor.showCompileOutput(result.text);
    } catch (error) {
      if (error instanceof ApiError && error.code === "validation_failed") {
        const diagnostics =
          (error.details?.diagnostics as Diagnostic[] | undefined) ?? [];
        this.textEditor.showDiagnostics(diagnostics);
      }
      throw error;
    }
  }

  async openProject(path: string): Promise<void> {
    const created = await this.api.createCanvas({ path });
    this.tabs = (await this.api.listCanvases()).canvases;
    this.activeCanvas = created.canvasId;
    this.view.selection.clear();
    await this.refresh();
  }

  async importFromPath(path: string): Promise<void> {
    const created = await this.api.importModel({ kernel: "onnx", path });
    this.tabs = (await this.api.listCanvases()).canvases;
    this.activeCanvas = created.canvasId;
    this.view.selection.clear();
    await this.refresh();
    await this.tree.refresh();
  }

  async groupSelection(): Promise<void> {
    if (!this.doc) return;
    const ordered = this.doc.nodes
      .filter((n) => this.view.selection.has(n.id))
      .map((n) => n.id);
    const chain = this.orderAsChain(ordered);
    await this.mutate({
      op: "group.create",
      nodeIds: chain ?? ordered,
      name: `block-${this.doc.groups.length + 1}`,
    });
  }

  /** Reorder selected ids along existing edges so a simple chain is sent in
   * chain order; anything else goes as-is for the server to judge. */
  private orderAsChain(ids: string[]): string[] | null {
    if (!this.doc || ids.length < 2) return null;
    const inSet = new Set(ids);
    const byId = new Map(this.doc.nodes.map((n) => [n.id, n]));
    const heads = ids.filter((id) =>
      !byId.get(id)!.prior.some((p) => inSet.has(p)));
    if (heads.length !== 1) return null;
    const chain = [heads[0]!];
    while (chain.length < ids.length) {
      const tail = byId.get(chain[chain.length - 1]!)!;
      const next = tail.next.find((n) => inSet.has(n));
      if (!next || chain.includes(next)) return null;
      chain.push(next);
    }
    return chain;
  }

  async deleteSelection(): Promise<void> {
    if (!this.doc) return;
    for (const id of [...this.view.selection]) {
      if (this.doc.groups.some((g) => g.id === id)) {
        await this.mutate({ op: "group.dissolve", groupId: id });
      } else if (this.doc.nodes.some((n) => n.id === id)) {
        await this.mutate({ op: "node.remove", nodeId: id });
      }
    }
    this.view.selection.clear();
    await this.refresh();
  }

  // --- menu / tabs ----------------------------------------------------------------

  private renderMenu(): void {
    this.els.menu.innerHTML = "";
    const mk = (label: string, role: string, handler: () => void) => {
      const button = document.createElement("button");
      button.textContent = label;
      button.dataset.role = role;
      button.addEventListener("click", handler);
      this.els.menu.appendChild(button);
      return button;
    };
    mk("New", "new", () => this.guard(this.newCanvas()));
    mk("Save", "save", () => this.guard(this.saveActive()));
    mk("Import…", "import", () => this.pickAndImport());

    const kernelSelect = document.createElement("select");
    kernelSelect.dataset.role = "kernel";
    for (const kernel of this.kernels) {
      if (!kernel.capabilities.export) continue;
      const option = document.createElement("option");
      option.value = kernel.kernelId;
      option.textContent = kernel.kernelId;
      kernelSelect.appendChild(option);
    }
    this.els.menu.appendChild(kernelSelect);

    mk("Compile", "compile", () => this.guard(this.compile()));
    mk("Group", "group", () => this.guard(this.groupSelection()));
    mk("Undo", "undo", () => this.guard(this.undo()));
    mk("Redo", "redo", () => this.guard(this.redo()));
  }

  private async newCanvas(): Promise<void> {
    const created = await this.api.createCanvas({});
    this.tabs = (await this.api.listCanvases()).canvases;
    this.activeCanvas = created.canvasId;
    this.view.selection.clear();
    await this.refresh();
  }

  private async saveActive(): Promise<void> {
    if (!this.activeCanvas) return;
    await this.api.save(this.activeCanvas);
    this.tabs = (await this.api.listCanvases()).canvases;
    this.renderTabs();
    await this.tree.refresh();
  }

  private pickAndImport(): void {
    const input = document.createElement("input");
    input.type = "file";
    input.accept = ".onnx";
    input.addEventListener("change", () => {
      const file = input.files?.[0];
      if (!file) return;
      this.guard(file.arrayBuffer().then(async (buffer) => {
        const bytes = new Uint8Array(buffer);
        let binary = "";
        for (const b of bytes) binary += String.fromCharCode(b);
        const created = await this.api.importModel({
          kernel: "onnx", data: btoa(binary),
          name: file.name.replace(/\.onnx$/, ""),
        });
        this.tabs = (await this.api.listCanvases()).canvases;
        this.activeCanvas = created.canvasId;
        await this.refresh();
      }));
    });
    input.click();
  }

  private renderTabs(): void {
    this.els.tabs.innerHTML = "";
    for (const tab of this.tabs) {
      const el = document.createElement("button");
      el.className = "tab" + (tab.canvasId === this.activeCanvas ? " active" : "");
      el.dataset.canvasId = tab.canvasId;
      el.textContent = tab.name;
      el.addEventListener("click", () => {
        this.activeCanvas = tab.canvasId;
        this.view.selection.clear();
        this.groupCanvas.close();
        this.guard(this.refresh());
      });
      this.els.tabs.appendChild(el);
    }
  }

  // --- canvas interaction ------------------------------------------------------------

  private blockAt(wx: number, wy: number) {
    if (!this.doc) return null;
    const blocks = placeBlocks(this.doc);
    for (let i = blocks.length - 1; i >= 0; i--) {
      const block = blocks[i]!;
      const zone = hitZone(block, wx, wy);
      if (zone !== "miss") return { block, zone };
    }
    return null;
  }

  private bindCanvasEvents(): void {
    const canvas = this.els.canvas;

    canvas.addEventListener("dragover", (event) => event.preventDefault());
    canvas.addEventListener("drop", (event) => {
      event.preventDefault();
      const layerType = event.dataTransfer?.getData(LAYER_MIME) ||
        event.dataTransfer?.getData("text/plain");
      if (!layerType) return;
      const rect = canvas.getBoundingClientRect();
      const [wx, wy] = toWorld(this.view, event.clientX - rect.left,
                               event.clientY - rect.top);
      this.guard(this.mutate({
        op: "node.add",
        type: layerType,
        position: [Math.round(wx - BLOCK_W / 2), Math.round(wy - BLOCK_H / 2)],
      }));
    });

    canvas.addEventListener("mousedown", (event) => {
      if (event.button !== 0 || !this.doc) return;
      const rect = canvas.getBoundingClientRect();
      const [wx, wy] = toWorld(this.view, event.clientX - rect.left,
                               event.clientY - rect.top);
      const hit = this.blockAt(wx, wy);
      if (!hit) {
        this.pan = {
          startScreen: [event.clientX, event.clientY],
          startPan: [this.view.pan.x, this.view.pan.y],
        };
        if (!event.shiftKey && this.view.selection.size) {
          this.view.selection.clear();
          this.renderAll();
        }
        return;
      }
      if (hit.zone === "border" && hit.block.kind === "node") {
        this.view.pendingEdge = { src: hit.block.id, toX: wx, toY: wy };
        this.renderAll();
        return;
      }
      const node = this.doc.nodes.find((n) => n.id === hit.block.id);
      this.drag = {
        nodeId: hit.block.id,
        startWorld: [wx, wy],
        startPosition: node ? [...node.position] as [number, number]
                            : [hit.block.x, hit.block.y],
        moved: false,
        additive: event.shiftKey,
      };
    });

    canvas.addEventListener("mousemove", (event) => {
      const rect = canvas.getBoundingClientRect();
      const [wx, wy] = toWorld(this.view, event.clientX - rect.left,
                               event.clientY - rect.top);
      if (this.view.pendingEdge) {
        this.view.pendingEdge.toX = wx;
        this.view.pendingEdge.toY = wy;
        this.renderAll();
        return;
      }
      if (this.drag) {
        this.drag.moved = true;
        const node = this.doc?.nodes.find((n) => n.id === this.drag!.nodeId);
        if (node) {
          node.position = [
            this.drag.startPosition[0] + (wx - this.drag.startWorld[0]),
            this.drag.startPosition[1] + (wy - this.drag.startWorld[1]),
          ];
          this.renderAll();
        }
        return;
      }
      if (this.pan) {
        this.view.pan.x =
          this.pan.startPan[0] + (event.clientX - this.pan.startScreen[0]);
        this.view.pan.y =
          this.pan.startPan[1] + (event.clientY - this.pan.startScreen[1]);
        this.renderAll();
      }
    });

    canvas.addEventListener("mouseup", (event) => {
      const rect = canvas.getBoundingClientRect();
      const [wx, wy] = toWorld(this.view, event.clientX - rect.left,
                               event.clientY - rect.top);
      if (this.view.pendingEdge) {
        const pending = this.view.pendingEdge;
        this.view.pendingEdge = null;
        const hit = this.blockAt(wx, wy);
        if (hit && hit.block.kind === "node" && hit.block.id !== pending.src) {
          this.guard(this.mutate({
            op: "edge.connect", src: pending.src, dst: hit.block.id,
          }));
        } else {
          this.renderAll(); // released on empty canvas: cancel, no request
        }
        return;
      }
      if (this.drag) {
        const drag = this.drag;
        this.drag = null;
        if (drag.moved) {
          const node = this.doc?.nodes.find((n) => n.id === drag.nodeId);
          if (node) {
            this.guard(this.mutate({
              op: "node.update",
              nodeId: drag.nodeId,
              position: [Math.round(node.position[0]),
                         Math.round(node.position[1])],
            }));
          }
        } else {
          if (!drag.additive) this.view.selection.clear();
          if (this.view.selection.has(drag.nodeId) && drag.additive) {
            this.view.selection.delete(drag.nodeId);
          } else {
            this.view.selection.add(drag.nodeId);
          }
          this.renderAll();
        }
        return;
      }
      this.pan = null;
      void event;
    });

    canvas.addEventListener("dblclick", (event) => {
      const rect = canvas.getBoundingClientRect();
      const [wx, wy] = toWorld(this.view, event.clientX - rect.left,
                               event.clientY - rect.top);
      const hit = this.blockAt(wx, wy);
      if (hit && hit.block.kind === "group") {
        this.groupCanvas.open(hit.block.id);
        this.renderAll();
      }
    });

    canvas.addEventListener("wheel", (event) => {
      event.preventDefault();
      const factor = event.deltaY < 0 ? 1.1 : 1 / 1.1;
      this.view.zoom = Math.min(2.5, Math.max(0.25, this.view.zoom * factor));
      this.renderAll();
    }, { passive: false });
  }

  /** Detach document-level listeners (tests create many app instances). */
  dispose(): void {
    if (this.keyHandler) {
      document.removeEventListener("keydown", this.keyHandler);
      this.keyHandler = null;
    }
  }

  private bindKeyboard(): void {
    this.keyHandler = (event) => {
      const target = event.target as HTMLElement | null;
      if (target && ["INPUT", "SELECT", "TEXTAREA"].includes(target.tagName)) {
        return;
      }
      const ctrl = event.ctrlKey || event.metaKey;
      if (ctrl && event.key.toLowerCase() === "z" && !event.shiftKey) {
        event.preventDefault();
        this.guard(this.undo());
      } else if (ctrl && event.key.toLowerCase() === "z" && event.shiftKey) {
        event.preventDefault();
        this.guard(this.redo());
      } else if (event.key === "Delete" || event.key === "Backspace") {
        event.preventDefault();
        this.guard(this.deleteSelection());
      } else if (ctrl && event.key.toLowerCase() === "a") {
        event.preventDefault();
        if (this.doc) {
          this.view.selection = new Set(placeBlocks(this.doc).map((b) => b.id));
          this.renderAll();
        }
      }
    };
    document.addEventListener("keydown", this.keyHandler);
  }

  /** Background refresh via the long-poll revision endpoint. */
  startPolling(): () => void {
    let stopped = false;
    const controller = new AbortController();
    const loop = async () => {
      while (!stopped) {
        if (!this.activeCanvas) {
          await new Promise((resolve) => setTimeout(resolve, 250));
          continue;
        }
        try {
          const result = await this.api.pollRevision(
            this.activeCanvas, this.revision, 25, controller.signal);
          if (!stopped && result.revision !== this.revision) {
            await this.refresh();
          }
        } catch {
          await new Promise((resolve) => setTimeout(resolve, 1000));
        }
      }
    };
    void loop();
    return () => {
      stopped = true;
      controller.abort();
    };
  }

  /** Value updates coming from the Node Editor run through here. */
  async updateParams(nodeId: string,
                     params: Record<string, ParamValue>): Promise<void> {
    await this.mutate({ op: "node.update", nodeId, params });
  }
}
