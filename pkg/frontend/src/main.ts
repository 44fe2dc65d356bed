import { ApiClient } from "./api";
import { App, AppElements } from "./app";

function el(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing region #${id}`);
  return found;
}

const elements: AppElements = {
  tabs: el("tabs"),
  menu: el("menu"),
  toolbox: el("toolbox"),
  canvas: el("canvas"),
  textEditor: el("text-editor"),
  groupCanvas: el("group-canvas"),
  nodeEditor: el("node-editor"),
  tree: el("tree"),
  toasts: el("toasts"),
};

const app = new App(new ApiClient(""), elements);
app.boot()
  .then(() => app.startPolling())
  .catch((error) => app.toaster.error(error));

declare global {
  interface Window { sketchApp: App }
}
window.sketchApp = app;
