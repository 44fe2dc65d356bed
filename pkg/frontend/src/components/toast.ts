// Error toasts. Every message shown here is the server's ApiError text;
// the UI adds nothing of its own.

import { ApiError } from "../api";

export class Toaster {
  constructor(private readonly container: HTMLElement,
              private readonly ttlMs = 4000) {}

  error(error: unknown): void {
    const message = error instanceof ApiError
      ? error.message
      : error instanceof Error ? error.message : String(error);
    const toast = document.createElement("div");
    toast.className = "toast";
    toast.setAttribute("role", "alert");
    toast.textContent = message;
    this.container.appendChild(toast);
    setTimeout(() => toast.remove(), this.ttlMs);
  }
}
