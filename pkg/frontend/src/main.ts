import { App } from "./app.js";

function need(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id} in index.html`);
  return el;
}

const app = new App({
  tree: need("tree"),
  evidence: need("evidence"),
  queue: need("queue"),
  status: need("status"),
});

void app.start();

// handy for poking around from the browser console
(window as unknown as Record<string, unknown>).reviewApp = app;
