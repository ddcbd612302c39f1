// Tree pane: the supertopic hierarchy as nested lists. Rendering is a pure
// function of (snapshot, view state); expanding a node never fetches
// anything because the snapshot is complete.

import type { OntologySnapshot } from "./api.js";
import { childCount, rootsOf, type TreeViewState } from "./state.js";

export interface TreeHandlers {
  onToggle(label: string): void;
  onSelect(label: string): void;
}

export function renderTree(
  container: HTMLElement,
  snapshot: OntologySnapshot,
  state: TreeViewState,
  handlers: TreeHandlers,
): void {
  container.textContent = "";
  const roots = rootsOf(snapshot);
  if (roots.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "The ontology is empty.";
    container.appendChild(empty);
    return;
  }
  container.appendChild(renderLevel(snapshot, roots, state, handlers));
}

function renderLevel(
  snapshot: OntologySnapshot,
  labels: string[],
  state: TreeViewState,
  handlers: TreeHandlers,
): HTMLUListElement {
  const list = document.createElement("ul");
  list.className = "tree-level";
  for (const label of labels) {
    list.appendChild(renderNode(snapshot, label, state, handlers));
  }
  return list;
}

function renderNode(
  snapshot: OntologySnapshot,
  label: string,
  state: TreeViewState,
  handlers: TreeHandlers,
): HTMLLIElement {
  const node = snapshot[label];
  const item = document.createElement("li");
  item.className = "tree-node";
  item.dataset.label = label;

  const row = document.createElement("div");
  row.className = "tree-row";
  if (state.selected === label) row.classList.add("selected");

  const children = [...node.subtopic].sort();
  const toggle = document.createElement("button");
  toggle.className = "toggle";
  toggle.textContent = children.length === 0 ? "·" : state.expanded.has(label) ? "▾" : "▸";
  toggle.disabled = children.length === 0;
  toggle.onclick = () => handlers.onToggle(label);
  row.appendChild(toggle);

  const name = document.createElement("span");
  name.className = "node-label";
  name.textContent = node.main_label;
  name.onclick = () => handlers.onSelect(label);
  row.appendChild(name);

  if (node["alternative-label"].length > 0) {
    const alts = document.createElement("span");
    alts.className = "alt-labels";
    alts.textContent = ` (${node["alternative-label"].join(", ")})`;
    row.appendChild(alts);
  }

  const count = document.createElement("span");
  count.className = "child-count";
  count.textContent = String(childCount(snapshot, label));
  row.appendChild(count);

  item.appendChild(row);
  if (children.length > 0 && state.expanded.has(label)) {
    item.appendChild(renderLevel(snapshot, children, state, handlers));
  }
  return item;
}

// Paint the cycle path a rejected add_relation came back with: the involved
// rows get a class, and the path itself is spelled out for the evidence pane.
export function highlightCyclePath(container: HTMLElement, path: string[]): void {
  container.querySelectorAll(".cycle-member").forEach((el) => {
    el.classList.remove("cycle-member");
  });
  const members = new Set(path);
  container.querySelectorAll<HTMLElement>(".tree-node").forEach((el) => {
    if (members.has(el.dataset.label ?? "")) {
      el.querySelector(".tree-row")?.classList.add("cycle-member");
    }
  });
}
