// Evidence pane: everything the service knows about the selected topic,
// displayed verbatim, plus the edit actions. All numbers come from the
// audit view; the pane computes nothing itself.

import type { AuditView, OntologySnapshot } from "./api.js";
import type { TreeViewState } from "./state.js";

export interface EvidenceHandlers {
  onRemoveRelation(parent: string, child: string): void;
  onAddRelation(parent: string, child: string): void;
  onDiscardTopic(topic: string): void;
  onDiscardAltLabel(topic: string, label: string): void;
}

export function renderEvidence(
  container: HTMLElement,
  snapshot: OntologySnapshot,
  audit: AuditView | null,
  state: TreeViewState,
  handlers: EvidenceHandlers,
): void {
  container.textContent = "";
  const label = state.selected;
  if (!label || !(label in snapshot)) {
    const hint = document.createElement("p");
    hint.className = "empty-state";
    hint.textContent = "Select a topic in the tree to inspect its evidence.";
    container.appendChild(hint);
    return;
  }
  const node = snapshot[label];

  const title = document.createElement("h2");
  title.textContent = node.main_label;
  container.appendChild(title);

  const df = audit?.doc_freq?.[label];
  const meta = document.createElement("p");
  meta.className = "node-meta";
  meta.textContent =
    `document frequency: ${df ?? "n/a"} · parents: ${node.supertopic.length} · ` +
    `children: ${node.subtopic.length}`;
  container.appendChild(meta);

  if (node["alternative-label"].length > 0) {
    const altList = document.createElement("ul");
    altList.className = "alt-list";
    for (const alt of node["alternative-label"]) {
      const item = document.createElement("li");
      item.textContent = alt + " ";
      const drop = document.createElement("button");
      drop.className = "discard-alt";
      drop.textContent = "discard label";
      drop.onclick = () => handlers.onDiscardAltLabel(label, alt);
      item.appendChild(drop);
      altList.appendChild(item);
    }
    container.appendChild(altList);
  }

  container.appendChild(relationTable(label, node.supertopic, "supertopic", snapshot, audit, handlers));
  container.appendChild(relationTable(label, node.subtopic, "subtopic", snapshot, audit, handlers));

  const addForm = document.createElement("div");
  addForm.className = "add-relation";
  const childInput = document.createElement("input");
  childInput.placeholder = "new child topic";
  childInput.id = "add-child-input";
  const addButton = document.createElement("button");
  addButton.id = "add-relation-button";
  addButton.textContent = `add child under "${label}"`;
  addButton.onclick = () => handlers.onAddRelation(label, childInput.value.trim());
  addForm.appendChild(childInput);
  addForm.appendChild(addButton);
  container.appendChild(addForm);

  const discard = document.createElement("button");
  discard.id = "discard-topic-button";
  discard.textContent = "discard this topic";
  discard.onclick = () => handlers.onDiscardTopic(label);
  container.appendChild(discard);

  const error = document.createElement("p");
  error.id = "edit-error";
  error.className = "edit-error";
  container.appendChild(error);
}

function relationTable(
  label: string,
  neighbors: string[],
  kind: "supertopic" | "subtopic",
  snapshot: OntologySnapshot,
  audit: AuditView | null,
  handlers: EvidenceHandlers,
): HTMLElement {
  const wrap = document.createElement("div");
  const heading = document.createElement("h3");
  heading.textContent = kind === "supertopic" ? "parents" : "children";
  wrap.appendChild(heading);
  if (neighbors.length === 0) {
    const none = document.createElement("p");
    none.className = "empty-state";
    none.textContent = "none";
    wrap.appendChild(none);
    return wrap;
  }
  const table = document.createElement("table");
  table.className = `relations ${kind}`;
  const head = table.insertRow();
  for (const col of ["topic", "occ_a", "occ_b", "coocc", "subsumption", "lm class", ""]) {
    const th = document.createElement("th");
    th.textContent = col;
    head.appendChild(th);
  }
  for (const other of [...neighbors].sort()) {
    const row = table.insertRow();
    row.insertCell().textContent = other;
    const key = kind === "supertopic" ? `${other}\t${label}` : `${label}\t${other}`;
    const ev = audit?.pair_evidence?.[key];
    row.insertCell().textContent = ev ? String(ev.occ_a) : "–";
    row.insertCell().textContent = ev ? String(ev.occ_b) : "–";
    row.insertCell().textContent = ev ? String(ev.coocc_ab) : "–";
    row.insertCell().textContent = ev ? ev.subsumption.toFixed(4) : "–";
    row.insertCell().textContent = ev?.lm_class ?? "–";
    const actions = row.insertCell();
    const remove = document.createElement("button");
    remove.className = "remove-edge";
    remove.textContent = "remove";
    const [parent, child] = kind === "supertopic" ? [other, label] : [label, other];
    remove.onclick = () => handlers.onRemoveRelation(parent, child);
    actions.appendChild(remove);
  }
  wrap.appendChild(table);
  return wrap;
}

export function showEditError(container: HTMLElement, message: string, detail?: unknown): void {
  const error = container.querySelector<HTMLElement>("#edit-error");
  if (!error) return;
  error.textContent = message;
  if (Array.isArray(detail)) {
    const path = document.createElement("span");
    path.className = "cycle-path";
    path.textContent = ` ${detail.join(" → ")}`;
    error.appendChild(path);
  }
}
