// Wires the three panes to the service. State changes follow one rule:
// POST the edit, wait for the acknowledgment, then re-fetch the snapshots
// the views render from (read-your-writes against the single-writer
// service). A rejected edit changes nothing except the inline error, and a
// cycle rejection additionally lights up the offending path in the tree.

import { ApiClient, type AuditView, type OntologySnapshot, type QueueItem } from "./api.js";
import { renderEvidence, showEditError } from "./evidence.js";
import { renderQueue, showQueueError } from "./queue.js";
import {
  emptyState,
  initialExpanded,
  validatePending,
  type PendingEdit,
  type TreeViewState,
} from "./state.js";
import { highlightCyclePath, renderTree } from "./tree.js";

export interface AppElements {
  tree: HTMLElement;
  evidence: HTMLElement;
  queue: HTMLElement;
  status: HTMLElement;
}

export class App {
  readonly api: ApiClient;
  readonly el: AppElements;
  state: TreeViewState = emptyState();
  snapshot: OntologySnapshot = {};
  audit: AuditView | null = null;
  queueItems: QueueItem[] = [];
  busy = false;
  degraded = false;

  constructor(el: AppElements, baseUrl = "") {
    this.api = new ApiClient(baseUrl);
    this.el = el;
  }

  async start(): Promise<void> {
    await this.refresh(true);
  }

  async refresh(resetExpansion = false): Promise<void> {
    try {
      const [snapshot, queue, audit] = await Promise.all([
        this.api.ontology(),
        this.api.queue(),
        this.api.audit(),
      ]);
      this.snapshot = snapshot;
      this.queueItems = queue;
      this.audit = audit;
      this.degraded = false;
      if (resetExpansion) this.state.expanded = initialExpanded(snapshot);
      if (this.state.selected && !(this.state.selected in snapshot)) {
        this.state.selected = null;
      }
      if (this.state.queueCursor >= queue.length) this.state.queueCursor = 0;
    } catch (err) {
      this.degraded = true;
      this.renderStatus(err instanceof Error ? err.message : String(err));
      return;
    }
    this.renderAll();
  }

  renderAll(): void {
    this.renderStatus();
    renderTree(this.el.tree, this.snapshot, this.state, {
      onToggle: (label) => {
        if (this.state.expanded.has(label)) this.state.expanded.delete(label);
        else this.state.expanded.add(label);
        this.renderAll();
      },
      onSelect: (label) => {
        this.state.selected = label;
        this.renderAll();
      },
    });
    renderEvidence(this.el.evidence, this.snapshot, this.audit, this.state, {
      onRemoveRelation: (parent, child) =>
        void this.submit({ kind: "remove_relation", payload: { parent, child } }),
      onAddRelation: (parent, child) =>
        void this.submit({ kind: "add_relation", payload: { parent, child } }),
      onDiscardTopic: (topic) =>
        void this.submit({ kind: "discard_topic", payload: { topic } }),
      onDiscardAltLabel: (topic, label) =>
        void this.submit({ kind: "discard_alt_label", payload: { topic, label } }),
    });
    renderQueue(this.el.queue, this.queueItems, this.state.queueCursor, this.busy, {
      onDecide: (item, accept) => void this.decide(item, accept),
    });
  }

  renderStatus(problem?: string): void {
    this.el.status.textContent = "";
    if (this.degraded) {
      const warning = document.createElement("span");
      warning.className = "degraded";
      warning.textContent = `service unreachable${problem ? `: ${problem}` : ""} `;
      const retry = document.createElement("button");
      retry.id = "retry-button";
      retry.textContent = "retry";
      retry.onclick = () => void this.refresh();
      this.el.status.appendChild(warning);
      this.el.status.appendChild(retry);
      return;
    }
    const counts = document.createElement("span");
    const topics = Object.keys(this.snapshot).length;
    const applied = this.audit?.edits_applied ?? 0;
    counts.textContent = `${topics} topics · ${this.queueItems.length} queued pairs · ${applied} edits applied`;
    this.el.status.appendChild(counts);
  }

  // Every mutation funnels through here: client-side sanity check, POST,
  // then a full re-fetch on acknowledgment.
  async submit(pending: PendingEdit): Promise<void> {
    if (this.busy) return;
    this.state.pendingEdit = pending;
    const problem = validatePending(this.snapshot, pending);
    if (problem) {
      showEditError(this.el.evidence, problem);
      return;
    }
    this.busy = true;
    try {
      const response = await this.api.submitEdit(pending.kind, pending.payload);
      this.busy = false;
      if (response.result === "applied") {
        this.state.pendingEdit = null;
        await this.refresh();
        return;
      }
      showEditError(this.el.evidence, `rejected: ${response.reason ?? "unknown"}`, response.detail);
      if (response.reason === "would create cycle" && Array.isArray(response.detail)) {
        highlightCyclePath(this.el.tree, response.detail as string[]);
      }
    } catch (err) {
      this.busy = false;
      this.degraded = true;
      this.renderStatus(err instanceof Error ? err.message : String(err));
    }
  }

  async decide(item: QueueItem, accept: boolean): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    this.renderAll();
    try {
      const response = await this.api.submitEdit("resolve_same_as", {
        label_a: item.label_a,
        label_b: item.label_b,
        accept,
      });
      this.busy = false;
      if (response.result === "applied") {
        await this.refresh();
        return;
      }
      this.renderAll();
      showQueueError(this.el.queue, `rejected: ${response.reason ?? "unknown"}`);
    } catch (err) {
      this.busy = false;
      this.degraded = true;
      this.renderStatus(err instanceof Error ? err.message : String(err));
    }
  }
}
