// View state and the pure helpers behind the three panes. Nothing in here
// changes ontology data; pending edits are only validated for obvious
// mistakes before they are sent to the service, which has the final word.

import type { OntologySnapshot } from "./api.js";

export interface PendingEdit {
  kind: "add_relation" | "remove_relation" | "discard_topic" | "discard_alt_label";
  payload: Record<string, unknown>;
}

export interface TreeViewState {
  expanded: Set<string>;
  selected: string | null;
  pendingEdit: PendingEdit | null;
  queueCursor: number;
}

export function emptyState(): TreeViewState {
  return { expanded: new Set(), selected: null, pendingEdit: null, queueCursor: 0 };
}

export function rootsOf(snapshot: OntologySnapshot): string[] {
  return Object.keys(snapshot)
    .filter((label) => snapshot[label].supertopic.length === 0)
    .sort();
}

export function childCount(snapshot: OntologySnapshot, label: string): number {
  return snapshot[label]?.subtopic.length ?? 0;
}

export function depthOf(snapshot: OntologySnapshot, label: string): number {
  // shortest distance from any root; the snapshot is acyclic by contract
  let depth = 0;
  let frontier = new Set(rootsOf(snapshot));
  const seen = new Set(frontier);
  while (frontier.size > 0) {
    if (frontier.has(label)) return depth;
    const next = new Set<string>();
    for (const node of frontier) {
      for (const child of snapshot[node].subtopic) {
        if (!seen.has(child)) {
          seen.add(child);
          next.add(child);
        }
      }
    }
    frontier = next;
    depth += 1;
  }
  return depth;
}

// Large snapshots start with everything deeper than two levels collapsed;
// small ones are fully expanded.
export const EXPAND_ALL_LIMIT = 50;

export function initialExpanded(snapshot: OntologySnapshot): Set<string> {
  const labels = Object.keys(snapshot);
  if (labels.length <= EXPAND_ALL_LIMIT) return new Set(labels);
  const expanded = new Set<string>();
  let frontier = rootsOf(snapshot);
  for (let depth = 0; depth < 2; depth += 1) {
    const next: string[] = [];
    for (const label of frontier) {
      expanded.add(label);
      next.push(...snapshot[label].subtopic);
    }
    frontier = next;
  }
  return expanded;
}

export function validatePending(
  snapshot: OntologySnapshot,
  pending: PendingEdit,
): string | null {
  const p = pending.payload as Record<string, string>;
  switch (pending.kind) {
    case "add_relation": {
      if (!p.parent || !p.child) return "parent and child are required";
      if (!(p.parent in snapshot)) return `unknown topic: ${p.parent}`;
      if (!(p.child in snapshot)) return `unknown topic: ${p.child}`;
      if (p.parent === p.child) return "a topic cannot be its own parent";
      if (snapshot[p.parent].subtopic.includes(p.child)) return "edge already exists";
      return null;
    }
    case "remove_relation": {
      if (!(p.parent in snapshot) || !(p.child in snapshot)) return "unknown topic";
      if (!snapshot[p.parent].subtopic.includes(p.child)) return "edge does not exist";
      return null;
    }
    case "discard_topic":
      return p.topic in snapshot ? null : `unknown topic: ${p.topic}`;
    case "discard_alt_label": {
      if (!(p.topic in snapshot)) return `unknown topic: ${p.topic}`;
      if (!snapshot[p.topic]["alternative-label"].includes(p.label))
        return "not an alternative label of this topic";
      return null;
    }
  }
}
