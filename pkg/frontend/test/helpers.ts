import type { OntologySnapshot } from "../src/api.js";

export function makeSnapshot(
  edges: Array<[string, string]>,
  alts: Record<string, string[]> = {},
): OntologySnapshot {
  const snapshot: OntologySnapshot = {};
  const ensure = (label: string) => {
    if (!snapshot[label]) {
      snapshot[label] = {
        main_label: label,
        supertopic: [],
        subtopic: [],
        "alternative-label": alts[label] ?? [],
      };
    }
    return snapshot[label];
  };
  for (const [parent, child] of edges) {
    ensure(parent).subtopic.push(child);
    ensure(child).supertopic.push(parent);
  }
  for (const label of Object.keys(alts)) ensure(label);
  return snapshot;
}

export function chainSnapshot(depth: number, fanout = 1): OntologySnapshot {
  // a deep synthetic tree: root -> level1 -> ... ; used for the rendering
  // budget rule
  const edges: Array<[string, string]> = [];
  let level = ["n0"];
  let counter = 1;
  for (let d = 1; d <= depth; d += 1) {
    const next: string[] = [];
    for (const parent of level) {
      for (let i = 0; i < fanout; i += 1) {
        const child = `n${counter++}`;
        edges.push([parent, child]);
        next.push(child);
      }
    }
    level = next;
  }
  return makeSnapshot(edges);
}

export async function until(
  check: () => boolean,
  timeoutMs = 10_000,
  stepMs = 25,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
  throw new Error("condition not reached in time");
}

export function panes(): { tree: HTMLElement; evidence: HTMLElement; queue: HTMLElement; status: HTMLElement } {
  document.body.innerHTML =
    '<div id="status"></div><div id="tree"></div><div id="evidence"></div><div id="queue"></div>';
  return {
    tree: document.getElementById("tree")!,
    evidence: document.getElementById("evidence")!,
    queue: document.getElementById("queue")!,
    status: document.getElementById("status")!,
  };
}
