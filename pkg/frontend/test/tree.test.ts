import { describe, expect, it } from "vitest";

import { emptyState, initialExpanded } from "../src/state.js";
import { highlightCyclePath, renderTree } from "../src/tree.js";
import { chainSnapshot, makeSnapshot, panes } from "./helpers.js";

function renderInto(snapshot: ReturnType<typeof makeSnapshot>, expandAll = true) {
  const { tree } = panes();
  const state = emptyState();
  state.expanded = expandAll ? new Set(Object.keys(snapshot)) : initialExpanded(snapshot);
  const events: string[] = [];
  renderTree(tree, snapshot, state, {
    onToggle: (label) => events.push(`toggle:${label}`),
    onSelect: (label) => events.push(`select:${label}`),
  });
  return { tree, state, events };
}

describe("renderTree", () => {
  it("shows main label, alternative labels and child count", () => {
    const snapshot = makeSnapshot(
      [["security", "cryptography"], ["security", "cyber defense"]],
      { cryptography: ["crypto"] },
    );
    const { tree } = renderInto(snapshot);
    const root = tree.querySelector('[data-label="security"]')!;
    expect(root.querySelector(".node-label")!.textContent).toBe("security");
    expect(root.querySelector(".child-count")!.textContent).toBe("2");
    const crypto = tree.querySelector('[data-label="cryptography"]')!;
    expect(crypto.querySelector(".alt-labels")!.textContent).toContain("crypto");
  });

  it("renders an empty-state message for an empty ontology", () => {
    const { tree } = panes();
    renderTree(tree, {}, emptyState(), { onToggle() {}, onSelect() {} });
    expect(tree.querySelector(".empty-state")).not.toBeNull();
  });

  it("collapsed nodes do not render their subtrees", () => {
    const snapshot = chainSnapshot(9, 2); // >= 1000 nodes
    const { tree } = renderInto(snapshot, false);
    // depths 0..2 visible: 1 + 2 + 4 rows
    expect(tree.querySelectorAll(".tree-node").length).toBe(7);
  });

  it("click handlers fire select and toggle", () => {
    const snapshot = makeSnapshot([["a", "b"]]);
    const { tree, events } = renderInto(snapshot);
    (tree.querySelector('[data-label="a"] .node-label') as HTMLElement).click();
    (tree.querySelector('[data-label="a"] .toggle') as HTMLElement).click();
    expect(events).toEqual(["select:a", "toggle:a"]);
  });

  it("highlightCyclePath marks exactly the involved rows", () => {
    const snapshot = makeSnapshot([["a", "b"], ["b", "c"]]);
    const { tree } = renderInto(snapshot);
    highlightCyclePath(tree, ["a", "b", "a"]);
    const marked = [...tree.querySelectorAll(".cycle-member")].map(
      (el) => (el.parentElement as HTMLElement).dataset.label,
    );
    expect(marked.sort()).toEqual(["a", "b"]);
  });
});
