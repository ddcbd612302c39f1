// The UI acceptance round-trip, against the real service: accept one
// same-as, remove one relation, add one relation by driving the rendered
// DOM; verify a cycle-creating add renders the rejection path; then restart
// the service (which replays the edit log over the base ontology) and check
// the served ontology is byte-for-byte the one the session ended with.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { App } from "../src/app.js";
import { panes, until } from "./helpers.js";

const HELPER = resolve(__dirname, "serve_fixture.py");

interface Service {
  proc: ChildProcess;
  port: number;
  out: string;
}

function startService(dir: string, resume: boolean): Promise<Service> {
  return new Promise((resolvePromise, reject) => {
    const args = [HELPER, "--dir", dir, ...(resume ? ["--resume"] : [])];
    const proc = spawn("python3", args, { stdio: ["ignore", "pipe", "pipe"] });
    let buffer = "";
    let stderr = "";
    proc.stderr!.on("data", (chunk) => (stderr += String(chunk)));
    proc.stdout!.on("data", (chunk) => {
      buffer += String(chunk);
      const line = buffer.split("\n")[0];
      if (line) {
        const info = JSON.parse(line) as { port: number; out: string };
        resolvePromise({ proc, port: info.port, out: info.out });
      }
    });
    proc.on("exit", (code) => reject(new Error(`service exited ${code}: ${stderr}`)));
    setTimeout(() => reject(new Error(`service start timeout: ${stderr}`)), 45_000);
  });
}

function stopService(service: Service): Promise<void> {
  return new Promise((resolvePromise) => {
    service.proc.removeAllListeners("exit");
    service.proc.on("exit", () => resolvePromise());
    service.proc.kill("SIGTERM");
  });
}

async function rawOntology(port: number): Promise<string> {
  const resp = await fetch(`http://127.0.0.1:${port}/ontology`);
  return await resp.text();
}

describe("UI round-trip against a live service", () => {
  let dir: string;
  let service: Service;
  let app: App;

  beforeAll(async () => {
    dir = mkdtempSync(join(tmpdir(), "ontogen-ui-"));
    service = await startService(dir, false);
    app = new App(panes(), `http://127.0.0.1:${service.port}`);
    await app.start();
  });

  afterAll(async () => {
    if (service) await stopService(service);
    rmSync(dir, { recursive: true, force: true });
  });

  it("renders the built ontology with the root's children", () => {
    const root = app.el.tree.querySelector('[data-label="security"]');
    expect(root).not.toBeNull();
    expect(root!.querySelector(".child-count")!.textContent).toBe("3");
    expect(app.el.tree.querySelector('[data-label="cryptography"]')).not.toBeNull();
  });

  it("accepts one same-as pair through the queue pane", async () => {
    expect(app.queueItems).toHaveLength(1);
    (app.el.queue.querySelector("#queue-accept") as HTMLButtonElement).click();
    await until(() => app.queueItems.length === 0);
    // read-your-writes: the merged alternative label is in the new snapshot
    expect(app.snapshot["firewall"]["alternative-label"]).toContain("packet filter");
  });

  it("removes one relation through the evidence pane", async () => {
    (app.el.tree.querySelector('[data-label="network defense"] .node-label') as HTMLElement).click();
    const row = [...app.el.evidence.querySelectorAll("table.subtopic tr")].find((tr) =>
      tr.textContent!.includes("firewall"),
    )!;
    (row.querySelector(".remove-edge") as HTMLButtonElement).click();
    await until(() => !app.snapshot["network defense"].subtopic.includes("firewall"));
    expect(app.audit!.edits_applied).toBe(2);
  });

  it("adds one relation through the evidence pane", async () => {
    (app.el.tree.querySelector('[data-label="cryptography"] .node-label') as HTMLElement).click();
    await until(() => app.state.selected === "cryptography");
    const input = app.el.evidence.querySelector("#add-child-input") as HTMLInputElement;
    input.value = "firewall";
    (app.el.evidence.querySelector("#add-relation-button") as HTMLButtonElement).click();
    await until(() => app.snapshot["cryptography"].subtopic.includes("firewall"));
    expect(app.audit!.edits_applied).toBe(3);
  });

  it("renders the rejection path of a cycle-creating add", async () => {
    (app.el.tree.querySelector('[data-label="encryption"] .node-label') as HTMLElement).click();
    await until(() => app.state.selected === "encryption");
    const input = app.el.evidence.querySelector("#add-child-input") as HTMLInputElement;
    input.value = "security";
    (app.el.evidence.querySelector("#add-relation-button") as HTMLButtonElement).click();
    await until(
      () => (app.el.evidence.querySelector("#edit-error")?.textContent ?? "").includes("cycle"),
    );
    const error = app.el.evidence.querySelector("#edit-error")!;
    expect(error.textContent).toContain("would create cycle");
    const path = error.querySelector(".cycle-path")!.textContent!;
    expect(path).toContain("encryption");
    expect(path).toContain("security");
    const marked = app.el.tree.querySelectorAll(".cycle-member");
    expect(marked.length).toBeGreaterThanOrEqual(3);
    // the rejected edit changed nothing server-side
    expect(app.audit!.edits_applied).toBe(3);
  });

  it("replaying the edit log reproduces the final ontology byte-for-byte", async () => {
    const before = await rawOntology(service.port);
    await stopService(service);
    service = await startService(dir, true); // fresh process: base + replay(log)
    const after = await rawOntology(service.port);
    expect(after).toBe(before);
    const edits = await (await fetch(`http://127.0.0.1:${service.port}/edits`)).json();
    expect(edits).toHaveLength(3);
  });
});
