// Typed client for the review service. The UI talks to the service and to
// nothing else; it never computes or mutates ontology state on its own.

export interface OntologyNode {
  main_label: string;
  supertopic: string[];
  subtopic: string[];
  "alternative-label": string[];
}

export type OntologySnapshot = Record<string, OntologyNode>;

export interface QueueItem {
  label_a: string;
  label_b: string;
  acronym_ok: boolean;
  similarity: number | null;
  status: string;
}

export interface PairEvidence {
  occ_a: number;
  occ_b: number;
  coocc_ab: number;
  subsumption: number;
  lm_class: string | null;
}

export interface AuditView {
  build: Record<string, unknown>;
  edits_applied: number;
  queue_pending: number;
  queue_resolved: QueueItem[];
  doc_freq: Record<string, number>;
  pair_evidence: Record<string, PairEvidence>;
}

export interface EditRecord {
  edit_id: number;
  kind: string;
  payload: Record<string, unknown>;
  timestamp: string;
  author: string;
}

export interface EditResponse {
  status: number;
  result: "applied" | "rejected";
  reason?: string;
  detail?: unknown;
  edit?: EditRecord;
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    if (!resp.ok) throw new Error(`GET ${path} -> ${resp.status}`);
    return (await resp.json()) as T;
  }

  ontology(): Promise<OntologySnapshot> {
    return this.getJson<OntologySnapshot>("/ontology");
  }

  queue(): Promise<QueueItem[]> {
    return this.getJson<QueueItem[]>("/queue");
  }

  audit(): Promise<AuditView> {
    return this.getJson<AuditView>("/audit");
  }

  edits(): Promise<EditRecord[]> {
    return this.getJson<EditRecord[]>("/edits");
  }

  // A 409 is a normal answer (the service refused the edit), not an error.
  async submitEdit(
    kind: string,
    payload: Record<string, unknown>,
    author = "ui expert",
  ): Promise<EditResponse> {
    const resp = await fetch(this.baseUrl + "/edits", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ kind, payload, author }),
    });
    const body = (await resp.json()) as Omit<EditResponse, "status">;
    return { status: resp.status, ...body };
  }

  async exportCurated(): Promise<Record<string, string>> {
    const resp = await fetch(this.baseUrl + "/export", { method: "POST" });
    if (!resp.ok) throw new Error(`POST /export -> ${resp.status}`);
    return (await resp.json()) as Record<string, string>;
  }
}
