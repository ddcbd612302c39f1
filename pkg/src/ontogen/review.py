"""Expert-review service: snapshot reads, transactional edits, replayable log.

State model: a base ontology (the build stage's output) plus an append-only
edit log. Every edit is validated against the full invariant suite on a
working copy, appended to the log (flushed and fsynced) and only then
applied, so an acknowledged edit survives any crash and
replay(log, base) == current state always holds.

Reads are lock-free: each applied edit atomically swaps a set of
pre-serialized view snapshots, so a concurrent reader sees a consistent
pre- or post-edit state, never a partial one. Writes are serialized through
a single lock, in arrival order.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .builder import FLAGGED, elect_main_label
from .errors import EditRejected, ReplayError, ServiceNotReadyError
from .ontology import (
    Ontology,
    OntologyNode,
    PROVENANCE_EXPERT,
    export_cso_triples,
    ontology_digest,
    parse_ontology,
    serialize_ontology,
    validate_ontology,
)

EDIT_KINDS = {
    "add_relation": {"parent", "child"},
    "remove_relation": {"parent", "child"},
    "discard_topic": {"topic"},
    "discard_alt_label": {"topic", "label"},
    "resolve_same_as": {"label_a", "label_b", "accept"},
}


@dataclass(frozen=True)
class ExpertEdit:
    edit_id: int
    kind: str
    payload: dict
    timestamp: str
    author: str

    def to_dict(self) -> dict:
        return {
            "edit_id": self.edit_id,
            "kind": self.kind,
            "payload": self.payload,
            "timestamp": self.timestamp,
            "author": self.author,
        }


def validate_edit_shape(kind: str, payload: dict) -> None:
    if kind not in EDIT_KINDS:
        raise EditRejected(f"unknown edit kind: {kind!r}")
    required = EDIT_KINDS[kind]
    if set(payload) != required:
        raise EditRejected(
            f"payload for {kind} must have exactly the keys {sorted(required)}"
        )


@dataclass
class QueueItem:
    label_a: str
    label_b: str
    acronym_ok: bool
    similarity: float | None
    status: str  # flagged_for_review | accepted | discarded

    def pair(self) -> tuple[str, str]:
        return (self.label_a, self.label_b)

    def to_dict(self) -> dict:
        return {
            "label_a": self.label_a,
            "label_b": self.label_b,
            "acronym_ok": self.acronym_ok,
            "similarity": self.similarity,
            "status": self.status,
        }


def _reachable(onto: Ontology, start: str, goal: str) -> list[str] | None:
    """Path start -> ... -> goal along subtopic edges, or None."""
    stack = [(start, [start])]
    seen = {start}
    while stack:
        node, path = stack.pop()
        if node == goal:
            return path
        for child in sorted(onto.nodes[node].subtopic, reverse=True):
            if child not in seen:
                seen.add(child)
                stack.append((child, path + [child]))
    return None


class ReviewState:
    """Single-writer review session over a built ontology."""

    def __init__(
        self,
        base: Ontology,
        queue: list[QueueItem] | None = None,
        doc_freq: dict[str, int] | None = None,
        audit: dict | None = None,
        log_path: str | Path | None = None,
        pair_evidence: dict[str, dict] | None = None,
    ):
        self.base = base.copy()
        self.base_digest = ontology_digest(base)
        self.current = base.copy()
        self.queue = list(queue or [])
        self.doc_freq = dict(doc_freq or {})
        self.audit = dict(audit or {})
        self.pair_evidence = dict(pair_evidence or {})
        self.log_path = Path(log_path) if log_path else None
        self.edits: list[ExpertEdit] = []
        self._lock = threading.Lock()
        self._crash_hook = lambda: None  # test seam: raises between log append and apply
        self._views: dict[str, str] = {}
        self._refresh_views()
        if self.log_path and self.log_path.is_file():
            self._replay_existing_log()

    # -- artifacts ----------------------------------------------------------

    @classmethod
    def from_artifacts(cls, out_dir: str | Path) -> "ReviewState":
        out_dir = Path(out_dir)
        onto_path = out_dir / "ontology.json"
        if not onto_path.is_file():
            raise ServiceNotReadyError(f"no built ontology at {onto_path}")
        base = parse_ontology(onto_path.read_text(encoding="utf-8"))
        queue = []
        verdicts_path = out_dir / "verdicts.tsv"
        if verdicts_path.is_file():
            for line in verdicts_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                a, b, acr, sim, status = line.split("\t")
                if status == FLAGGED:
                    queue.append(
                        QueueItem(a, b, bool(int(acr)), float(sim) if sim else None, FLAGGED)
                    )
        doc_freq = {}
        df_path = out_dir / "labels_df.tsv"
        if df_path.is_file():
            for line in df_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    label, df = line.rsplit("\t", 1)
                    doc_freq[label] = int(df)
        audit = {}
        audit_path = out_dir / "audit.json"
        if audit_path.is_file():
            audit = json.loads(audit_path.read_text(encoding="utf-8"))
        pair_evidence = {}
        features_path = out_dir / "features.tsv"
        if features_path.is_file():
            from .features import read_feature_dump

            for a, b, numeric, lm in read_feature_dump(features_path):
                pair_evidence[f"{a}\t{b}"] = {
                    "occ_a": numeric[0],
                    "occ_b": numeric[1],
                    "coocc_ab": numeric[2],
                    "subsumption": numeric[3],
                    "lm_class": lm.value if lm else None,
                }
        return cls(
            base,
            queue=queue,
            doc_freq=doc_freq,
            audit=audit,
            log_path=out_dir / "edits.jsonl",
            pair_evidence=pair_evidence,
        )

    # -- log ------------------------------------------------------------------

    def _replay_existing_log(self) -> None:
        lines = self.log_path.read_text(encoding="utf-8").splitlines()
        if not lines:
            return
        header = json.loads(lines[0])
        if header.get("base_ontology_digest") != self.base_digest:
            raise ReplayError(
                "edit log was recorded over a different base ontology "
                f"({header.get('base_ontology_digest')!r} != {self.base_digest!r})"
            )
        for line in lines[1:]:
            if not line.strip():
                continue
            doc = json.loads(line)
            edit = ExpertEdit(
                doc["edit_id"], doc["kind"], doc["payload"], doc["timestamp"], doc["author"]
            )
            try:
                self._apply_to_state(edit)
            except EditRejected as exc:
                raise ReplayError(
                    f"edit {edit.edit_id} no longer applies during replay: {exc.reason}"
                ) from exc
            self.edits.append(edit)
        self._refresh_views()

    def _append_to_log(self, edit: ExpertEdit) -> None:
        if self.log_path is None:
            return
        new_file = not self.log_path.is_file() or self.log_path.stat().st_size == 0
        with self.log_path.open("a", encoding="utf-8") as fh:
            if new_file:
                fh.write(json.dumps({"base_ontology_digest": self.base_digest}) + "\n")
            fh.write(json.dumps(edit.to_dict(), sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- views ------------------------------------------------------------------

    def _refresh_views(self) -> None:
        pending = [q.to_dict() for q in self.queue if q.status == FLAGGED]
        views = {
            "ontology": serialize_ontology(self.current),
            "queue": json.dumps(pending, sort_keys=True),
            "audit": json.dumps(
                {
                    "build": self.audit,
                    "edits_applied": len(self.edits),
                    "queue_pending": len(pending),
                    "queue_resolved": [
                        q.to_dict() for q in self.queue if q.status != FLAGGED
                    ],
                    "doc_freq": self.doc_freq,
                    "pair_evidence": self.pair_evidence,
                },
                sort_keys=True,
            ),
            "edits": json.dumps([e.to_dict() for e in self.edits], sort_keys=True),
        }
        self._views = views  # atomic reference swap

    def views(self) -> dict[str, str]:
        return self._views

    # -- edits -------------------------------------------------------------------

    def apply_edit(self, kind: str, payload: dict, author: str = "expert") -> ExpertEdit:
        """Validate, persist, then apply. Raises EditRejected (state
        untouched) when the edit does not validate."""
        with self._lock:
            validate_edit_shape(kind, payload)
            edit = ExpertEdit(
                edit_id=len(self.edits) + 1,
                kind=kind,
                payload=dict(payload),
                timestamp=datetime.now(timezone.utc).isoformat(),
                author=author,
            )
            self._validate_against_state(edit)
            self._append_to_log(edit)
            self._crash_hook()
            self._apply_to_state(edit)
            self.edits.append(edit)
            self._refresh_views()
            return edit

    def _validate_against_state(self, edit: ExpertEdit) -> None:
        """Dry-run on a scratch copy; raises EditRejected on any problem."""
        scratch = _ScratchState(self)
        scratch.apply(edit)

    def _apply_to_state(self, edit: ExpertEdit) -> None:
        applied = _ScratchState(self)
        applied.apply(edit)
        self.current = applied.onto
        self.queue = applied.queue

    def replay_check(self) -> bool:
        """replay(log, base) must equal the current state."""
        replayed = replay(
            [e for e in self.edits], self.base, self.base_digest, self.doc_freq, self.queue_base()
        )
        return serialize_ontology(replayed) == serialize_ontology(self.current)

    def queue_base(self) -> list[QueueItem]:
        return [QueueItem(q.label_a, q.label_b, q.acronym_ok, q.similarity, FLAGGED)
                for q in self.queue]


class _ScratchState:
    """Applies one edit to copies of the ontology and queue."""

    def __init__(self, state: ReviewState):
        self.onto = state.current.copy()
        self.queue = [
            QueueItem(q.label_a, q.label_b, q.acronym_ok, q.similarity, q.status)
            for q in state.queue
        ]
        self.doc_freq = state.doc_freq

    def apply(self, edit: ExpertEdit) -> None:
        handler = getattr(self, f"_apply_{edit.kind}")
        handler(edit.payload)
        problems = validate_ontology(self.onto)
        if problems:
            raise EditRejected("edit breaks ontology invariants", problems)

    def _require_topic(self, label: str) -> None:
        if label not in self.onto.nodes:
            raise EditRejected("unknown topic", label)

    def _apply_add_relation(self, payload: dict) -> None:
        parent, child = payload["parent"], payload["child"]
        self._require_topic(parent)
        self._require_topic(child)
        if parent == child:
            raise EditRejected("self-relation", parent)
        if child in self.onto.nodes[parent].subtopic:
            raise EditRejected("edge already exists", [parent, child])
        path = _reachable(self.onto, child, parent)
        if path is not None:
            raise EditRejected("would create cycle", [parent] + path)
        self.onto.nodes[parent].subtopic.append(child)
        self.onto.nodes[child].supertopic.append(parent)
        self.onto.provenance[(parent, child)] = PROVENANCE_EXPERT

    def _apply_remove_relation(self, payload: dict) -> None:
        parent, child = payload["parent"], payload["child"]
        self._require_topic(parent)
        self._require_topic(child)
        if child not in self.onto.nodes[parent].subtopic:
            raise EditRejected("edge does not exist", [parent, child])
        self.onto.nodes[parent].subtopic.remove(child)
        self.onto.nodes[child].supertopic.remove(parent)
        self.onto.provenance.pop((parent, child), None)

    def _apply_discard_topic(self, payload: dict) -> None:
        topic = payload["topic"]
        self._require_topic(topic)
        node = self.onto.nodes.pop(topic)
        for parent in node.supertopic:
            self.onto.nodes[parent].subtopic.remove(topic)
            self.onto.provenance.pop((parent, topic), None)
        for child in node.subtopic:
            self.onto.nodes[child].supertopic.remove(topic)
            self.onto.provenance.pop((topic, child), None)

    def _apply_discard_alt_label(self, payload: dict) -> None:
        topic, label = payload["topic"], payload["label"]
        self._require_topic(topic)
        if label not in self.onto.nodes[topic].alternative_label:
            raise EditRejected("not an alternative label of this topic", [topic, label])
        self.onto.nodes[topic].alternative_label.remove(label)

    def _apply_resolve_same_as(self, payload: dict) -> None:
        a, b, accept = payload["label_a"], payload["label_b"], payload["accept"]
        item = None
        for q in self.queue:
            if q.status == FLAGGED and {q.label_a, q.label_b} == {a, b}:
                item = q
                break
        if item is None:
            raise EditRejected("pair is not pending in the review queue", [a, b])
        if not accept:
            item.status = "discarded"
            return
        item.status = "accepted"
        self._merge_labels(a, b)

    def _merge_labels(self, a: str, b: str) -> None:
        """Incremental re-clustering for the affected component only.

        Each label is anchored to the node it currently belongs to (itself,
        or the cluster that absorbed it as an alternative); the anchors'
        clusters are unioned, a main label re-elected by document frequency,
        and all external edges re-targeted onto the winner."""
        nodes = self.onto.nodes
        owner = {alt: label for label, n in nodes.items() for alt in n.alternative_label}

        def anchor(label: str) -> str | None:
            return label if label in nodes else owner.get(label)

        anchors = {x for x in (anchor(a), anchor(b)) if x is not None}
        if not anchors:
            raise EditRejected("unknown topic", [a, b])

        members: set[str] = {a, b}
        for anc in anchors:
            members.add(anc)
            members.update(nodes[anc].alternative_label)
        main = elect_main_label(sorted(members), self.doc_freq)

        parents: set[str] = set()
        children: set[str] = set()
        expert_parents: set[str] = set()
        expert_children: set[str] = set()
        for anc in sorted(anchors):
            node = nodes.pop(anc)
            for p in node.supertopic:
                if p in anchors:
                    continue
                nodes[p].subtopic.remove(anc)
                parents.add(p)
                if self.onto.provenance.get((p, anc)) == PROVENANCE_EXPERT:
                    expert_parents.add(p)
            for c in node.subtopic:
                if c in anchors:
                    continue
                nodes[c].supertopic.remove(anc)
                children.add(c)
                if self.onto.provenance.get((anc, c)) == PROVENANCE_EXPERT:
                    expert_children.add(c)
        for key in [k for k in self.onto.provenance if k[0] in anchors or k[1] in anchors]:
            del self.onto.provenance[key]

        nodes[main] = OntologyNode(
            main_label=main,
            supertopic=sorted(parents),
            subtopic=sorted(children),
            alternative_label=sorted(members - {main}),
        )
        for p in parents:
            nodes[p].subtopic.append(main)
            self.onto.provenance[(p, main)] = (
                PROVENANCE_EXPERT if p in expert_parents
                else self.onto.provenance.get((p, main), "classifier")
            )
        for c in children:
            nodes[c].supertopic.append(main)
            self.onto.provenance[(main, c)] = (
                PROVENANCE_EXPERT if c in expert_children
                else self.onto.provenance.get((main, c), "classifier")
            )


def replay(
    edits: list[ExpertEdit],
    base: Ontology,
    base_digest: str | None = None,
    doc_freq: dict[str, int] | None = None,
    queue: list[QueueItem] | None = None,
) -> Ontology:
    """Deterministically reproduce the post-edit ontology. Refuses a base
    whose digest does not match; aborts (naming the edit) when a recorded
    edit no longer applies."""
    if base_digest is not None and ontology_digest(base) != base_digest:
        raise ReplayError("base ontology digest does not match the log")
    state = ReviewState(base, queue=queue, doc_freq=doc_freq, log_path=None)
    for edit in edits:
        try:
            state._validate_against_state(edit)
            state._apply_to_state(edit)
            state.edits.append(edit)
        except EditRejected as exc:
            raise ReplayError(
                f"edit {edit.edit_id} no longer applies during replay: {exc.reason}"
            ) from exc
    return state.current


def load_edit_log(path: str | Path) -> tuple[str, list[ExpertEdit]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ReplayError(f"empty edit log: {path}")
    header = json.loads(lines[0])
    edits = []
    for line in lines[1:]:
        if line.strip():
            doc = json.loads(line)
            edits.append(
                ExpertEdit(
                    doc["edit_id"], doc["kind"], doc["payload"], doc["timestamp"], doc["author"]
                )
            )
    return header["base_ontology_digest"], edits


# -- HTTP service ------------------------------------------------------------


class ReviewService:
    """Loopback JSON API over a ReviewState.

    GET /ontology /queue /audit /edits; POST /edits (one edit per request);
    POST /export (writes the curated ontology + triple export). Optionally
    serves static UI assets from ui_dir at /.
    """

    def __init__(
        self,
        state: ReviewState,
        host: str = "127.0.0.1",
        port: int = 0,
        export_dir: str | Path | None = None,
        ui_dir: str | Path | None = None,
    ):
        self.state = state
        self.export_dir = Path(export_dir) if export_dir else Path(".")
        self.ui_dir = Path(ui_dir) if ui_dir else None
        service = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send(self, status: int, body: str, content_type="application/json"):
                data = body.encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_GET(self):
                views = service.state.views()
                route = self.path.split("?")[0]
                if route == "/ontology":
                    self._send(200, views["ontology"])
                elif route == "/queue":
                    self._send(200, views["queue"])
                elif route == "/audit":
                    self._send(200, views["audit"])
                elif route == "/edits":
                    self._send(200, views["edits"])
                elif service.ui_dir is not None:
                    self._serve_static(route)
                else:
                    self._send(404, json.dumps({"error": "not found"}))

            def _serve_static(self, route: str):
                rel = route.lstrip("/") or "index.html"
                path = (service.ui_dir / rel).resolve()
                if not str(path).startswith(str(service.ui_dir.resolve())) or not path.is_file():
                    self._send(404, json.dumps({"error": "not found"}))
                    return
                types = {
                    ".html": "text/html; charset=utf-8",
                    ".js": "text/javascript; charset=utf-8",
                    ".css": "text/css; charset=utf-8",
                    ".map": "application/json",
                }
                data = path.read_bytes()
                self.send_response(200)
                self.send_header("Content-Type", types.get(path.suffix, "application/octet-stream"))
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length) if length else b"{}"
                route = self.path.split("?")[0]
                if route == "/edits":
                    self._post_edit(raw)
                elif route == "/export":
                    self._post_export()
                else:
                    self._send(404, json.dumps({"error": "not found"}))

            def _post_edit(self, raw: bytes):
                try:
                    doc = json.loads(raw.decode("utf-8"))
                except json.JSONDecodeError:
                    self._send(400, json.dumps({"result": "rejected", "reason": "bad JSON"}))
                    return
                kind = doc.get("kind", "")
                payload = doc.get("payload", {})
                author = doc.get("author", "expert")
                try:
                    edit = service.state.apply_edit(kind, payload, author)
                except EditRejected as exc:
                    self._send(
                        409,
                        json.dumps(
                            {
                                "result": "rejected",
                                "reason": exc.reason,
                                "detail": exc.detail,
                            }
                        ),
                    )
                    return
                self._send(200, json.dumps({"result": "applied", "edit": edit.to_dict()}))

            def _post_export(self):
                onto_path = service.export_dir / "curated_ontology.json"
                triples_path = service.export_dir / "curated_triples.tsv"
                views = service.state.views()
                onto_path.write_text(views["ontology"], encoding="utf-8")
                triples_path.write_text(
                    export_cso_triples(parse_ontology(views["ontology"])), encoding="utf-8"
                )
                self._send(
                    200,
                    json.dumps({"ontology": str(onto_path), "triples": str(triples_path)}),
                )

        self.server = ThreadingHTTPServer((host, port), Handler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server.server_address[:2]

    def serve_forever(self):
        self.server.serve_forever()

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        thread.start()
        return thread

    def shutdown(self):
        self.server.shutdown()
        self.server.server_close()
