import json
import random
import threading
import urllib.error
import urllib.request

import pytest

from ontogen.builder import FLAGGED
from ontogen.errors import EditRejected, ReplayError
from ontogen.ontology import (
    Ontology,
    OntologyNode,
    ontology_digest,
    parse_ontology,
    serialize_ontology,
    validate_ontology,
)
from ontogen.pipeline import PipelineConfig, run_case_study
from ontogen.review import (
    ExpertEdit,
    QueueItem,
    ReviewService,
    ReviewState,
    load_edit_log,
    replay,
)

from planted import generate


def small_ontology():
    onto = Ontology()
    labels = {
        "root": ["alpha", "beta"],
        "alpha": ["leaf"],
        "beta": [],
        "leaf": [],
    }
    for label, children in labels.items():
        onto.nodes[label] = OntologyNode(main_label=label, subtopic=list(children))
    for label, children in labels.items():
        for child in children:
            onto.nodes[child].supertopic.append(label)
            onto.provenance[(label, child)] = "classifier"
    onto.nodes["leaf"].alternative_label = ["leaf synonym"]
    return onto


def make_state(tmp_path=None, queue=None):
    log_path = tmp_path / "edits.jsonl" if tmp_path else None
    return ReviewState(
        small_ontology(),
        queue=queue or [QueueItem("beta", "leaf", False, 0.4, FLAGGED)],
        doc_freq={"root": 50, "alpha": 20, "beta": 10, "leaf": 5, "leaf synonym": 1},
        log_path=log_path,
    )


class TestEdits:
    def test_add_relation_applied(self):
        state = make_state()
        edit = state.apply_edit("add_relation", {"parent": "beta", "child": "leaf"})
        assert edit.edit_id == 1
        assert "leaf" in state.current.nodes["beta"].subtopic
        assert state.current.provenance[("beta", "leaf")] == "expert"
        assert validate_ontology(state.current) == []

    def test_add_relation_unknown_topic_rejected(self):
        state = make_state()
        with pytest.raises(EditRejected) as exc:
            state.apply_edit("add_relation", {"parent": "root", "child": "ghost"})
        assert exc.value.reason == "unknown topic"

    def test_add_relation_cycle_rejected_with_witness(self):
        state = make_state()
        with pytest.raises(EditRejected) as exc:
            state.apply_edit("add_relation", {"parent": "leaf", "child": "root"})
        assert exc.value.reason == "would create cycle"
        assert exc.value.detail == ["leaf", "root", "alpha", "leaf"]

    def test_two_cycle_rejected(self):
        state = make_state()
        with pytest.raises(EditRejected) as exc:
            state.apply_edit("add_relation", {"parent": "alpha", "child": "root"})
        assert exc.value.detail == ["alpha", "root", "alpha"]

    def test_remove_relation(self):
        state = make_state()
        state.apply_edit("remove_relation", {"parent": "root", "child": "beta"})
        assert "beta" not in state.current.nodes["root"].subtopic
        assert "root" not in state.current.nodes["beta"].supertopic

    def test_remove_missing_edge_rejected(self):
        state = make_state()
        with pytest.raises(EditRejected):
            state.apply_edit("remove_relation", {"parent": "beta", "child": "leaf"})

    def test_discard_topic_atomic(self):
        state = make_state()
        state.apply_edit("discard_topic", {"topic": "alpha"})
        assert "alpha" not in state.current.nodes
        assert "alpha" not in state.current.nodes["root"].subtopic
        assert state.current.nodes["leaf"].supertopic == []
        assert validate_ontology(state.current) == []

    def test_discard_alt_label(self):
        state = make_state()
        state.apply_edit("discard_alt_label", {"topic": "leaf", "label": "leaf synonym"})
        assert state.current.nodes["leaf"].alternative_label == []

    def test_rejected_edit_leaves_state_untouched(self):
        state = make_state()
        before = serialize_ontology(state.current)
        with pytest.raises(EditRejected):
            state.apply_edit("add_relation", {"parent": "leaf", "child": "root"})
        assert serialize_ontology(state.current) == before
        assert state.edits == []

    def test_bad_payload_shape_rejected(self):
        state = make_state()
        with pytest.raises(EditRejected):
            state.apply_edit("add_relation", {"parent": "root"})
        with pytest.raises(EditRejected):
            state.apply_edit("nonsense", {})

    def test_edit_ids_strictly_increasing(self):
        state = make_state()
        e1 = state.apply_edit("remove_relation", {"parent": "root", "child": "beta"})
        e2 = state.apply_edit("add_relation", {"parent": "root", "child": "beta"})
        assert (e1.edit_id, e2.edit_id) == (1, 2)


class TestResolveSameAs:
    def test_accept_merges_and_reelects_main(self):
        state = make_state()
        state.apply_edit(
            "resolve_same_as", {"label_a": "beta", "label_b": "leaf", "accept": True}
        )
        assert "leaf" not in state.current.nodes
        merged = state.current.nodes["beta"]  # beta has higher doc_freq
        assert "leaf" in merged.alternative_label
        assert "leaf synonym" in merged.alternative_label
        # alpha -> leaf edge re-targeted to the merged node
        assert "beta" in state.current.nodes["alpha"].subtopic
        assert validate_ontology(state.current) == []
        assert state.views()["queue"] == "[]"

    def test_reject_leaves_taxonomy_unchanged(self):
        state = make_state()
        before = serialize_ontology(state.current)
        state.apply_edit(
            "resolve_same_as", {"label_a": "beta", "label_b": "leaf", "accept": False}
        )
        assert serialize_ontology(state.current) == before
        assert state.views()["queue"] == "[]"

    def test_pair_not_in_queue_rejected(self):
        state = make_state()
        with pytest.raises(EditRejected):
            state.apply_edit(
                "resolve_same_as", {"label_a": "root", "label_b": "alpha", "accept": True}
            )

    def test_merge_creating_cycle_rejected(self):
        state = make_state(queue=[QueueItem("root", "leaf", False, 0.3, FLAGGED)])
        # merging root with leaf would make alpha both child and parent
        with pytest.raises(EditRejected):
            state.apply_edit(
                "resolve_same_as", {"label_a": "root", "label_b": "leaf", "accept": True}
            )

    def test_merge_with_brand_new_label(self):
        state = make_state(queue=[QueueItem("beta", "novel name", False, 0.2, FLAGGED)])
        state.apply_edit(
            "resolve_same_as", {"label_a": "beta", "label_b": "novel name", "accept": True}
        )
        assert state.current.nodes["beta"].alternative_label == ["novel name"]


class TestLogAndReplay:
    def test_empty_log_base_unchanged(self):
        base = small_ontology()
        assert serialize_ontology(replay([], base)) == serialize_ontology(base)

    def test_record_replay_roundtrip(self, tmp_path):
        state = make_state(tmp_path)
        state.apply_edit("remove_relation", {"parent": "root", "child": "beta"})
        state.apply_edit("add_relation", {"parent": "alpha", "child": "beta"})
        state.apply_edit(
            "resolve_same_as", {"label_a": "beta", "label_b": "leaf", "accept": False}
        )
        digest, edits = load_edit_log(tmp_path / "edits.jsonl")
        assert digest == state.base_digest
        replayed = replay(
            edits, state.base, digest, state.doc_freq, state.queue_base()
        )
        assert serialize_ontology(replayed) == serialize_ontology(state.current)

    def test_tampered_base_refused(self, tmp_path):
        state = make_state(tmp_path)
        state.apply_edit("remove_relation", {"parent": "root", "child": "beta"})
        digest, edits = load_edit_log(tmp_path / "edits.jsonl")
        tampered = small_ontology()
        tampered.nodes["extra"] = OntologyNode(main_label="extra")
        with pytest.raises(ReplayError):
            replay(edits, tampered, digest)

    def test_empty_ontology_views_are_ready(self):
        state = ReviewState(Ontology())
        views = state.views()
        assert views["ontology"] == "{}"
        assert views["queue"] == "[]"

    def test_restart_mid_triage_resumes_queue_position(self, tmp_path):
        queue = [
            QueueItem("beta", "leaf", False, 0.4, FLAGGED),
            QueueItem("alpha", "brand new", False, 0.2, FLAGGED),
        ]
        state = ReviewState(
            small_ontology(),
            queue=[QueueItem(q.label_a, q.label_b, q.acronym_ok, q.similarity, q.status) for q in queue],
            doc_freq={"root": 50, "alpha": 20, "beta": 10, "leaf": 5},
            log_path=tmp_path / "edits.jsonl",
        )
        state.apply_edit(
            "resolve_same_as", {"label_a": "beta", "label_b": "leaf", "accept": False}
        )
        resumed = ReviewState(
            small_ontology(),
            queue=queue,
            doc_freq=state.doc_freq,
            log_path=tmp_path / "edits.jsonl",
        )
        pending = json.loads(resumed.views()["queue"])
        assert [(q["label_a"], q["label_b"]) for q in pending] == [("alpha", "brand new")]

    def test_restart_resumes_from_log(self, tmp_path):
        state = make_state(tmp_path)
        state.apply_edit("remove_relation", {"parent": "root", "child": "beta"})
        state.apply_edit(
            "resolve_same_as", {"label_a": "beta", "label_b": "leaf", "accept": False}
        )
        resumed = make_state(tmp_path)
        assert serialize_ontology(resumed.current) == serialize_ontology(state.current)
        assert len(resumed.edits) == 2
        assert resumed.views()["queue"] == "[]"
        # next edit id continues the sequence
        edit = resumed.apply_edit("add_relation", {"parent": "beta", "child": "leaf"})
        assert edit.edit_id == 3

    def test_crash_after_log_append_never_loses_the_edit(self, tmp_path):
        state = make_state(tmp_path)

        def crash():
            raise OSError("power loss")

        state._crash_hook = crash
        with pytest.raises(OSError):
            state.apply_edit("remove_relation", {"parent": "root", "child": "beta"})
        # in-memory state never saw the edit
        assert "beta" in state.current.nodes["root"].subtopic
        # but a restart replays it: the logged edit is the durable truth
        resumed = make_state(tmp_path)
        assert "beta" not in resumed.current.nodes["root"].subtopic
        assert len(resumed.edits) == 1

    def test_randomized_record_replay(self, tmp_path):
        rng = random.Random(31)
        for trial in range(10):
            log = tmp_path / f"log{trial}.jsonl"
            state = ReviewState(
                small_ontology(),
                queue=[QueueItem("beta", "leaf", False, 0.4, FLAGGED)],
                doc_freq={"root": 50, "alpha": 20, "beta": 10, "leaf": 5},
                log_path=log,
            )
            attempts = [
                ("remove_relation", {"parent": "root", "child": "beta"}),
                ("remove_relation", {"parent": "root", "child": "alpha"}),
                ("add_relation", {"parent": "beta", "child": "leaf"}),
                ("add_relation", {"parent": "root", "child": "leaf"}),
                ("discard_alt_label", {"topic": "leaf", "label": "leaf synonym"}),
                ("discard_topic", {"topic": "alpha"}),
                ("resolve_same_as", {"label_a": "beta", "label_b": "leaf", "accept": rng.random() < 0.5}),
            ]
            rng.shuffle(attempts)
            for kind, payload in attempts[: rng.randint(1, len(attempts))]:
                try:
                    state.apply_edit(kind, payload)
                except EditRejected:
                    pass
            digest, edits = load_edit_log(log) if log.is_file() else (state.base_digest, [])
            replayed = replay(edits, state.base, digest, state.doc_freq, state.queue_base())
            assert serialize_ontology(replayed) == serialize_ontology(state.current)
            assert validate_ontology(state.current) == []


def http_get(url):
    with urllib.request.urlopen(url) as resp:
        return json.loads(resp.read().decode())


def http_post(url, doc):
    req = urllib.request.Request(
        url, data=json.dumps(doc).encode(), headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode())


@pytest.fixture
def live_service(tmp_path):
    paths = generate(tmp_path / "fixture", out_dir=tmp_path / "out")
    config = PipelineConfig.from_file(paths["config"])
    run_case_study(config)
    state = ReviewState.from_artifacts(config.out_dir)
    service = ReviewService(state, export_dir=config.out_dir)
    service.start_background()
    host, port = service.address
    yield f"http://{host}:{port}", state, config
    service.shutdown()


class TestService:
    def test_views_after_build(self, live_service):
        base_url, state, _ = live_service
        onto = http_get(f"{base_url}/ontology")
        assert "security" in onto
        queue = http_get(f"{base_url}/queue")
        assert len(queue) == 1
        assert {queue[0]["label_a"], queue[0]["label_b"]} == {"firewall", "packet filter"}
        assert queue[0]["similarity"] is not None
        audit = http_get(f"{base_url}/audit")
        assert audit["edits_applied"] == 0
        assert audit["queue_pending"] == 1

    def test_audit_carries_verbatim_evidence(self, live_service):
        base_url, _, _ = live_service
        audit = http_get(f"{base_url}/audit")
        assert audit["doc_freq"]["security"] > 0
        pair = audit["pair_evidence"]["security\tcryptography"]
        assert set(pair) == {"occ_a", "occ_b", "coocc_ab", "subsumption", "lm_class"}
        assert pair["coocc_ab"] > 0

    def test_post_edit_applied_and_visible(self, live_service):
        base_url, _, _ = live_service
        status, doc = http_post(
            f"{base_url}/edits",
            {
                "kind": "remove_relation",
                "payload": {"parent": "network defense", "child": "firewall"},
                "author": "domain expert",
            },
        )
        assert status == 200 and doc["result"] == "applied"
        onto = http_get(f"{base_url}/ontology")
        assert "firewall" not in onto["network defense"]["subtopic"]
        edits = http_get(f"{base_url}/edits")
        assert len(edits) == 1
        assert edits[0]["author"] == "domain expert"

    def test_post_cycle_edit_rejected_with_witness(self, live_service):
        base_url, _, _ = live_service
        status, doc = http_post(
            f"{base_url}/edits",
            {
                "kind": "add_relation",
                "payload": {"parent": "encryption", "child": "security"},
            },
        )
        assert status == 409
        assert doc["result"] == "rejected"
        assert doc["reason"] == "would create cycle"
        assert doc["detail"][0] == "encryption" and doc["detail"][-1] == "encryption"

    def test_queue_triage_roundtrip(self, live_service):
        base_url, _, _ = live_service
        status, doc = http_post(
            f"{base_url}/edits",
            {
                "kind": "resolve_same_as",
                "payload": {"label_a": "firewall", "label_b": "packet filter", "accept": True},
            },
        )
        assert status == 200
        assert http_get(f"{base_url}/queue") == []
        onto = http_get(f"{base_url}/ontology")
        assert "packet filter" in onto["firewall"]["alternative-label"]

    def test_export_writes_current_state(self, live_service, tmp_path):
        base_url, _, config = live_service
        http_post(
            f"{base_url}/edits",
            {"kind": "remove_relation", "payload": {"parent": "cryptography", "child": "encryption"}},
        )
        status, doc = http_post(f"{base_url}/export", {})
        assert status == 200
        exported = parse_ontology(
            (config.out("stats").parent / "curated_ontology.json").read_text()
        )
        assert ("cryptography", "encryption") not in exported.edges()
        triples = (config.out("stats").parent / "curated_triples.tsv").read_text()
        assert "cryptography\tsuperTopicOf\tencryption" not in triples

    def test_concurrent_reads_see_consistent_snapshots(self, live_service):
        base_url, _, _ = live_service
        errors = []
        stop = threading.Event()

        def reader():
            while not stop.is_set():
                try:
                    onto = http_get(f"{base_url}/ontology")
                    # a parseable, invariant-clean ontology: never partial
                    problems = validate_ontology(
                        parse_ontology(json.dumps(onto, ensure_ascii=False))
                    )
                    if problems:
                        errors.append(problems)
                except Exception as exc:  # noqa: BLE001
                    errors.append(exc)

        threads = [threading.Thread(target=reader) for _ in range(4)]
        for t in threads:
            t.start()
        for parent, child in [
            ("network defense", "firewall"),
            ("cryptography", "encryption"),
            ("encryption", "homomorphic encryption"),
        ]:
            http_post(
                f"{base_url}/edits",
                {"kind": "remove_relation", "payload": {"parent": parent, "child": child}},
            )
        stop.set()
        for t in threads:
            t.join()
        assert errors == []

    def test_replay_reproduces_service_state(self, live_service):
        base_url, state, config = live_service
        http_post(
            f"{base_url}/edits",
            {"kind": "remove_relation", "payload": {"parent": "network defense", "child": "firewall"}},
        )
        http_post(
            f"{base_url}/edits",
            {"kind": "add_relation", "payload": {"parent": "security", "child": "firewall"}},
        )
        digest, edits = load_edit_log(config.out("stats").parent / "edits.jsonl")
        replayed = replay(edits, state.base, digest, state.doc_freq, state.queue_base())
        assert serialize_ontology(replayed) == state.views()["ontology"]
