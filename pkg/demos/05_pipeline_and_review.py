"""The staged pipeline plus the expert-review loop, end to end.

Builds a small corpus with a planted hierarchy under "security", runs the
file-based stages (index -> features -> predict -> build -> export), then
opens the review service, applies a few expert edits over HTTP, and shows
that replaying the edit log reproduces the curated ontology exactly.
"""

import json
import random
import tempfile
import urllib.request
from pathlib import Path

from ontogen.pipeline import PipelineConfig, read_manifest, run_case_study, run_stage
from ontogen.review import ReviewService, ReviewState, load_edit_log, replay
from ontogen.ontology import serialize_ontology

workdir = Path(tempfile.mkdtemp(prefix="ontogen_demo_"))
rng = random.Random(5)

EDGES = [
    ("security", "cryptography"),
    ("security", "cyber defense"),
    ("cryptography", "encryption"),
    ("cyber defense", "threat detection"),
    ("cyber defense", "firewall"),
]
TOPICS = sorted({t for e in EDGES for t in e})

# -- corpus -----------------------------------------------------------------

themes = [
    ["security", "cryptography", "encryption"],
    ["security", "cyber defense", "threat detection"],
    ["security", "cyber defense", "firewall"],
    ["security"],
]
corpus_path = workdir / "corpus.jsonl"
with corpus_path.open("w", encoding="utf-8") as fh:
    for i in range(120):
        topics = themes[i % len(themes)]
        sentences = [f"This paper studies {t} at scale." for t in topics]
        rng.shuffle(sentences)
        fh.write(json.dumps({
            "paper_id": f"d{i}", "title": topics[0], "abstract": " ".join(sentences),
            "year": 2016 + i % 9, "language": "en",
        }) + "\n")

lexicon_path = workdir / "lexicon.tsv"
lexicon_path.write_text(
    "".join(f"{t}\t{t}\t{'allowlist' if t == 'security' else 'external_ner'}\n" for t in TOPICS)
)

predictions_path = workdir / "predictions.tsv"
with predictions_path.open("w", encoding="utf-8") as fh:
    for parent, child in EDGES:
        fh.write(f"{parent}\t{child}\tsupertopic\n")
        fh.write(f"{child}\t{parent}\tsubtopic\n")

config = PipelineConfig.from_dict({
    "corpus_path": str(corpus_path),
    "lexicon_path": str(lexicon_path),
    "reference_year": 2024,
    "allowlist": ["security"],
    "generic_df_ratio": 0.95,
    "predict_source": "table",
    "predict_table_path": str(predictions_path),
    "root": "security",
    "k": 100,
    "out_dir": str(workdir / "out"),
})

onto = run_case_study(config)
print("pipeline produced", len(onto.nodes), "topics and", len(onto.edges()), "edges")

# re-running a stage with unchanged inputs is a verified no-op
result = run_stage("features", config)
print("features re-run skipped:", result.skipped)
print("manifest entries:", [e["stage"] for e in read_manifest(config.out_dir)])

# -- review service -----------------------------------------------------------


def post(url, doc):
    req = urllib.request.Request(
        url, data=json.dumps(doc).encode(), headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read().decode())


state = ReviewState.from_artifacts(config.out_dir)
service = ReviewService(state, export_dir=config.out_dir)
service.start_background()
host, port = service.address
base_url = f"http://{host}:{port}"
print()
print("review service at", base_url)

status, doc = post(f"{base_url}/edits", {
    "kind": "remove_relation",
    "payload": {"parent": "cyber defense", "child": "firewall"},
    "author": "demo expert",
})
print("remove_relation ->", doc["result"])

status, doc = post(f"{base_url}/edits", {
    "kind": "add_relation",
    "payload": {"parent": "threat detection", "child": "firewall"},
    "author": "demo expert",
})
print("add_relation    ->", doc["result"])

# an edit that would close a loop comes back with the offending path
status, doc = post(f"{base_url}/edits", {
    "kind": "add_relation",
    "payload": {"parent": "encryption", "child": "security"},
})
print("cycle attempt   ->", doc["result"], "|", " -> ".join(doc["detail"]))

with urllib.request.urlopen(f"{base_url}/ontology") as resp:
    current = resp.read().decode()

digest, edits = load_edit_log(Path(config.out_dir) / "edits.jsonl")
replayed = replay(edits, state.base, digest, state.doc_freq, state.queue_base())
print()
print("replay(log, base) == served state:", serialize_ontology(replayed) == current)

service.shutdown()
