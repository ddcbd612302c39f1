"""From classified pairs to a clean, acyclic ontology.

Every construction stage on a small worked example: the inverse-consistency
filter, root-seeded expansion, same-as validation (acronym rule plus
embedding similarity), main-label election, and cycle breaking. Ends with
the two canonical serializations.
"""

from ontogen import (
    ClassifiedPairSet,
    RelationClass,
    acronym_match,
    build_ontology,
    export_cso_triples,
    serialize_draft,
    serialize_ontology,
)
from ontogen.providers import HashingEmbedder

S, B, E, O = RelationClass

rows = []


def both(a, b, rel):
    rows.append((a, b, rel))
    rows.append((b, a, rel.inverse()))


both("machine learning", "random forest", S)
both("machine learning", "neural networks", S)
both("neural networks", "deep learning", S)
both("machine learning", "ml", E)
both("random forest", "neural networks", O)
# a contradictory pair the consistency filter must discard:
rows.append(("deep learning", "random forest", S))
rows.append(("random forest", "deep learning", S))
# an upward edge that closes a cycle, to be broken by co-occurrence:
both("deep learning", "machine learning", S)

classified = ClassifiedPairSet.from_rows(rows)

doc_freq = {
    "machine learning": 900, "neural networks": 300, "deep learning": 280,
    "random forest": 120, "ml": 40,
}
coocc = {
    ("machine learning", "neural networks"): 250,
    ("deep learning", "neural networks"): 200,
    ("deep learning", "machine learning"): 4,  # the weak link
    ("machine learning", "random forest"): 110,
}

draft, onto, audit = build_ontology(
    classified,
    root="machine learning",
    embedder=HashingEmbedder(),
    doc_freq=doc_freq,
    coocc=coocc,
    similarity_threshold=0.85,
)

print("discarded as inconsistent:")
for d in audit.discarded_inconsistent:
    print(f"  ({d.topic_a}, {d.topic_b}): {d.relation_ab.value} / {d.relation_ba.value}")

print()
print("same-as verdicts:")
for v in audit.verdicts:
    sim = "n/a" if v.similarity is None else f"{v.similarity:.2f}"
    print(f"  {v.pair}  acronym={v.acronym_ok} similarity={sim} -> {v.status}")
print("  ('ml' passes the acronym rule:",
      acronym_match("ml", "machine learning"), ")")

print()
print("cycle broken:")
for r in audit.removed_edges:
    print(f"  removed {r.source} -> {r.target} (coocc {r.coocc}) from cycle {' -> '.join(r.cycle)}")

print()
print("draft taxonomy:")
print(serialize_draft(draft))
print()
print("final ontology:")
print(serialize_ontology(onto))
print()
print("triple export:")
print(export_cso_triples(onto), end="")
