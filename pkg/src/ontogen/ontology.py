"""Taxonomy and ontology structures with their canonical file formats.

Both serializers are byte-stable: node entries sorted by topic label, fixed
key order inside each entry, lists sorted, compact JSON with ", " / ": "
separators, UTF-8, no trailing newline. Serialization refuses structures
that violate the type invariants, and parse(serialize(x)) == x.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import InvariantViolation

DRAFT_KEYS = ("supertopic", "subtopic", "same-as")
ONTOLOGY_KEYS = ("main_label", "supertopic", "subtopic", "alternative-label")

PROVENANCE_CLASSIFIER = "classifier"
PROVENANCE_EXPERT = "expert"


@dataclass
class DraftNode:
    supertopic: list[str] = field(default_factory=list)
    subtopic: list[str] = field(default_factory=list)
    same_as: list[str] = field(default_factory=list)


@dataclass
class DraftTaxonomy:
    nodes: dict[str, DraftNode] = field(default_factory=dict)
    root: str | None = None


@dataclass
class OntologyNode:
    main_label: str
    supertopic: list[str] = field(default_factory=list)
    subtopic: list[str] = field(default_factory=list)
    alternative_label: list[str] = field(default_factory=list)


@dataclass
class Ontology:
    nodes: dict[str, OntologyNode] = field(default_factory=dict)
    # (parent, child) -> "classifier" | "expert"; not part of the file format,
    # recoverable from the expert edit log.
    provenance: dict[tuple[str, str], str] = field(default_factory=dict)

    def edges(self) -> list[tuple[str, str]]:
        out = []
        for label, node in self.nodes.items():
            for child in node.subtopic:
                out.append((label, child))
        return sorted(out)

    def copy(self) -> "Ontology":
        return Ontology(
            nodes={
                k: OntologyNode(
                    n.main_label,
                    list(n.supertopic),
                    list(n.subtopic),
                    list(n.alternative_label),
                )
                for k, n in self.nodes.items()
            },
            provenance=dict(self.provenance),
        )


# -- validation --------------------------------------------------------------


def _find_cycle_in(edges_by_node: dict[str, list[str]]) -> list[str] | None:
    """Iterative DFS over sorted nodes/children; returns one cycle or None."""
    color: dict[str, int] = {}
    for start in sorted(edges_by_node):
        if color.get(start):
            continue
        path = [start]
        iters = [iter(sorted(edges_by_node.get(start, [])))]
        color[start] = 1
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                color[path.pop()] = 2
                iters.pop()
                continue
            c = color.get(nxt, 0)
            if c == 1:
                return path[path.index(nxt) :]
            if c == 0:
                color[nxt] = 1
                path.append(nxt)
                iters.append(iter(sorted(edges_by_node.get(nxt, []))))
    return None


def validate_draft(draft: DraftTaxonomy) -> list[str]:
    problems = []
    nodes = draft.nodes
    for label, node in nodes.items():
        for child in node.subtopic:
            if child not in nodes:
                problems.append(f"{label!r} lists missing subtopic {child!r}")
            elif label not in nodes[child].supertopic:
                problems.append(f"subtopic edge {label!r}->{child!r} not mirrored")
        for parent in node.supertopic:
            if parent not in nodes:
                problems.append(f"{label!r} lists missing supertopic {parent!r}")
            elif label not in nodes[parent].subtopic:
                problems.append(f"supertopic link {label!r}->{parent!r} not mirrored")
        for other in node.same_as:
            if other not in nodes:
                problems.append(f"{label!r} lists missing same-as {other!r}")
            elif label not in nodes[other].same_as:
                problems.append(f"same-as link {label!r}~{other!r} not mirrored")
    return problems


def validate_ontology(onto: Ontology) -> list[str]:
    """The full invariant suite: endpoint existence, mirrored edges,
    acyclicity, and global label uniqueness. Runs after every builder stage
    and every expert edit."""
    problems = []
    nodes = onto.nodes
    for label, node in nodes.items():
        if node.main_label != label:
            problems.append(f"node key {label!r} differs from main_label {node.main_label!r}")
        for child in node.subtopic:
            if child not in nodes:
                problems.append(f"{label!r} lists missing subtopic {child!r}")
            elif label not in nodes[child].supertopic:
                problems.append(f"subtopic edge {label!r}->{child!r} not mirrored")
        for parent in node.supertopic:
            if parent not in nodes:
                problems.append(f"{label!r} lists missing supertopic {parent!r}")
            elif label not in nodes[parent].subtopic:
                problems.append(f"supertopic link {label!r}->{parent!r} not mirrored")

    alt_owner: dict[str, str] = {}
    for label, node in nodes.items():
        for alt in node.alternative_label:
            if alt in nodes:
                problems.append(f"alternative label {alt!r} of {label!r} is also a topic")
            if alt in alt_owner:
                problems.append(
                    f"alternative label {alt!r} appears under both "
                    f"{alt_owner[alt]!r} and {label!r}"
                )
            alt_owner[alt] = label

    children = {label: node.subtopic for label, node in nodes.items()}
    cycle = _find_cycle_in(children)
    if cycle is not None:
        problems.append("supertopic digraph has a cycle: " + " -> ".join(cycle + cycle[:1]))
    return problems


# -- serialization ------------------------------------------------------------


def serialize_draft(draft: DraftTaxonomy) -> str:
    problems = validate_draft(draft)
    if problems:
        raise InvariantViolation("; ".join(problems))
    doc = {
        label: {
            "supertopic": sorted(node.supertopic),
            "subtopic": sorted(node.subtopic),
            "same-as": sorted(node.same_as),
        }
        for label, node in sorted(draft.nodes.items())
    }
    return json.dumps(doc, ensure_ascii=False)


def parse_draft(text: str, root: str | None = None) -> DraftTaxonomy:
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise InvariantViolation("draft file must hold one JSON object")
    nodes = {}
    for label, entry in doc.items():
        if set(entry) != set(DRAFT_KEYS):
            raise InvariantViolation(f"node {label!r} has keys {sorted(entry)}")
        nodes[label] = DraftNode(
            supertopic=list(entry["supertopic"]),
            subtopic=list(entry["subtopic"]),
            same_as=list(entry["same-as"]),
        )
    draft = DraftTaxonomy(nodes=nodes, root=root)
    problems = validate_draft(draft)
    if problems:
        raise InvariantViolation("; ".join(problems))
    return draft


def serialize_ontology(onto: Ontology) -> str:
    problems = validate_ontology(onto)
    if problems:
        raise InvariantViolation("; ".join(problems))
    doc = {
        label: {
            "main_label": node.main_label,
            "supertopic": sorted(node.supertopic),
            "subtopic": sorted(node.subtopic),
            "alternative-label": sorted(node.alternative_label),
        }
        for label, node in sorted(onto.nodes.items())
    }
    return json.dumps(doc, ensure_ascii=False)


def parse_ontology(text: str) -> Ontology:
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise InvariantViolation("ontology file must hold one JSON object")
    nodes = {}
    for label, entry in doc.items():
        if set(entry) != set(ONTOLOGY_KEYS):
            raise InvariantViolation(f"node {label!r} has keys {sorted(entry)}")
        nodes[label] = OntologyNode(
            main_label=entry["main_label"],
            supertopic=list(entry["supertopic"]),
            subtopic=list(entry["subtopic"]),
            alternative_label=list(entry["alternative-label"]),
        )
    onto = Ontology(nodes=nodes)
    for parent, child in onto.edges():
        onto.provenance[(parent, child)] = PROVENANCE_CLASSIFIER
    problems = validate_ontology(onto)
    if problems:
        raise InvariantViolation("; ".join(problems))
    return onto


def ontology_digest(onto: Ontology) -> str:
    return hashlib.sha256(serialize_ontology(onto).encode("utf-8")).hexdigest()


def export_cso_triples(onto: Ontology) -> str:
    """Triple export: one superTopicOf line per supertopic edge, one
    relatedEquivalent line per (main label, alternative label) pairing.
    Tab-separated, deterministic order, empty ontology -> empty output."""
    problems = validate_ontology(onto)
    if problems:
        raise InvariantViolation("; ".join(problems))
    lines = []
    for parent, child in onto.edges():
        lines.append(f"{parent}\tsuperTopicOf\t{child}")
    equivalents = []
    for label, node in sorted(onto.nodes.items()):
        for alt in sorted(node.alternative_label):
            equivalents.append(f"{label}\trelatedEquivalent\t{alt}")
    lines.extend(equivalents)
    return "".join(line + "\n" for line in lines)
