"""From classified topic pairs to a validated, acyclic ontology.

Stage order: consistency filtering of inverse-incompatible pair labels,
root-seeded depth-first taxonomy expansion, same-as validation (acronym
rule + embedding similarity), equivalence clustering with main-label
election, edge re-targeting onto main labels, and cycle breaking. Every
stage is deterministic: traversal visits children lexicographically, cycle
detection starts from the smallest node, and all ties are broken by label.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .errors import PairSetError
from .ontology import (
    DraftNode,
    DraftTaxonomy,
    Ontology,
    OntologyNode,
    PROVENANCE_CLASSIFIER,
)
from .providers import cosine_similarity
from .relations import RelationClass

logger = logging.getLogger(__name__)

ACCEPTED = "accepted"
FLAGGED = "flagged_for_review"
DISCARDED = "discarded"
EMBEDDER_ERROR = "error"

DEFAULT_ACRONYM_STOPWORDS = frozenset({"of", "for", "and", "the", "in", "on"})

# The only orderings of (rel(A,B), rel(B,A)) that are semantically coherent.
_COMPATIBLE = {
    (RelationClass.SUPERTOPIC, RelationClass.SUBTOPIC),
    (RelationClass.SUBTOPIC, RelationClass.SUPERTOPIC),
    (RelationClass.SAME_AS, RelationClass.SAME_AS),
    (RelationClass.OTHER, RelationClass.OTHER),
}


class ClassifiedPairSet:
    """Relation class per ordered topic pair; both orderings of every
    considered pair must be present."""

    def __init__(self, entries: Mapping[tuple[str, str], RelationClass]):
        self.entries: dict[tuple[str, str], RelationClass] = dict(entries)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, str, RelationClass]]) -> "ClassifiedPairSet":
        return cls({(a, b): rel for a, b, rel in rows})

    def require_complete(self) -> None:
        missing = [(a, b) for (a, b) in self.entries if (b, a) not in self.entries]
        if missing:
            raise PairSetError(
                f"{len(missing)} pair(s) lack their inverse ordering, e.g. {missing[0]!r}"
            )

    def get(self, a: str, b: str) -> RelationClass | None:
        return self.entries.get((a, b))

    def unordered_pairs(self) -> list[tuple[str, str]]:
        return sorted({(a, b) if a <= b else (b, a) for (a, b) in self.entries})

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class DiscardedPair:
    topic_a: str
    topic_b: str
    relation_ab: RelationClass
    relation_ba: RelationClass


def consistency_filter(
    pairs: ClassifiedPairSet,
) -> tuple[ClassifiedPairSet, list[DiscardedPair]]:
    """Keep a pair only when its two orderings carry compatible classes:
    supertopic/subtopic in opposite orders, or same-as / other in both.
    Every other combination discards both orderings."""
    pairs.require_complete()
    kept: dict[tuple[str, str], RelationClass] = {}
    discarded: list[DiscardedPair] = []
    for a, b in pairs.unordered_pairs():
        rel_ab = pairs.entries[(a, b)]
        rel_ba = pairs.entries[(b, a)]
        if (rel_ab, rel_ba) in _COMPATIBLE:
            kept[(a, b)] = rel_ab
            kept[(b, a)] = rel_ba
        else:
            discarded.append(DiscardedPair(a, b, rel_ab, rel_ba))
    return ClassifiedPairSet(kept), discarded


def expand_taxonomy(
    root: str,
    pairs: ClassifiedPairSet,
    max_depth: int | None = None,
    max_nodes: int | None = None,
) -> DraftTaxonomy:
    """Depth-first expansion from the root along subtopic and same-as edges.

    Children are visited in lexicographic order; a node is expanded at most
    once; same-as neighbors inherit their discoverer's depth (they do not
    consume a level) while subtopic children sit one level deeper. Expansion
    stops per branch at max_depth and globally once max_nodes topics exist.
    """
    children: dict[str, list[str]] = defaultdict(list)
    same: dict[str, list[str]] = defaultdict(list)
    for (a, b), rel in pairs.entries.items():
        if rel is RelationClass.SUPERTOPIC:
            children[a].append(b)
        elif rel is RelationClass.SAME_AS:
            same[a].append(b)

    if not children.get(root) and not same.get(root):
        logger.warning("root topic %r has no kept relations; single-node taxonomy", root)

    draft = DraftTaxonomy(nodes={root: DraftNode()}, root=root)
    nodes = draft.nodes

    def room_left() -> bool:
        return max_nodes is None or len(nodes) < max_nodes

    stack: list[tuple[str, int]] = [(root, 0)]
    while stack:
        topic, depth = stack.pop()
        to_visit: list[tuple[str, int]] = []
        for nb in sorted(same.get(topic, ())):
            if nb not in nodes:
                if not room_left():
                    continue
                nodes[nb] = DraftNode()
                to_visit.append((nb, depth))
            if nb not in nodes[topic].same_as:
                nodes[topic].same_as.append(nb)
                nodes[nb].same_as.append(topic)
        if max_depth is None or depth < max_depth:
            for ch in sorted(children.get(topic, ())):
                if ch not in nodes:
                    if not room_left():
                        continue
                    nodes[ch] = DraftNode()
                    to_visit.append((ch, depth + 1))
                if ch not in nodes[topic].subtopic:
                    nodes[topic].subtopic.append(ch)
                    nodes[ch].supertopic.append(topic)
        stack.extend(reversed(to_visit))
    return draft


def acronym_match(
    candidate: str,
    topic: str,
    stopwords: frozenset[str] = DEFAULT_ACRONYM_STOPWORDS,
) -> bool:
    """True when the candidate spells the topic's initial letters.

    Runs twice, with and without skipping function words ("internet of
    things" abbreviates to both IT and IOT), and accepts if either variant
    matches. Case-insensitive on both sides.
    """
    cand = candidate.strip().upper()
    tokens = topic.split()
    if not cand or not tokens:
        return False
    full = "".join(t[0] for t in tokens).upper()
    skipped = "".join(t[0] for t in tokens if t.lower() not in stopwords).upper()
    return cand == full or (bool(skipped) and cand == skipped)


@dataclass(frozen=True)
class SameAsVerdict:
    pair: tuple[str, str]
    acronym_ok: bool
    similarity: float | None  # None when the embedder failed
    status: str  # accepted | flagged_for_review | discarded | error


def validate_same_as(
    pairs: Iterable[tuple[str, str]],
    embedder: Callable[[str], list[float]],
    threshold: float = 0.85,
    review_mode: bool = True,
) -> list[SameAsVerdict]:
    """Gate each candidate equivalence on the acronym rule or embedding
    cosine similarity. Failures go to the review queue when review mode is
    on, otherwise the relation is discarded. An embedder failure never
    stops the pipeline; the verdict carries an error status instead."""
    verdicts = []
    canonical = {(a, b) if a <= b else (b, a) for a, b in pairs}
    for a, b in sorted(canonical):
        acronym_ok = acronym_match(a, b) or acronym_match(b, a)
        similarity: float | None
        try:
            similarity = cosine_similarity(embedder(a), embedder(b))
        except Exception as exc:
            logger.warning("embedder failed on (%r, %r): %s", a, b, exc)
            similarity = None
        if acronym_ok or (similarity is not None and similarity >= threshold):
            status = ACCEPTED
        elif similarity is None:
            status = EMBEDDER_ERROR
        else:
            status = FLAGGED if review_mode else DISCARDED
        verdicts.append(SameAsVerdict((a, b), acronym_ok, similarity, status))
    return verdicts


@dataclass(frozen=True)
class Cluster:
    main_label: str
    members: tuple[str, ...]  # sorted, includes the main label

    def alternatives(self) -> tuple[str, ...]:
        return tuple(m for m in self.members if m != self.main_label)


def elect_main_label(members: Iterable[str], doc_freq: Mapping[str, int]) -> str:
    """Highest document frequency wins; ties go to the smaller label."""
    return min(members, key=lambda m: (-doc_freq.get(m, 0), m))


def cluster_same_as(
    edges: Iterable[tuple[str, str]],
    doc_freq: Mapping[str, int],
    include: Iterable[str] = (),
) -> list[Cluster]:
    """Connected components over accepted same-as edges, each with its
    elected main label. Labels missing from doc_freq count as zero; labels
    in `include` form singleton clusters when no edge touches them."""
    parent: dict[str, str] = {label: label for label in include}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for a, b in edges:
        parent.setdefault(a, a)
        parent.setdefault(b, b)
        union(a, b)

    groups: dict[str, list[str]] = defaultdict(list)
    for label in parent:
        groups[find(label)].append(label)
    clusters = [
        Cluster(elect_main_label(members, doc_freq), tuple(sorted(members)))
        for members in groups.values()
    ]
    clusters.sort(key=lambda c: c.main_label)
    return clusters


@dataclass(frozen=True)
class RemovedEdge:
    source: str
    target: str
    coocc: int
    cycle: tuple[str, ...]  # the cycle that forced the removal


def break_cycles(
    edges: Iterable[tuple[str, str]],
    coocc: Callable[[str, str], int] | Mapping[tuple[str, str], int],
) -> tuple[list[tuple[str, str]], list[RemovedEdge]]:
    """Remove the weakest edge of every cycle until the digraph is acyclic.

    Weakest = lowest co-occurrence between the edge's endpoints (absent
    counts as zero); ties remove the lexicographically largest (source,
    target) edge. Detection is DFS from the smallest node with sorted
    children, so the whole procedure is reproducible.
    """
    if callable(coocc):
        lookup = coocc
    else:
        mapping = coocc

        def lookup(a: str, b: str) -> int:
            return mapping.get((a, b), mapping.get((b, a), 0))

    edge_set = set(edges)
    adj: dict[str, list[str]] = defaultdict(list)
    for a, b in edge_set:
        adj[a].append(b)
        adj.setdefault(b, [])

    removed: list[RemovedEdge] = []
    while True:
        cycle = _find_cycle(adj)
        if cycle is None:
            break
        cycle_edges = [
            (cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))
        ]
        weakest = max(cycle_edges, key=lambda e: (-lookup(*e), e))
        edge_set.remove(weakest)
        adj[weakest[0]].remove(weakest[1])
        removed.append(RemovedEdge(weakest[0], weakest[1], lookup(*weakest), tuple(cycle)))
    return sorted(edge_set), removed


def _find_cycle(adj: Mapping[str, list[str]]) -> list[str] | None:
    color: dict[str, int] = {}
    for start in sorted(adj):
        if color.get(start):
            continue
        color[start] = 1
        path = [start]
        iters = [iter(sorted(adj.get(start, ())))]
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
                iters.append(iter(sorted(adj.get(nxt, ()))))
    return None


@dataclass
class BuildAudit:
    discarded_inconsistent: list[DiscardedPair]
    verdicts: list[SameAsVerdict]
    clusters: list[Cluster]
    retargeted_edges: list[tuple[tuple[str, str], tuple[str, str]]]
    dropped_isolated: list[str]
    removed_edges: list[RemovedEdge]

    def to_dict(self) -> dict:
        return {
            "discarded_inconsistent": [
                {
                    "topic_a": d.topic_a,
                    "topic_b": d.topic_b,
                    "relation_ab": d.relation_ab.value,
                    "relation_ba": d.relation_ba.value,
                }
                for d in self.discarded_inconsistent
            ],
            "same_as_verdicts": [
                {
                    "label_a": v.pair[0],
                    "label_b": v.pair[1],
                    "acronym_ok": v.acronym_ok,
                    "similarity": v.similarity,
                    "status": v.status,
                }
                for v in self.verdicts
            ],
            "clusters": [
                {"main_label": c.main_label, "members": list(c.members)}
                for c in self.clusters
            ],
            "retargeted_edges": [
                {"from": list(old), "to": list(new)} for old, new in self.retargeted_edges
            ],
            "dropped_isolated": self.dropped_isolated,
            "removed_edges": [
                {
                    "source": r.source,
                    "target": r.target,
                    "coocc": r.coocc,
                    "cycle": list(r.cycle),
                }
                for r in self.removed_edges
            ],
        }


def build_ontology(
    classified: ClassifiedPairSet,
    root: str,
    embedder: Callable[[str], list[float]],
    doc_freq: Mapping[str, int],
    coocc: Callable[[str, str], int] | Mapping[tuple[str, str], int],
    similarity_threshold: float = 0.85,
    review_mode: bool = True,
    max_depth: int | None = None,
    max_nodes: int | None = None,
) -> tuple[DraftTaxonomy, Ontology, BuildAudit]:
    """Run the full construction pipeline on an inverse-complete pair set.

    Topics that entered the draft only through a same-as edge that was not
    accepted end up edgeless; they are dropped (their candidate equivalence
    stays visible in the verdicts for the review loop).
    """
    kept, discarded = consistency_filter(classified)
    draft = expand_taxonomy(root, kept, max_depth=max_depth, max_nodes=max_nodes)

    same_edges = sorted(
        {
            (a, b) if a <= b else (b, a)
            for a, node in draft.nodes.items()
            for b in node.same_as
        }
    )
    verdicts = validate_same_as(
        same_edges, embedder, threshold=similarity_threshold, review_mode=review_mode
    )
    accepted_edges = [v.pair for v in verdicts if v.status == ACCEPTED]
    clusters = cluster_same_as(accepted_edges, doc_freq)

    main_of: dict[str, str] = {}
    for cluster in clusters:
        for member in cluster.members:
            main_of[member] = cluster.main_label

    retargeted: list[tuple[tuple[str, str], tuple[str, str]]] = []
    edge_set: set[tuple[str, str]] = set()
    for label, node in draft.nodes.items():
        for child in node.subtopic:
            edge = (main_of.get(label, label), main_of.get(child, child))
            if edge != (label, child):
                retargeted.append(((label, child), edge))
            if edge[0] != edge[1]:
                edge_set.add(edge)

    final_edges, removed = break_cycles(sorted(edge_set), coocc)

    alternatives: dict[str, list[str]] = {
        c.main_label: list(c.alternatives()) for c in clusters
    }
    # A label stays a node when (mapped to its main) it is the root, carries a
    # subtopic edge in the draft, or is a cluster main holding alternative
    # labels. What this drops: topics whose only connection was a same-as
    # edge that was not accepted.
    root_main = main_of.get(root, root)
    retained = {root_main} | set(alternatives)
    for label, node in draft.nodes.items():
        for child in node.subtopic:
            retained.add(main_of.get(label, label))
            retained.add(main_of.get(child, child))
    node_mains = {main_of.get(label, label) for label in draft.nodes}
    dropped = sorted(node_mains - retained)

    onto = Ontology()
    for label in sorted(retained):
        onto.nodes[label] = OntologyNode(
            main_label=label, alternative_label=sorted(alternatives.get(label, []))
        )
    for parent, child in final_edges:
        onto.nodes[parent].subtopic.append(child)
        onto.nodes[child].supertopic.append(parent)
        onto.provenance[(parent, child)] = PROVENANCE_CLASSIFIER

    audit = BuildAudit(
        discarded_inconsistent=discarded,
        verdicts=verdicts,
        clusters=clusters,
        retargeted_edges=sorted(retargeted),
        dropped_isolated=dropped,
        removed_edges=removed,
    )
    return draft, onto, audit
