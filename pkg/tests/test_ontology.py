import random

import pytest

from ontogen.errors import InvariantViolation
from ontogen.ontology import (
    DraftNode,
    DraftTaxonomy,
    Ontology,
    OntologyNode,
    export_cso_triples,
    ontology_digest,
    parse_draft,
    parse_ontology,
    serialize_draft,
    serialize_ontology,
    validate_ontology,
)

from oracles import random_ontology


def single_node_draft():
    return DraftTaxonomy(nodes={"x": DraftNode()}, root="x")


def single_node_ontology():
    return Ontology(nodes={"x": OntologyNode(main_label="x")})


class TestLiteralFormats:
    def test_draft_single_node_bytes(self):
        assert (
            serialize_draft(single_node_draft())
            == '{"x": {"supertopic": [], "subtopic": [], "same-as": []}}'
        )

    def test_ontology_single_node_bytes(self):
        assert (
            serialize_ontology(single_node_ontology())
            == '{"x": {"main_label": "x", "supertopic": [], "subtopic": [], "alternative-label": []}}'
        )

    def test_nodes_sorted_by_label(self):
        draft = DraftTaxonomy(nodes={"zebra": DraftNode(), "ant": DraftNode()})
        text = serialize_draft(draft)
        assert text.index('"ant"') < text.index('"zebra"')

    def test_lists_sorted(self):
        onto = Ontology(
            nodes={
                "a": OntologyNode("a", subtopic=["c", "b"]),
                "b": OntologyNode("b", supertopic=["a"]),
                "c": OntologyNode("c", supertopic=["a"]),
            }
        )
        text = serialize_ontology(onto)
        assert '"subtopic": ["b", "c"]' in text


class TestInvariantGates:
    def test_missing_neighbor_refused(self):
        draft = DraftTaxonomy(nodes={"a": DraftNode(subtopic=["ghost"])})
        with pytest.raises(InvariantViolation):
            serialize_draft(draft)

    def test_unmirrored_edge_refused(self):
        onto = Ontology(
            nodes={"a": OntologyNode("a", subtopic=["b"]), "b": OntologyNode("b")}
        )
        with pytest.raises(InvariantViolation):
            serialize_ontology(onto)

    def test_cycle_refused(self):
        onto = Ontology(
            nodes={
                "a": OntologyNode("a", subtopic=["b"], supertopic=["b"]),
                "b": OntologyNode("b", subtopic=["a"], supertopic=["a"]),
            }
        )
        problems = validate_ontology(onto)
        assert any("cycle" in p for p in problems)
        with pytest.raises(InvariantViolation):
            serialize_ontology(onto)

    def test_alt_label_clashing_with_topic_refused(self):
        onto = Ontology(
            nodes={
                "a": OntologyNode("a", alternative_label=["b"]),
                "b": OntologyNode("b"),
            }
        )
        with pytest.raises(InvariantViolation):
            serialize_ontology(onto)

    def test_alt_label_in_two_clusters_refused(self):
        onto = Ontology(
            nodes={
                "a": OntologyNode("a", alternative_label=["x"]),
                "b": OntologyNode("b", alternative_label=["x"]),
            }
        )
        with pytest.raises(InvariantViolation):
            serialize_ontology(onto)


class TestRoundTrip:
    def test_parse_serialize_identity_random(self):
        rng = random.Random(17)
        for _ in range(25):
            onto = random_ontology(rng)
            text = serialize_ontology(onto)
            back = parse_ontology(text)
            assert back.nodes == onto.nodes
            assert serialize_ontology(back) == text

    def test_draft_roundtrip(self):
        draft = DraftTaxonomy(
            nodes={
                "root": DraftNode(subtopic=["a"], same_as=["r2"]),
                "a": DraftNode(supertopic=["root"]),
                "r2": DraftNode(same_as=["root"]),
            },
            root="root",
        )
        text = serialize_draft(draft)
        back = parse_draft(text, root="root")
        assert back.nodes == draft.nodes
        assert serialize_draft(back) == text

    def test_parse_rejects_bad_keys(self):
        with pytest.raises(InvariantViolation):
            parse_ontology('{"x": {"main_label": "x", "supertopic": []}}')

    def test_digest_stable(self):
        rng = random.Random(3)
        onto = random_ontology(rng)
        assert ontology_digest(onto) == ontology_digest(onto.copy())


class TestExportTriples:
    def test_supertopic_edge(self):
        onto = Ontology(
            nodes={
                "databases": OntologyNode("databases", subtopic=["sql"]),
                "sql": OntologyNode("sql", supertopic=["databases"]),
            }
        )
        assert export_cso_triples(onto) == "databases\tsuperTopicOf\tsql\n"

    def test_related_equivalent_from_alt_labels(self):
        onto = Ontology(
            nodes={
                "natural language processing": OntologyNode(
                    "natural language processing", alternative_label=["NLP"]
                )
            }
        )
        assert (
            export_cso_triples(onto)
            == "natural language processing\trelatedEquivalent\tNLP\n"
        )

    def test_empty_ontology_empty_output(self):
        assert export_cso_triples(Ontology()) == ""

    def test_deterministic_order(self):
        onto = Ontology(
            nodes={
                "b": OntologyNode("b", subtopic=["c"]),
                "a": OntologyNode("a", subtopic=["c"], alternative_label=["alpha"]),
                "c": OntologyNode("c", supertopic=["a", "b"]),
            }
        )
        lines = export_cso_triples(onto).splitlines()
        assert lines == [
            "a\tsuperTopicOf\tc",
            "b\tsuperTopicOf\tc",
            "a\trelatedEquivalent\talpha",
        ]
