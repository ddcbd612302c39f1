"""ontogen: research-topic ontology generation from paper metadata.

The library is organized along the processing pipeline:

- corpus: ingest and normalize line-delimited paper records
- topic_index: multi-pattern occurrence/co-occurrence counting and
  candidate filtering
- features: pair features (occurrence, co-occurrence, subsumption) fused
  with an external language-model class prediction
- relations / forest / metrics: labeled triples, leakage-safe splits, the
  random-forest relation classifier, and its evaluation harness
- providers: file-backed and remote prediction/embedding providers
- builder / ontology: consistency filtering, taxonomy expansion, same-as
  validation and clustering, cycle breaking, canonical serializations
- pipeline / cli: staged artifacts with a digest-checked manifest
- review: the expert-review service with an append-only, replayable edit log
"""

from .corpus import (
    CorpusConfig,
    CorpusFilterReport,
    PaperRecord,
    load_corpus,
    normalize_text,
)
from .features import (
    AggregateFeatures,
    FusedFeatureVector,
    YearlyFeatures,
    compute_features,
    compute_subsumption,
    fuse,
)
from .forest import (
    ForestHyperparams,
    ForestModel,
    RelationPrediction,
    load_model,
    predict,
    save_model,
    train_forest,
)
from .metrics import EvalReport, evaluate, report_from_confusion, report_from_pairs
from .relations import (
    DatasetSplit,
    LabeledTriple,
    RelationClass,
    check_split_integrity,
    load_triples,
    make_splits,
    save_triples,
)
from .topic_index import (
    CandidateFilterConfig,
    LexiconEntry,
    OccurrenceStats,
    TopicLexicon,
    build_matcher,
    count_occurrences,
    filter_candidates,
    select_related_topics,
)
from .builder import (
    ClassifiedPairSet,
    SameAsVerdict,
    acronym_match,
    break_cycles,
    build_ontology,
    cluster_same_as,
    consistency_filter,
    expand_taxonomy,
    validate_same_as,
)
from .ontology import (
    DraftTaxonomy,
    Ontology,
    export_cso_triples,
    parse_draft,
    parse_ontology,
    serialize_draft,
    serialize_ontology,
    validate_ontology,
)

__version__ = "0.1.0"
