"""Goal-oriented script construction."""

from ._gosc import (
    CandidateStep,
    ConstructedScript,
    Corpus,
    GoscError,
    LexicalScorer,
    Ontology,
    OracleOrderer,
    OracleRelevance,
    OrderScorer,
    ParseError,
    PositionOrderer,
    ProtocolError,
    RandomScorer,
    RelevanceScorer,
    RemoteScorer,
    Script,
    Section,
    TaskInstance,
    TransportError,
    build_retrieval_tasks,
    construct,
    emit_inference_training_data,
    emit_ordering_training_data,
    instantiate_template,
    load_corpus,
    load_tasks,
    metrics,
    order_steps,
    save_corpus,
    save_tasks,
    split_corpus,
    text,
)

__version__ = "0.1.0"
