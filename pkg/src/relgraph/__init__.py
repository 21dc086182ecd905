"""Relational-graph word embeddings.

Build directed labelled weighted graphs from annotated corpora (words as
vertices, relation-expressing patterns as edge labels), learn a vector per
word and a matrix per pattern by per-edge AdaGrad on a squared bilinear loss,
and evaluate the vectors on word-analogy questions.
"""

from .analogy import (
    AnalogyQuestion,
    EmbeddingSet,
    EvalReport,
    answer,
    candidate_pool,
    evaluate,
    filter_valid,
    load_questions,
)
from .corpus import (
    AnnotatedSentence,
    AnnotatedToken,
    TripleCounts,
    accumulate_counts,
    extract_dep_patterns,
    extract_lexical_patterns,
    filter_patterns,
    generate_pairs,
    merge_counts,
    read_conll_corpus,
    read_vertical_corpus,
    to_pos_pattern,
)
from .graph import (
    Edge,
    ParseError,
    Pattern,
    PatternKind,
    PatternTable,
    RelationalGraph,
    Vocabulary,
    load_graph,
    save_graph,
)
from .training import (
    HyperParams,
    Model,
    TrainingDivergedError,
    TrainReport,
    adagrad_step,
    edge_gradients,
    edge_loss,
    init_model,
    predict,
    shift_diagonal,
    total_loss,
    train,
)
from .weighting import (
    WeightMeasure,
    build_graph,
    weight_ent,
    weight_lmi,
    weight_log,
    weight_ppmi,
    weight_raw,
)

__version__ = "0.1.0"

__all__ = [
    "AnalogyQuestion",
    "AnnotatedSentence",
    "AnnotatedToken",
    "Edge",
    "EmbeddingSet",
    "EvalReport",
    "HyperParams",
    "Model",
    "ParseError",
    "Pattern",
    "PatternKind",
    "PatternTable",
    "RelationalGraph",
    "TrainReport",
    "TrainingDivergedError",
    "TripleCounts",
    "Vocabulary",
    "WeightMeasure",
    "accumulate_counts",
    "adagrad_step",
    "answer",
    "build_graph",
    "candidate_pool",
    "edge_gradients",
    "edge_loss",
    "evaluate",
    "extract_dep_patterns",
    "extract_lexical_patterns",
    "filter_patterns",
    "filter_valid",
    "generate_pairs",
    "init_model",
    "load_graph",
    "load_questions",
    "merge_counts",
    "predict",
    "read_conll_corpus",
    "read_vertical_corpus",
    "save_graph",
    "shift_diagonal",
    "to_pos_pattern",
    "total_loss",
    "train",
    "weight_ent",
    "weight_lmi",
    "weight_log",
    "weight_ppmi",
    "weight_raw",
]
