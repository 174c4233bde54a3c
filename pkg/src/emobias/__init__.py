"""Curation toolkit for emotionally biased image-captioning corpora.

Diagnoses emotional bias (scores, neighborhood statistics, distributions),
assembles contrastive annotation tasks over visual nearest neighbors,
serves them to human annotators over HTTP, merges the collected records
back in, and evaluates captions with bias-aware per-emotion aggregation.
"""

from .bias import (
    BiasReport,
    EmotionalScore,
    PosStats,
    analyze,
    emotional_score,
    identify_biased,
    neighborhood_emotion_entropy,
    neighborhood_sentiment_ratio,
    pos_statistics,
    sentiment_distribution,
    single_sentiment_set,
)
from .corpus import (
    Annotation,
    Corpus,
    FeatureVector,
    Painting,
    ingest_annotations,
    export_jsonl,
    load_jsonl,
    merge,
    subsample,
)
from .emotions import EmotionLabel, Sentiment
from .features import read_features, write_features
from .knn import NeighborList, SimilarityIndex, batch_query, build_index, query
from .metrics import (
    EvalInstance,
    MetricReport,
    aggregate,
    bleu,
    cider_d,
    nn_speaker,
    rouge_l,
    tokenize,
)
from .selection import (
    AnnotationTask,
    CandidateSet,
    SelectorConfig,
    assemble_candidates,
    generate_tasks,
)
from .spectrum import (
    PredictionSet,
    emotion_histogram,
    offdiagonal_comparison,
    pearson_matrix,
)
from .store import AnnotationStore, Submission, replay_log

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AnnotationStore",
    "AnnotationTask",
    "BiasReport",
    "CandidateSet",
    "Corpus",
    "EmotionLabel",
    "EmotionalScore",
    "EvalInstance",
    "FeatureVector",
    "MetricReport",
    "NeighborList",
    "Painting",
    "PosStats",
    "PredictionSet",
    "SelectorConfig",
    "Sentiment",
    "SimilarityIndex",
    "Submission",
    "aggregate",
    "analyze",
    "assemble_candidates",
    "batch_query",
    "bleu",
    "build_index",
    "cider_d",
    "emotion_histogram",
    "emotional_score",
    "export_jsonl",
    "generate_tasks",
    "identify_biased",
    "ingest_annotations",
    "load_jsonl",
    "merge",
    "neighborhood_emotion_entropy",
    "neighborhood_sentiment_ratio",
    "nn_speaker",
    "offdiagonal_comparison",
    "pearson_matrix",
    "pos_statistics",
    "query",
    "read_features",
    "replay_log",
    "rouge_l",
    "sentiment_distribution",
    "single_sentiment_set",
    "subsample",
    "tokenize",
    "write_features",
]
