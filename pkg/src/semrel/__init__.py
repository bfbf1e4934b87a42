"""Semantic relatedness of sentence pairs from lightweight features.

Pipeline: load a pair dataset (corpus), compute statistical text features
(textstats) and cosine features from word-vector tables (wordvec) or
precomputed embedding sidecars (embedstore), optionally rotate embeddings
with a fitted PCA (linalg_pca), combine features with a supervised SVR or an
unsupervised mean (ensemble), and score systems with Spearman (eval).
"""

from .corpus import Dataset, SentencePair, TokenAnnotation, load_annotations, load_dataset
from .embedstore import EmbeddingStore, load_embeddings, write_embeddings
from .ensemble import (
    EnsembleModel,
    FeatureContext,
    FeatureManifest,
    FeatureSpec,
    FeatureVector,
    PRESETS,
    SvrModel,
    assemble_features,
    extract_features,
    fit_svr,
    tune_svr,
)
from .errors import ConfigError, DataError, NumericalError, SemrelError
from .eval import EvalReport, ScoreEntry, evaluate, spearman
from .linalg_pca import PcaModel, fit_pca
from .textstats import (
    ContentFilter,
    char_distance_ratio,
    levenshtein,
    tokenize,
    word_overlap_ratio,
)
from .wordvec import VectorTable, cosine, load_vectors, mean_embedding

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ContentFilter",
    "DataError",
    "Dataset",
    "EmbeddingStore",
    "EnsembleModel",
    "EvalReport",
    "FeatureContext",
    "FeatureManifest",
    "FeatureSpec",
    "FeatureVector",
    "NumericalError",
    "PRESETS",
    "PcaModel",
    "ScoreEntry",
    "SemrelError",
    "SentencePair",
    "SvrModel",
    "TokenAnnotation",
    "VectorTable",
    "assemble_features",
    "char_distance_ratio",
    "cosine",
    "evaluate",
    "extract_features",
    "fit_pca",
    "fit_svr",
    "levenshtein",
    "load_annotations",
    "load_dataset",
    "load_embeddings",
    "load_vectors",
    "mean_embedding",
    "spearman",
    "tokenize",
    "tune_svr",
    "word_overlap_ratio",
    "write_embeddings",
]
