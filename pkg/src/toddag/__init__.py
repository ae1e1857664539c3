"""Data augmentation toolkit for annotated task-oriented dialog corpora."""

from .corpus import (
    Corpus,
    CorpusError,
    Dialog,
    DialogState,
    GoalSpec,
    SystemAct,
    Turn,
    load_canonical,
    save_canonical,
)
from .delex import DelexEntry, DelexMap, delexicalize, protect, relexicalize, restore
from .embeddings import EmbeddingTable, StopwordList, cosine, top_k_neighbors
from .experiment import (
    AugmentConfig,
    AugmentResources,
    expand,
    few_shot_split,
    run_matrix,
    sample_subset,
)
from .filtering import FilterDecision, RuleTablePredictor, check
from .ingest import ingest_kvret, ingest_multiwoz
from .metrics import MetricsReport, bleu, error_by_category, evaluate, score

__all__ = [
    "AugmentConfig",
    "AugmentResources",
    "Corpus",
    "CorpusError",
    "Dialog",
    "DialogState",
    "DelexEntry",
    "DelexMap",
    "EmbeddingTable",
    "FilterDecision",
    "GoalSpec",
    "MetricsReport",
    "RuleTablePredictor",
    "StopwordList",
    "SystemAct",
    "Turn",
    "bleu",
    "check",
    "cosine",
    "delexicalize",
    "error_by_category",
    "evaluate",
    "expand",
    "few_shot_split",
    "ingest_kvret",
    "ingest_multiwoz",
    "load_canonical",
    "protect",
    "relexicalize",
    "restore",
    "run_matrix",
    "sample_subset",
    "save_canonical",
    "score",
    "top_k_neighbors",
]

__version__ = "0.1.0"
