"""Identifier-substitution adversarial attacks and robustness evaluation for code comment generators."""
from .attack import AttackConfig, AttackResult, SubstitutionRecord, accent_attack, h_score, mh_attack, random_attack
from .corpus import AdversarialSample, CodeSample, Dataset, load_dataset
from .embed import EmbedConfig, EmbeddingTable, select_candidates, train_embeddings
from .report import RobustnessReport, build_report

__version__ = "0.1.0"

__all__ = [
    "AttackConfig", "AttackResult", "SubstitutionRecord", "accent_attack", "mh_attack", "random_attack", "h_score",
    "CodeSample", "Dataset", "AdversarialSample", "load_dataset", "EmbedConfig", "EmbeddingTable",
    "train_embeddings", "select_candidates", "RobustnessReport", "build_report",
]
