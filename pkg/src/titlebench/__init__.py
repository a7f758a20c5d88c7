"""Job-title benchmarking over career-transition graphs.

Build a directed (title, company) transition graph from career records,
learn multi-view node embeddings (topology, title semantics, transition
balance, transition duration) with negative-sampling SGD, fuse them with a
reconstruction autoencoder, and evaluate title matching as link prediction.
"""

from .errors import DataError
from .estimator import MultiViewTitleEmbedder
from .evaluation import (
    EvalReport,
    EvalSplit,
    evaluate,
    mp_at_k,
    mrr,
    random_ranking_baseline,
    rank_candidates,
    robustness_sweep,
    threshold_and_split,
)
from .fusion import FusionConfig, FusionNet, assemble_input, cmvae_backward, cmvae_forward, joint_train
from .graph import EdgeStats, JobGraph, build_graph, extend_k_steps, load_graph, save_graph
from .records import CareerRecord, Transition, extract_transitions, parse_records
from .synth import GroundTruth, SynthConfig, generate
from .titles import NodeKey, WordFrequencyTable, aggregate_title, tokenize, word_frequencies
from .views import (
    TrainConfig,
    ViewTables,
    joint_prob,
    neighbor_prob,
    step_balance,
    step_duration,
    step_semantic,
    step_topology,
    train_views,
    transition_balance,
    transition_duration_score,
)

__version__ = "0.1.0"

__all__ = [
    "CareerRecord",
    "DataError",
    "EdgeStats",
    "EvalReport",
    "EvalSplit",
    "FusionConfig",
    "FusionNet",
    "GroundTruth",
    "JobGraph",
    "MultiViewTitleEmbedder",
    "NodeKey",
    "SynthConfig",
    "TrainConfig",
    "Transition",
    "ViewTables",
    "WordFrequencyTable",
    "aggregate_title",
    "assemble_input",
    "build_graph",
    "cmvae_backward",
    "cmvae_forward",
    "evaluate",
    "extend_k_steps",
    "extract_transitions",
    "generate",
    "joint_prob",
    "joint_train",
    "load_graph",
    "mp_at_k",
    "mrr",
    "neighbor_prob",
    "parse_records",
    "random_ranking_baseline",
    "rank_candidates",
    "robustness_sweep",
    "save_graph",
    "step_balance",
    "step_duration",
    "step_semantic",
    "step_topology",
    "threshold_and_split",
    "tokenize",
    "train_views",
    "transition_balance",
    "transition_duration_score",
    "word_frequencies",
]
