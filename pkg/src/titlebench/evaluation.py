"""Link-prediction evaluation: splits, cosine ranking, MRR and MP@K.

Protocol: keep base edges with weight strictly above a threshold, shuffle
them by seed, partition 8/1/1 into train/valid/test, then drop valid/test
edges touching a node absent from the training edges (cold start). A model
is scored by ranking, for every held-out edge (i, j), all candidate nodes
against the query i by cosine similarity and recording the rank of j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError
from .graph import JobGraph, subgraph_with_edges

DEFAULT_WEIGHT_THRESHOLD = 5.0
DEFAULT_KS = (5, 10, 15, 20)
DEFAULT_RATES = (0.9, 0.8, 0.7, 0.6)


@dataclass
class EvalSplit:
    train: list[tuple[int, int]]
    valid: list[tuple[int, int]]
    test: list[tuple[int, int]]
    dropped: list[tuple[int, int]] = field(default_factory=list)
    threshold: float = DEFAULT_WEIGHT_THRESHOLD
    seed: int = 0

    @property
    def candidate_nodes(self) -> np.ndarray:
        nodes = {i for edge in self.train for i in edge}
        return np.array(sorted(nodes), dtype=np.intp)


@dataclass
class EvalReport:
    model: str
    mrr: float
    precision_at: dict[int, float]
    n_queries: int
    subsample_rate: float = 1.0

    def row(self) -> str:
        cells = [self.model, format(self.subsample_rate, "g"), f"{self.mrr:.6f}"]
        cells += [f"{self.precision_at[k]:.6f}" for k in sorted(self.precision_at)]
        return "\t".join(cells)


def threshold_and_split(
    graph: JobGraph,
    weight_threshold: float = DEFAULT_WEIGHT_THRESHOLD,
    seed: int = 0,
) -> EvalSplit:
    """8/1/1 split of the base edges with weight strictly above the threshold."""
    surviving = sorted(pair for pair, e in graph.edges.items() if e.w > weight_threshold)
    n = len(surviving)
    part = n // 10
    if part == 0:
        raise DataError(
            f"only {n} edges exceed weight threshold {weight_threshold}; "
            "need at least 10 to form an 8/1/1 split"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    shuffled = [surviving[k] for k in order]
    train = shuffled[: n - 2 * part]
    valid = shuffled[n - 2 * part : n - part]
    test = shuffled[n - part :]

    train_nodes = {i for edge in train for i in edge}
    dropped = [e for e in valid + test if e[0] not in train_nodes or e[1] not in train_nodes]
    dropped_set = set(dropped)
    return EvalSplit(
        train=train,
        valid=[e for e in valid if e not in dropped_set],
        test=[e for e in test if e not in dropped_set],
        dropped=dropped,
        threshold=weight_threshold,
        seed=seed,
    )


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return vectors / safe  # zero-norm rows stay zero: cosine 0 to everything


def rank_candidates(
    query: int,
    vectors: np.ndarray,
    candidates: Sequence[int] | np.ndarray,
) -> list[int]:
    """Candidates by descending cosine similarity to the query node.

    Ties (including the all-zero-query case, where every similarity is 0)
    break by ascending node id.
    """
    cand = np.asarray(candidates, dtype=np.intp)
    unit = _unit_rows(np.asarray(vectors, dtype=np.float64))
    sims = unit[cand] @ unit[query]
    order = np.lexsort((cand, -sims))
    return [int(c) for c in cand[order]]


def rank_of_target(query: int, target: int, unit_vectors: np.ndarray, cand: np.ndarray) -> int:
    """1-based rank of the target under the rank_candidates ordering."""
    sims = unit_vectors[cand] @ unit_vectors[query]
    target_pos = np.nonzero(cand == target)[0]
    if target_pos.size == 0:
        raise ValueError(f"target {target} not among candidates")
    s = sims[target_pos[0]]
    ahead = int((sims > s).sum()) + int(((sims == s) & (cand < target)).sum())
    return ahead + 1


def mrr(ranks: Sequence[int]) -> float:
    """Mean reciprocal rank over the given 1-based ranks."""
    if len(ranks) == 0:
        raise ValueError("rank list must be non-empty")
    return float(np.mean([1.0 / r for r in ranks]))


def mp_at_k(ranks: Sequence[int], k: int) -> float:
    """Fraction of ranks within the top k."""
    if len(ranks) == 0:
        raise ValueError("rank list must be non-empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(np.mean([1.0 if r <= k else 0.0 for r in ranks]))


def evaluate(
    vectors: np.ndarray,
    split: EvalSplit,
    ks: Iterable[int] = DEFAULT_KS,
    model: str = "model",
    subsample_rate: float = 1.0,
) -> EvalReport:
    """Rank every test edge's destination from its source; report MRR and MP@K.

    Evaluation is directed: edge (i, j) is queried from i only. The query
    node itself is excluded from its candidate list.
    """
    cand_all = split.candidate_nodes
    unit = _unit_rows(np.asarray(vectors, dtype=np.float64))
    ranks = []
    for (i, j) in split.test:
        cand = cand_all[cand_all != i]
        ranks.append(rank_of_target(i, j, unit, cand))
    return EvalReport(
        model=model,
        mrr=mrr(ranks),
        precision_at={k: mp_at_k(ranks, k) for k in ks},
        n_queries=len(ranks),
        subsample_rate=subsample_rate,
    )


def random_ranking_baseline(
    n_candidates: int,
    n_queries: int,
    trials: int = 200,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo mean and std of MRR when ranks are uniform on 1..n_candidates."""
    rng = np.random.default_rng(seed)
    ranks = rng.integers(1, n_candidates + 1, size=(trials, n_queries))
    trial_mrrs = (1.0 / ranks).mean(axis=1)
    return float(trial_mrrs.mean()), float(trial_mrrs.std())


def subsample_train_edges(split: EvalSplit, rate: float, seed: int = 0) -> list[tuple[int, int]]:
    """Retain floor(rate * |train|) training edges, uniformly at random.

    Rates share one seeded permutation, so lower rates retain nested subsets
    of higher ones: sweeping r compares progressively sparser versions of
    the same training set instead of unrelated draws.
    """
    if not 0 < rate <= 1:
        raise ValueError("rate must be in (0, 1]")
    n_keep = int(np.floor(rate * len(split.train)))
    keep = np.random.default_rng(seed).permutation(len(split.train))[:n_keep]
    return [split.train[k] for k in sorted(keep)]


def robustness_sweep(
    graph: JobGraph,
    trainer: Callable[[JobGraph, EvalSplit], Mapping[str, np.ndarray]],
    rates: Iterable[float] = DEFAULT_RATES,
    weight_threshold: float = DEFAULT_WEIGHT_THRESHOLD,
    seed: int = 0,
    ks: Iterable[int] = DEFAULT_KS,
    split: EvalSplit | None = None,
) -> list[EvalReport]:
    """Retrain on subsampled training edges and score on the untouched test set.

    ``trainer(train_graph, split)`` returns vectors per model variant; one
    report per (variant, rate) comes back. A rate of 1.0 reproduces the
    baseline evaluation.
    """
    if split is None:
        split = threshold_and_split(graph, weight_threshold, seed)
    reports = []
    for rate in rates:
        retained = split.train if rate == 1.0 else subsample_train_edges(split, rate, seed)
        train_graph = subgraph_with_edges(graph, retained)
        for name, vectors in trainer(train_graph, split).items():
            reports.append(evaluate(vectors, split, ks, model=name, subsample_rate=rate))
    return reports
