"""Per-view embedding tables trained by negative-sampling SGD.

Four views, each a softmax-style objective over weighted pairs:

  topology:  node i predicts neighbor j, pairs drawn from the (optionally
             k-extended) edge set with probability proportional to w_ij;
  semantic:  title i predicts its words, pairs drawn proportional to the
             word's in-title frequency;
  balance:   endpoints of bidirectional edges pulled together, pairs drawn
             proportional to exp(-|w_ij - w_ji| / (w_ij * w_ji));
  duration:  endpoints of duration-bearing edges pulled together, pairs
             drawn proportional to exp(-t_ij) with t_ij in years.

The exact softmax / joint-probability objectives are approximated with
negative sampling: one observed context against ``negatives`` noise draws.
Pair weights enter through the sampling frequency (equivalent in
expectation to weighting the gradient). Noise follows the context unigram
distribution raised to ``noise_power`` for topology/semantic and is uniform
over nodes for balance/duration, supplying the repulsive term without which
the balance and duration objectives collapse onto colinear vectors.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .graph import EdgeStats, JobGraph

VIEWS = ("topology", "semantic", "balance", "duration")

DEFAULT_DIM = 128


def transition_balance(w_ij: float, w_ji: float) -> float:
    """exp(-|w_ij - w_ji| / (w_ij * w_ji)); 1.0 when the two flows match."""
    if w_ij <= 0 or w_ji <= 0:
        raise ValueError("transition weights must be positive")
    return math.exp(-abs(w_ij - w_ji) / (w_ij * w_ji))


def transition_duration_score(t_years: float) -> float:
    """exp(-t); 1.0 for an instant move, decaying with mean source tenure."""
    if t_years < 0:
        raise ValueError("duration must be non-negative")
    return math.exp(-t_years)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def joint_prob(x: np.ndarray, y: np.ndarray) -> float:
    """Sigmoid of the dot product of two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(sigmoid(x @ y))


@dataclass
class ViewTables:
    """The learnable embedding tables, one row per node (or word)."""

    topo_self: np.ndarray
    topo_ctx: np.ndarray
    sem_title: np.ndarray
    sem_word: np.ndarray
    balance: np.ndarray
    duration: np.ndarray

    @classmethod
    def init_random(
        cls,
        n_nodes: int,
        n_words: int,
        dims: Mapping[str, int] | int = DEFAULT_DIM,
        seed: int = 0,
    ) -> "ViewTables":
        """Uniform init in (-0.5/dim, +0.5/dim) per table, seeded."""
        if isinstance(dims, int):
            dims = {v: dims for v in VIEWS}
        rng = np.random.default_rng([seed, 0xE])

        def table(rows: int, dim: int) -> np.ndarray:
            return rng.uniform(-0.5 / dim, 0.5 / dim, size=(rows, dim))

        return cls(
            topo_self=table(n_nodes, dims["topology"]),
            topo_ctx=table(n_nodes, dims["topology"]),
            sem_title=table(n_nodes, dims["semantic"]),
            sem_word=table(n_words, dims["semantic"]),
            balance=table(n_nodes, dims["balance"]),
            duration=table(n_nodes, dims["duration"]),
        )

    def copy(self) -> "ViewTables":
        return ViewTables(
            topo_self=self.topo_self.copy(),
            topo_ctx=self.topo_ctx.copy(),
            sem_title=self.sem_title.copy(),
            sem_word=self.sem_word.copy(),
            balance=self.balance.copy(),
            duration=self.duration.copy(),
        )


@dataclass
class TrainConfig:
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    negatives: int = 5
    epochs: int = 10
    seed: int = 0
    noise_power: float = 0.75

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.negatives < 1:
            raise ValueError("negatives_per_positive must be >= 1")


def neighbor_prob(i: int, j: int, tables: ViewTables, candidates) -> float:
    """Exact softmax probability of node j as a neighbor of node i.

    Softmax of topo_ctx . topo_self[i] over ``candidates``; used by tests
    against the negative-sampling approximation, never during training.
    """
    cand = np.asarray(list(candidates), dtype=np.intp)
    if cand.size == 0:
        raise ValueError("candidate set must be non-empty")
    matches = np.nonzero(cand == j)[0]
    if matches.size == 0:
        raise ValueError(f"node {j} not in candidate set")
    logits = tables.topo_ctx[cand] @ tables.topo_self[i]
    logits -= logits.max()
    weights = np.exp(logits)
    return float(weights[matches[0]] / weights.sum())


# --- negative-sampling kernel -------------------------------------------------

def _ns_loss_and_grads(query: np.ndarray, contexts: np.ndarray):
    """Loss and gradients for one positive context (row 0) plus noise rows.

    loss = -log sigma(c0 . q) - sum_k log sigma(-ck . q)
    """
    logits = contexts @ query
    loss = np.logaddexp(0.0, -logits[0]) + np.logaddexp(0.0, logits[1:]).sum()
    err = sigmoid(logits)
    err[0] -= 1.0  # d loss / d logit
    grad_q = err @ contexts
    grad_ctx = np.outer(err, query)
    return float(loss), grad_q, grad_ctx


def _sample_loss(q_table, q_idx, c_table, c_indices) -> float:
    logits = c_table[c_indices] @ q_table[q_idx]
    return float(np.logaddexp(0.0, -logits[0]) + np.logaddexp(0.0, logits[1:]).sum())


def _step(q_table, q_idx, c_table, c_indices, lr: float) -> float:
    contexts = c_table[c_indices]
    loss, grad_q, grad_ctx = _ns_loss_and_grads(q_table[q_idx], contexts)
    if lr != 0.0:
        q_table[q_idx] -= lr * grad_q
        np.subtract.at(c_table, c_indices, lr * grad_ctx)
    return loss


def step_topology(tables: ViewTables, i: int, j: int, negatives, lr: float) -> float:
    """One SGD step pulling topo_ctx[j] toward topo_self[i], pushing noise away."""
    return _step(tables.topo_self, i, tables.topo_ctx, _ctx_indices(j, negatives), lr)


def step_semantic(tables: ViewTables, node: int, word: int, negatives, lr: float) -> float:
    return _step(tables.sem_title, node, tables.sem_word, _ctx_indices(word, negatives), lr)


def step_balance(tables: ViewTables, i: int, j: int, negatives, lr: float) -> float:
    return _step(tables.balance, i, tables.balance, _ctx_indices(j, negatives), lr)


def step_duration(tables: ViewTables, i: int, j: int, negatives, lr: float) -> float:
    return _step(tables.duration, i, tables.duration, _ctx_indices(j, negatives), lr)


def topology_sample_loss(tables, i, j, negatives) -> float:
    return _sample_loss(tables.topo_self, i, tables.topo_ctx, _ctx_indices(j, negatives))


def semantic_sample_loss(tables, node, word, negatives) -> float:
    return _sample_loss(tables.sem_title, node, tables.sem_word, _ctx_indices(word, negatives))


def balance_sample_loss(tables, i, j, negatives) -> float:
    return _sample_loss(tables.balance, i, tables.balance, _ctx_indices(j, negatives))


def duration_sample_loss(tables, i, j, negatives) -> float:
    return _sample_loss(tables.duration, i, tables.duration, _ctx_indices(j, negatives))


def _ctx_indices(positive: int, negatives) -> np.ndarray:
    return np.concatenate(([positive], np.asarray(negatives, dtype=np.intp)))


# --- pair tables and samplers ---------------------------------------------------

@dataclass
class ViewSampler:
    """Pre-tabulated positive pairs and the noise distribution of one view."""

    name: str
    query_ids: np.ndarray
    context_ids: np.ndarray
    weights: np.ndarray
    noise_cdf: np.ndarray | None  # None: uniform over the context universe
    n_context_universe: int
    noise_support: int = field(init=False)
    _weight_cdf: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        total = self.weights.sum()
        self._weight_cdf = np.cumsum(self.weights) / total if total > 0 else np.array([])
        if self.noise_cdf is None:
            self.noise_support = self.n_context_universe
        else:
            self.noise_support = int(np.count_nonzero(np.diff(self.noise_cdf, prepend=0.0) > 0))

    @property
    def n_pairs(self) -> int:
        return len(self.query_ids)

    def draw_pairs(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = np.searchsorted(self._weight_cdf, rng.random(n), side="right")
        return np.minimum(idx, self.n_pairs - 1)

    def draw_negatives(self, rng: np.random.Generator, n: int, k: int, avoid: np.ndarray | None = None) -> np.ndarray:
        """(n, k) noise context ids; entries colliding with ``avoid`` are redrawn."""
        if self.noise_cdf is None:
            negs = rng.integers(0, self.n_context_universe, size=(n, k))
        else:
            idx = np.searchsorted(self.noise_cdf, rng.random((n, k)), side="right")
            negs = np.minimum(idx, len(self.noise_cdf) - 1)
        if avoid is not None and self.noise_support > 1:
            mask = negs == avoid[:, None]
            while mask.any():
                negs[mask] = self.draw_negatives(rng, int(mask.sum()), 1).ravel()
                mask = negs == avoid[:, None]
        return negs


def _noise_cdf(weights: np.ndarray, power: float) -> np.ndarray | None:
    total = weights.sum()
    if total <= 0:
        return None
    noise = weights**power
    return np.cumsum(noise) / noise.sum()


def build_samplers(
    graph: JobGraph,
    extended_edges: Mapping[tuple[int, int], EdgeStats] | None = None,
    noise_power: float = 0.75,
) -> dict[str, ViewSampler]:
    """Per-view pair tables from a built graph.

    ``extended_edges`` feeds the topology view (defaults to the base edges);
    the other three views always read the base edges.
    """
    n = graph.n_nodes
    n_words = len(graph.vocabulary)
    samplers: dict[str, ViewSampler] = {}

    topo_edges = extended_edges if extended_edges is not None else graph.edges
    pairs = sorted(topo_edges)
    src = np.array([p[0] for p in pairs], dtype=np.intp)
    dst = np.array([p[1] for p in pairs], dtype=np.intp)
    w = np.array([topo_edges[p].w for p in pairs])
    ctx_freq = np.zeros(n)
    np.add.at(ctx_freq, dst, w)
    samplers["topology"] = ViewSampler(
        "topology", src, dst, w, _noise_cdf(ctx_freq, noise_power), n
    )

    nodes, words, freqs = [], [], []
    word_freq = np.zeros(max(n_words, 1))
    for node_id, key in enumerate(graph.keys):
        seen: dict[int, int] = {}
        for word in key.title:
            wid = graph.vocabulary[word]
            seen[wid] = seen.get(wid, 0) + 1
        for wid, count in sorted(seen.items()):
            nodes.append(node_id)
            words.append(wid)
            freqs.append(count)
            word_freq[wid] += count
    samplers["semantic"] = ViewSampler(
        "semantic",
        np.array(nodes, dtype=np.intp),
        np.array(words, dtype=np.intp),
        np.array(freqs, dtype=np.float64),
        _noise_cdf(word_freq, noise_power),
        n_words,
    )

    bal_i, bal_j, bal_w = [], [], []
    for (i, j) in sorted(graph.edges):
        if i < j and (j, i) in graph.edges:
            tb = transition_balance(graph.edges[(i, j)].w, graph.edges[(j, i)].w)
            bal_i += [i, j]
            bal_j += [j, i]
            bal_w += [tb, tb]
    samplers["balance"] = ViewSampler(
        "balance",
        np.array(bal_i, dtype=np.intp),
        np.array(bal_j, dtype=np.intp),
        np.array(bal_w, dtype=np.float64),
        None,
        n,
    )

    dur_i, dur_j, dur_w = [], [], []
    for (i, j) in sorted(graph.edges):
        t = graph.edges[(i, j)].t_avg_years
        if t is not None:
            dur_i.append(i)
            dur_j.append(j)
            dur_w.append(transition_duration_score(t))
    samplers["duration"] = ViewSampler(
        "duration",
        np.array(dur_i, dtype=np.intp),
        np.array(dur_j, dtype=np.intp),
        np.array(dur_w, dtype=np.float64),
        None,
        n,
    )
    return samplers


_STEP_FN = {
    "topology": step_topology,
    "semantic": step_semantic,
    "balance": step_balance,
    "duration": step_duration,
}


def resolve_schedule(schedule, samplers: Mapping[str, ViewSampler]) -> dict[str, int]:
    """Samples per epoch per view; an int applies to every view."""
    if isinstance(schedule, int):
        resolved = {v: schedule for v in VIEWS}
    else:
        resolved = {v: int(schedule.get(v, 0)) for v in VIEWS}
    return {v: (n if samplers[v].n_pairs > 0 else 0) for v, n in resolved.items()}


def run_view_pass(
    tables: ViewTables,
    sampler: ViewSampler,
    cfg: TrainConfig,
    rng: np.random.Generator,
    n_samples: int,
    step_offset: int,
    total_steps: int,
    lr_scale: float = 1.0,
    n_workers: int = 1,
) -> float:
    """One sampling pass over a view; returns the mean sample loss.

    Deterministic when ``n_workers == 1``. With more workers the pre-drawn
    samples are sharded across threads that update the shared tables without
    synchronization (racy by design; results vary run to run).
    """
    if n_samples <= 0 or sampler.n_pairs == 0:
        return float("nan")
    pair_idx = sampler.draw_pairs(rng, n_samples)
    q_all = sampler.query_ids[pair_idx]
    c_all = sampler.context_ids[pair_idx]
    negs = sampler.draw_negatives(rng, n_samples, cfg.negatives, avoid=c_all)

    step = _STEP_FN[sampler.name]
    lr0 = cfg.learning_rate * lr_scale
    frac = (step_offset + np.arange(n_samples)) / total_steps
    lrs = np.maximum(cfg.min_learning_rate * lr_scale, lr0 * (1.0 - frac))

    def run_chunk(lo: int, hi: int) -> float:
        total = 0.0
        for t in range(lo, hi):
            total += step(tables, int(q_all[t]), int(c_all[t]), negs[t], lrs[t])
        return total

    if n_workers <= 1:
        return run_chunk(0, n_samples) / n_samples
    bounds = np.linspace(0, n_samples, n_workers + 1, dtype=int)
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        futures = [pool.submit(run_chunk, int(lo), int(hi)) for lo, hi in zip(bounds, bounds[1:])]
        return sum(f.result() for f in futures) / n_samples


def train_views(
    graph: JobGraph,
    cfg: TrainConfig,
    schedule,
    extended_edges=None,
    tables: ViewTables | None = None,
    dims: Mapping[str, int] | int = DEFAULT_DIM,
    view_weights: Mapping[str, float] | None = None,
    n_workers: int = 1,
) -> tuple[ViewTables, dict[str, list[float]]]:
    """Train the four view tables for ``cfg.epochs`` alternating passes.

    Each view consumes its own seeded RNG stream, so a single view's
    trajectory is unchanged by whether the other views train alongside it.
    Returns the tables and the per-view mean-loss history (one value per
    epoch; NaN for views with no pairs).
    """
    samplers = build_samplers(graph, extended_edges, cfg.noise_power)
    per_epoch = resolve_schedule(schedule, samplers)
    weights = dict(view_weights or {})
    if tables is None:
        tables = ViewTables.init_random(graph.n_nodes, len(graph.vocabulary), dims, cfg.seed)
    rngs = {v: np.random.default_rng([cfg.seed, 1 + k]) for k, v in enumerate(VIEWS)}
    history: dict[str, list[float]] = {v: [] for v in VIEWS}
    for epoch in range(cfg.epochs):
        for view in VIEWS:
            n = per_epoch[view]
            loss = run_view_pass(
                tables,
                samplers[view],
                cfg,
                rngs[view],
                n,
                step_offset=epoch * n,
                total_steps=max(1, cfg.epochs * n),
                lr_scale=float(weights.get(view, 1.0)),
                n_workers=n_workers,
            )
            history[view].append(loss)
    return tables, history
