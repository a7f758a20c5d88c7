"""Scikit-learn style estimator over a job-transition graph.

``MultiViewTitleEmbedder.fit`` takes a built ``JobGraph``, trains the four
view tables with negative-sampling SGD (the topology view on the k-step
extended edge set) alternating with the fusion autoencoder, and exposes the
bottleneck codes through ``transform``. ``predict`` returns the closest
candidate node per query by cosine similarity.

Ablations are a parameter, not a separate class: restrict ``views`` to a
single view and the estimator ranks directly in that view's space.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .evaluation import rank_candidates
from .fusion import FusionConfig, joint_train
from .graph import JobGraph, extend_k_steps
from .views import TrainConfig, VIEWS

_VARIANT_TABLE = {
    "topology": "topo_self",
    "semantic": "sem_title",
    "balance": "balance",
    "duration": "duration",
}


def check_graph(graph: JobGraph) -> JobGraph:
    """Validate a graph before fitting."""
    if not isinstance(graph, JobGraph):
        raise TypeError(f"expected a JobGraph, got {type(graph).__name__}")
    if graph.n_nodes == 0:
        raise ValueError("cannot fit on an empty graph")
    return graph


class MultiViewTitleEmbedder(BaseEstimator):
    """Multi-view node embeddings fused by a reconstruction autoencoder.

    Parameters
    ----------
    dim : per-view embedding width.
    k_steps, path_decay : topology edge extension; paths of length l <= k_steps
        join the edge set with weight path_decay**(l-1) times the product of
        base weights along the path.
    epochs : outer alternation epochs (one pass per view plus one fusion pass).
    samples_per_epoch : SGD samples per view per epoch; None uses the number
        of pairs of each view (one expected pass over its pair table).
    negatives : noise draws per positive sample.
    learning_rate, min_learning_rate : linear decay endpoints for view SGD.
    noise_power : exponent on the context unigram distribution for
        topology/semantic noise.
    hidden_dim, bottleneck_dim, fusion_learning_rate, fusion_batch,
    leaky_slope : fusion autoencoder shape and SGD settings.
    views : the views to train; a single view skips fusion entirely and
        ranks in that view's own space.
    view_weights, fusion_weight : per-loss weights (gradient multipliers),
        all defaulting to 1.
    end_to_end : let fusion reconstruction gradients flow into the tables.
    seed : seeds table init, samplers, and batch shuffling.
    n_workers : >1 enables racy multi-threaded view updates (training is
        then no longer run-to-run reproducible).
    """

    def __init__(
        self,
        dim: int = 128,
        k_steps: int = 2,
        path_decay: float = 0.5,
        epochs: int = 10,
        samples_per_epoch: int | None = None,
        negatives: int = 5,
        learning_rate: float = 0.025,
        min_learning_rate: float = 1e-4,
        noise_power: float = 0.75,
        hidden_dim: int = 512,
        bottleneck_dim: int = 248,
        fusion_learning_rate: float = 0.01,
        fusion_batch: int = 64,
        fusion_weight: float = 1.0,
        leaky_slope: float = 0.7,
        views: tuple = VIEWS,
        view_weights: dict | None = None,
        end_to_end: bool = False,
        seed: int = 0,
        n_workers: int = 1,
    ):
        self.dim = dim
        self.k_steps = k_steps
        self.path_decay = path_decay
        self.epochs = epochs
        self.samples_per_epoch = samples_per_epoch
        self.negatives = negatives
        self.learning_rate = learning_rate
        self.min_learning_rate = min_learning_rate
        self.noise_power = noise_power
        self.hidden_dim = hidden_dim
        self.bottleneck_dim = bottleneck_dim
        self.fusion_learning_rate = fusion_learning_rate
        self.fusion_batch = fusion_batch
        self.fusion_weight = fusion_weight
        self.leaky_slope = leaky_slope
        self.views = views
        self.view_weights = view_weights
        self.end_to_end = end_to_end
        self.seed = seed
        self.n_workers = n_workers

    def fit(self, graph: JobGraph, y=None):
        graph = check_graph(graph)
        selected = tuple(v for v in VIEWS if v in self.views)
        if not selected:
            raise ValueError(f"views must name at least one of {VIEWS}")
        cfg = TrainConfig(
            learning_rate=self.learning_rate,
            min_learning_rate=self.min_learning_rate,
            negatives=self.negatives,
            epochs=self.epochs,
            seed=self.seed,
            noise_power=self.noise_power,
        )
        fusion_cfg = FusionConfig(
            hidden_dim=self.hidden_dim,
            bottleneck_dim=self.bottleneck_dim,
            learning_rate=self.fusion_learning_rate,
            batch_size=self.fusion_batch,
            leaky_slope=self.leaky_slope,
            end_to_end=self.end_to_end,
            loss_weight=self.fusion_weight,
        )
        extended = extend_k_steps(graph, self.k_steps, self.path_decay)
        schedule = self.samples_per_epoch
        if schedule is None:
            from .views import build_samplers

            samplers = build_samplers(graph, extended, self.noise_power)
            schedule = {v: samplers[v].n_pairs for v in VIEWS}
        model = joint_train(
            graph,
            cfg,
            schedule,
            fusion_cfg=fusion_cfg,
            extended_edges=extended,
            dims=self.dim,
            views=selected,
            view_weights=self.view_weights,
            n_workers=self.n_workers,
        )
        self.graph_ = graph
        self.views_ = selected
        self.tables_ = model.tables
        self.fusion_ = model.net
        self.fused_ = model.fused
        self.view_loss_history_ = model.view_history
        self.fusion_loss_history_ = model.fusion_history
        self.n_nodes_ = graph.n_nodes
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "fused_"):
            raise NotFittedError("call fit before using this estimator")

    def vectors_for(self, variant: str = "fused") -> np.ndarray:
        """Per-node vectors of one model variant.

        "fused" is the bottleneck code; a view name gives that view's node
        table (the topology view contributes its self representation).
        """
        self._check_fitted()
        if variant == "fused":
            return self.fused_
        if variant in _VARIANT_TABLE:
            return getattr(self.tables_, _VARIANT_TABLE[variant])
        raise ValueError(f"unknown variant {variant!r}")

    def variant_vectors(self) -> dict[str, np.ndarray]:
        """Vectors for the fused model and each trained single-view ablation."""
        out = {"fused": self.fused_} if len(self.views_) > 1 else {}
        out.update({v: self.vectors_for(v) for v in self.views_})
        return out

    def transform(self, node_ids=None) -> np.ndarray:
        """Fused vectors for the given node ids (all nodes by default)."""
        self._check_fitted()
        vectors = self.fused_ if len(self.views_) > 1 else self.vectors_for(self.views_[0])
        if node_ids is None:
            return vectors
        return vectors[np.asarray(node_ids, dtype=np.intp)]

    def fit_transform(self, graph: JobGraph, y=None) -> np.ndarray:
        return self.fit(graph).transform()

    def predict(self, node_ids) -> np.ndarray:
        """Closest other node per query id, by cosine over the fused vectors."""
        self._check_fitted()
        return np.array([self.top_matches(int(i), 1)[0][0] for i in np.atleast_1d(node_ids)])

    def top_matches(self, node_id: int, k: int = 10) -> list[tuple[int, float]]:
        """Top-k (node id, cosine) pairs for one query node."""
        self._check_fitted()
        vectors = self.transform()
        candidates = np.array([c for c in range(self.n_nodes_) if c != node_id], dtype=np.intp)
        ranked = rank_candidates(node_id, vectors, candidates)[:k]
        norms = np.linalg.norm(vectors, axis=1)

        def cosine(a: int, b: int) -> float:
            if norms[a] == 0 or norms[b] == 0:
                return 0.0
            return float(vectors[a] @ vectors[b] / (norms[a] * norms[b]))

        return [(c, cosine(node_id, c)) for c in ranked]
