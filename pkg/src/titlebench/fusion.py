"""Collective fusion of the four view vectors through an autoencoder.

The per-node view vectors are concatenated (topology self, semantic,
balance, duration, in that order) and pushed through a two-layer encoder
(LeakyReLU then Tanh) and a two-layer decoder (LeakyReLU then linear).
Training minimizes the mean squared reconstruction error

    L = (1/N) sum_i || X_i - decode(encode(X_i)) ||^2

so the bottleneck code becomes a dense unified representation. Training
alternates with the per-view sampling passes: within each fusion pass the
concatenated inputs are treated as a fixed snapshot, unless end-to-end mode
is enabled, in which case the input gradient flows back into the tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .graph import JobGraph
from .views import (
    TrainConfig,
    ViewTables,
    build_samplers,
    resolve_schedule,
    run_view_pass,
    VIEWS,
)

DEFAULT_HIDDEN = 512
DEFAULT_BOTTLENECK = 248
DEFAULT_LEAKY_SLOPE = 0.7


def leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_relu_grad(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, 1.0, slope)


@dataclass
class FusionNet:
    """Encoder/decoder weights; W matrices map (out, in), biases are vectors."""

    enc_w1: np.ndarray
    enc_b1: np.ndarray
    enc_w2: np.ndarray
    enc_b2: np.ndarray
    dec_w1: np.ndarray
    dec_b1: np.ndarray
    dec_w2: np.ndarray
    dec_b2: np.ndarray
    leaky_slope: float = DEFAULT_LEAKY_SLOPE

    @property
    def input_dim(self) -> int:
        return self.enc_w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.enc_w1.shape[0]

    @property
    def bottleneck_dim(self) -> int:
        return self.enc_w2.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "enc_w1": self.enc_w1,
            "enc_b1": self.enc_b1,
            "enc_w2": self.enc_w2,
            "enc_b2": self.enc_b2,
            "dec_w1": self.dec_w1,
            "dec_b1": self.dec_b1,
            "dec_w2": self.dec_w2,
            "dec_b2": self.dec_b2,
        }

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int, bottleneck_dim: int,
              leaky_slope: float = DEFAULT_LEAKY_SLOPE) -> "FusionNet":
        return cls(
            enc_w1=np.zeros((hidden_dim, input_dim)),
            enc_b1=np.zeros(hidden_dim),
            enc_w2=np.zeros((bottleneck_dim, hidden_dim)),
            enc_b2=np.zeros(bottleneck_dim),
            dec_w1=np.zeros((hidden_dim, bottleneck_dim)),
            dec_b1=np.zeros(hidden_dim),
            dec_w2=np.zeros((input_dim, hidden_dim)),
            dec_b2=np.zeros(input_dim),
            leaky_slope=leaky_slope,
        )

    @classmethod
    def init_random(cls, input_dim: int, hidden_dim: int = DEFAULT_HIDDEN,
                    bottleneck_dim: int = DEFAULT_BOTTLENECK, seed: int = 0,
                    leaky_slope: float = DEFAULT_LEAKY_SLOPE) -> "FusionNet":
        """Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases."""
        rng = np.random.default_rng([seed, 0xF])
        net = cls.zeros(input_dim, hidden_dim, bottleneck_dim, leaky_slope)
        for name in ("enc_w1", "enc_w2", "dec_w1", "dec_w2"):
            w = getattr(net, name)
            bound = np.sqrt(6.0 / (w.shape[0] + w.shape[1]))
            w[...] = rng.uniform(-bound, bound, size=w.shape)
        return net

    def copy(self) -> "FusionNet":
        params = {k: v.copy() for k, v in self.parameters().items()}
        return FusionNet(leaky_slope=self.leaky_slope, **params)


@dataclass
class FusionGrads:
    params: dict[str, np.ndarray]
    d_input: np.ndarray | None = None


def assemble_input(tables: ViewTables, node: int) -> np.ndarray:
    """Concatenated per-view vector for one node (topology, semantic, balance, duration)."""
    for name in ("topo_self", "sem_title", "balance", "duration"):
        if node >= len(getattr(tables, name)):
            raise ValueError(f"node {node} has no {name} row")
    return np.concatenate(
        (tables.topo_self[node], tables.sem_title[node], tables.balance[node], tables.duration[node])
    )


def assemble_inputs(tables: ViewTables, views=VIEWS) -> np.ndarray:
    """Concatenation of the selected view tables for every node, fixed order."""
    parts = {
        "topology": tables.topo_self,
        "semantic": tables.sem_title,
        "balance": tables.balance,
        "duration": tables.duration,
    }
    return np.concatenate([parts[v] for v in VIEWS if v in views], axis=1)


def _forward_trace(net: FusionNet, X: np.ndarray):
    z1 = X @ net.enc_w1.T + net.enc_b1
    a1 = leaky_relu(z1, net.leaky_slope)
    z2 = a1 @ net.enc_w2.T + net.enc_b2
    code = np.tanh(z2)
    z3 = code @ net.dec_w1.T + net.dec_b1
    a3 = leaky_relu(z3, net.leaky_slope)
    recon = a3 @ net.dec_w2.T + net.dec_b2
    return z1, a1, code, z3, a3, recon


def cmvae_forward(net: FusionNet, X: np.ndarray):
    """Bottleneck code, reconstruction, and squared-error loss.

    A single vector yields its own squared error; a batch yields the mean
    over rows (the 1/N objective).
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if X.shape[-1] != net.input_dim:
        raise ValueError(f"input dim {X.shape[-1]} != network input dim {net.input_dim}")
    X2 = np.atleast_2d(X)
    _, _, code, _, _, recon = _forward_trace(net, X2)
    losses = ((X2 - recon) ** 2).sum(axis=1)
    if single:
        return code[0], recon[0], float(losses[0])
    return code, recon, float(losses.mean())


def cmvae_backward(net: FusionNet, X: np.ndarray, want_input_grad: bool = False) -> FusionGrads:
    """Exact gradients of the mean batch loss for every weight and bias."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != net.input_dim:
        raise ValueError(f"input dim {X.shape[1]} != network input dim {net.input_dim}")
    n = X.shape[0]
    z1, a1, code, z3, a3, recon = _forward_trace(net, X)

    d_recon = 2.0 * (recon - X) / n
    d_a3 = d_recon @ net.dec_w2
    d_z3 = d_a3 * leaky_relu_grad(z3, net.leaky_slope)
    d_code = d_z3 @ net.dec_w1
    d_z2 = d_code * (1.0 - code**2)
    d_a1 = d_z2 @ net.enc_w2
    d_z1 = d_a1 * leaky_relu_grad(z1, net.leaky_slope)

    grads = {
        "dec_w2": d_recon.T @ a3,
        "dec_b2": d_recon.sum(axis=0),
        "dec_w1": d_z3.T @ code,
        "dec_b1": d_z3.sum(axis=0),
        "enc_w2": d_z2.T @ a1,
        "enc_b2": d_z2.sum(axis=0),
        "enc_w1": d_z1.T @ X,
        "enc_b1": d_z1.sum(axis=0),
    }
    d_input = None
    if want_input_grad:
        # reconstruction target term plus the encoder path
        d_input = d_z1 @ net.enc_w1 - d_recon
    return FusionGrads(params=grads, d_input=d_input)


@dataclass
class FusionConfig:
    hidden_dim: int = DEFAULT_HIDDEN
    bottleneck_dim: int = DEFAULT_BOTTLENECK
    learning_rate: float = 0.01
    batch_size: int = 64
    leaky_slope: float = DEFAULT_LEAKY_SLOPE
    end_to_end: bool = False
    loss_weight: float = 1.0


def run_fusion_pass(
    net: FusionNet,
    X: np.ndarray,
    cfg: FusionConfig,
    rng: np.random.Generator,
    tables: ViewTables | None = None,
    views=VIEWS,
) -> float:
    """One shuffled SGD epoch over all rows of X; returns the mean loss.

    In end-to-end mode the input gradient is applied to the underlying view
    table rows as well (X must then be row-aligned with the tables).
    """
    n = X.shape[0]
    order = rng.permutation(n)
    lr = cfg.learning_rate * cfg.loss_weight
    total = 0.0
    selected = [v for v in VIEWS if v in views]
    for lo in range(0, n, cfg.batch_size):
        rows = order[lo : lo + cfg.batch_size]
        batch = X[rows]
        _, _, loss = cmvae_forward(net, batch)
        grads = cmvae_backward(net, batch, want_input_grad=cfg.end_to_end)
        params = net.parameters()
        for name, g in grads.params.items():
            params[name] -= lr * g
        if cfg.end_to_end and tables is not None:
            parts = {
                "topology": tables.topo_self,
                "semantic": tables.sem_title,
                "balance": tables.balance,
                "duration": tables.duration,
            }
            offset = 0
            for v in selected:
                table = parts[v]
                width = table.shape[1]
                table[rows] -= lr * grads.d_input[:, offset : offset + width]
                X[rows, offset : offset + width] = table[rows]
                offset += width
        total += loss * len(rows)
    return total / n


def fused_vectors(net: FusionNet, X: np.ndarray) -> np.ndarray:
    code, _, _ = cmvae_forward(net, np.atleast_2d(X))
    return code


@dataclass
class JointModel:
    tables: ViewTables
    net: FusionNet
    fused: np.ndarray
    view_history: dict[str, list[float]] = field(default_factory=dict)
    fusion_history: list[float] = field(default_factory=list)


def joint_train(
    graph: JobGraph,
    cfg: TrainConfig,
    schedule,
    fusion_cfg: FusionConfig | None = None,
    extended_edges=None,
    dims: Mapping[str, int] | int = 128,
    views=VIEWS,
    view_weights: Mapping[str, float] | None = None,
    n_workers: int = 1,
) -> JointModel:
    """Alternating optimization: per-view sampling passes, then a fusion pass.

    Each outer epoch runs one pass per selected view followed by one full
    SGD sweep of the autoencoder over the current input snapshots. After the
    final epoch the bottleneck codes of all nodes are materialized.
    """
    fusion_cfg = fusion_cfg or FusionConfig()
    samplers = build_samplers(graph, extended_edges, cfg.noise_power)
    per_epoch = resolve_schedule(schedule, samplers)
    weights = dict(view_weights or {})
    selected = [v for v in VIEWS if v in views]
    tables = ViewTables.init_random(graph.n_nodes, len(graph.vocabulary), dims, cfg.seed)
    input_dim = assemble_inputs(tables, selected).shape[1]
    net = FusionNet.init_random(
        input_dim, fusion_cfg.hidden_dim, fusion_cfg.bottleneck_dim,
        seed=cfg.seed, leaky_slope=fusion_cfg.leaky_slope,
    )
    rngs = {v: np.random.default_rng([cfg.seed, 1 + k]) for k, v in enumerate(VIEWS)}
    fusion_rng = np.random.default_rng([cfg.seed, 0x5])

    view_history: dict[str, list[float]] = {v: [] for v in selected}
    fusion_history: list[float] = []
    for epoch in range(cfg.epochs):
        for view in selected:
            n = per_epoch[view]
            loss = run_view_pass(
                tables, samplers[view], cfg, rngs[view], n,
                step_offset=epoch * n,
                total_steps=max(1, cfg.epochs * n),
                lr_scale=float(weights.get(view, 1.0)),
                n_workers=n_workers,
            )
            view_history[view].append(loss)
        X = assemble_inputs(tables, selected)
        fusion_history.append(
            run_fusion_pass(net, X, fusion_cfg, fusion_rng, tables=tables, views=selected)
        )
    fused = fused_vectors(net, assemble_inputs(tables, selected))
    return JointModel(tables, net, fused, view_history, fusion_history)
