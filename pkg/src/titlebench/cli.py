"""Command-line pipeline: gen-synth, aggregate, build-graph, train, eval, predict.

Exit codes: 0 ok, 1 usage error, 2 data error (missing/malformed inputs),
3 internal error. All artifacts are written atomically; identical configs
and seeds reproduce byte-identical files in single-worker mode.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import artifacts
from .config import RunConfig, resolve_config
from .errors import DataError
from .estimator import MultiViewTitleEmbedder
from .evaluation import (
    EvalSplit,
    evaluate,
    rank_candidates,
    robustness_sweep,
    threshold_and_split,
)
from .graph import JobGraph, build_graph, load_graph, save_graph, subgraph_with_edges
from .records import parse_records
from .synth import SynthConfig, generate, write_ground_truth, write_records
from .titles import aggregate_title, word_frequencies

TABLE_FILES = {
    "topology_self": "topology_self.emb",
    "topology_ctx": "topology_ctx.emb",
    "semantic_title": "semantic_title.emb",
    "semantic_word": "semantic_word.emb",
    "balance": "balance.emb",
    "duration": "duration.emb",
}
FUSED_FILE = "fused.emb"
NET_FILE = "fusion.net"
SPLIT_FILE = "split.tsv"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2; usage errors are 1
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--seed", type=int)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--samples-per-epoch", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--min-learning-rate", type=float)
    p.add_argument("--noise-power", type=float)
    p.add_argument("--k-steps", type=int)
    p.add_argument("--path-decay", type=float)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--bottleneck-dim", type=int)
    p.add_argument("--fusion-learning-rate", type=float)
    p.add_argument("--fusion-batch", type=int)
    p.add_argument("--leaky-slope", type=float)
    p.add_argument("--views", help="comma list drawn from topology,semantic,balance,duration")
    p.add_argument("--view-weights", help="per-view loss weights, e.g. topology:1.0,semantic:2.0")
    p.add_argument("--fusion-weight", type=float, help="loss weight of the fusion objective")
    p.add_argument("--e2e", dest="end_to_end", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--weight-threshold", type=float)
    p.add_argument("--split-seed", type=int)
    p.add_argument("--n-workers", type=int)
    p.add_argument(
        "--deterministic",
        action="store_true",
        default=False,
        help="force single-threaded training regardless of n_workers",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="titlebench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", parents=[], help="generate synthetic career records")
    _add_common(p)
    p.add_argument("--out", help="records TSV output path")
    p.add_argument("--truth", help="ground-truth TSV output path")
    for flag, typ in (
        ("--n-companies", int), ("--n-levels", int), ("--n-functions", int),
        ("--n-persons", int), ("--mean-tenure-years", float),
        ("--lateral-move-prob", float), ("--promote-tenure-factor", float),
        ("--noise-word-prob", float), ("--synth-seed", int),
    ):
        p.add_argument(flag, type=typ)

    p = sub.add_parser("aggregate", help="emit raw title -> normalized title map")
    _add_common(p)
    p.add_argument("--records")
    p.add_argument("--out")
    p.add_argument("--min-freq", type=int)

    p = sub.add_parser("build-graph", help="build the transition graph from records")
    _add_common(p)
    p.add_argument("--records")
    p.add_argument("--out")
    p.add_argument("--min-freq", type=int)

    p = sub.add_parser("train", help="split the graph and train the embedding model")
    _add_common(p)
    p.add_argument("--graph")
    p.add_argument("--out-dir", dest="model_dir")
    _add_train_flags(p)

    p = sub.add_parser("eval", help="link-prediction report for a trained model")
    _add_common(p)
    p.add_argument("--graph")
    p.add_argument("--model-dir")
    p.add_argument("--out")
    p.add_argument("--eval-ks")
    p.add_argument("--rates", help="robustness subsample rates, e.g. 0.9,0.8,0.7,0.6")
    _add_train_flags(p)

    p = sub.add_parser("predict", help="top-k matches for a 'title@company' query")
    _add_common(p)
    p.add_argument("--graph")
    p.add_argument("--model-dir")
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--min-freq", type=int)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    cfg = resolve_config(getattr(args, "config", None), overrides)
    if getattr(args, "deterministic", False):
        cfg.n_workers = 1
    return cfg


def _require(path: str | None, what: str) -> str:
    if not path:
        raise DataError(f"missing required path: {what}")
    if not os.path.exists(path):
        raise DataError(f"missing file: {path} ({what})")
    return path


def _estimator(cfg: RunConfig) -> MultiViewTitleEmbedder:
    return MultiViewTitleEmbedder(
        dim=cfg.dim,
        k_steps=cfg.k_steps,
        path_decay=cfg.path_decay,
        epochs=cfg.epochs,
        samples_per_epoch=cfg.samples_per_epoch,
        negatives=cfg.negatives,
        learning_rate=cfg.learning_rate,
        min_learning_rate=cfg.min_learning_rate,
        noise_power=cfg.noise_power,
        hidden_dim=cfg.hidden_dim,
        bottleneck_dim=cfg.bottleneck_dim,
        fusion_learning_rate=cfg.fusion_learning_rate,
        fusion_batch=cfg.fusion_batch,
        fusion_weight=cfg.fusion_weight,
        leaky_slope=cfg.leaky_slope,
        views=tuple(cfg.views),
        view_weights=cfg.view_weights,
        end_to_end=cfg.end_to_end,
        seed=cfg.seed,
        n_workers=cfg.n_workers,
    )


def _load_records(cfg: RunConfig):
    path = _require(cfg.records, "--records")
    with open(path, encoding="utf-8") as f:
        result = parse_records(f)
    print(f"parsed {len(result.records)} records, skipped {result.skipped_lines} lines")
    return result


def cmd_gen_synth(cfg: RunConfig) -> int:
    out = cfg.out or "records.tsv"
    truth_path = cfg.truth or "ground_truth.tsv"
    synth = SynthConfig(
        n_companies=cfg.n_companies,
        n_levels=cfg.n_levels,
        n_functions=cfg.n_functions,
        n_persons=cfg.n_persons,
        mean_tenure_years=cfg.mean_tenure_years,
        lateral_move_prob=cfg.lateral_move_prob,
        promote_tenure_factor=cfg.promote_tenure_factor,
        noise_word_prob=cfg.noise_word_prob,
        seed=cfg.synth_seed,
    )
    records, truth = generate(synth)
    write_records(out, records)
    write_ground_truth(truth_path, truth)
    print(f"wrote {len(records)} records to {out}; ground truth to {truth_path}")
    return 0


def cmd_aggregate(cfg: RunConfig) -> int:
    result = _load_records(cfg)
    out = cfg.out or "title_map.tsv"
    freq = word_frequencies(r.title for r in result.records)
    seen = sorted({r.title for r in result.records})
    with artifacts.atomic_write(out) as f:
        for title in seen:
            normalized = " ".join(aggregate_title(title, freq, cfg.min_freq))
            f.write(f"{title}\t{normalized}\n")
    print(f"wrote {len(seen)} title mappings to {out}")
    return 0


def cmd_build_graph(cfg: RunConfig) -> int:
    from .records import extract_transitions

    result = _load_records(cfg)
    out = cfg.out or "graph.tsv"
    freq = word_frequencies(r.title for r in result.records)
    transitions = extract_transitions(
        result.records, lambda t: aggregate_title(t, freq, cfg.min_freq)
    )
    g = build_graph(transitions)
    save_graph(g, out)
    artifacts.write_frequencies(out + ".freq", freq)
    print(
        f"graph: {g.n_nodes} nodes, {g.n_edges} edges, "
        f"{len(transitions)} transitions, {g.self_loops_dropped} self-loops dropped"
    )
    return 0


def _node_labels(g: JobGraph) -> list[str]:
    return [key.label() for key in g.keys]


def cmd_train(cfg: RunConfig) -> int:
    g = load_graph(_require(cfg.graph, "--graph"))
    out_dir = cfg.model_dir or "model"
    split = threshold_and_split(g, cfg.weight_threshold, cfg.split_seed)
    train_graph = subgraph_with_edges(g, split.train)
    est = _estimator(cfg).fit(train_graph)

    os.makedirs(out_dir, exist_ok=True)
    artifacts.write_split(os.path.join(out_dir, SPLIT_FILE), split)
    labels = _node_labels(g)
    words = [w for w, _ in sorted(g.vocabulary.items(), key=lambda kv: kv[1])]
    tables = est.tables_
    for name, filename in TABLE_FILES.items():
        matrix = {
            "topology_self": tables.topo_self,
            "topology_ctx": tables.topo_ctx,
            "semantic_title": tables.sem_title,
            "semantic_word": tables.sem_word,
            "balance": tables.balance,
            "duration": tables.duration,
        }[name]
        keys = words if name == "semantic_word" else labels
        artifacts.write_embeddings(os.path.join(out_dir, filename), keys, matrix)
    artifacts.write_fusion_net(os.path.join(out_dir, NET_FILE), est.fusion_)
    artifacts.write_embeddings(os.path.join(out_dir, FUSED_FILE), labels, est.transform())
    print(
        f"trained on {len(split.train)} edges "
        f"(valid {len(split.valid)}, test {len(split.test)}, dropped {len(split.dropped)}); "
        f"model written to {out_dir}"
    )
    return 0


def _variant_files(views: tuple) -> dict[str, str]:
    variants = {}
    if len(views) > 1:
        variants["fused"] = FUSED_FILE
    for v in views:
        variants[v] = {
            "topology": TABLE_FILES["topology_self"],
            "semantic": TABLE_FILES["semantic_title"],
            "balance": TABLE_FILES["balance"],
            "duration": TABLE_FILES["duration"],
        }[v]
    return variants


def cmd_eval(cfg: RunConfig) -> int:
    g = load_graph(_require(cfg.graph, "--graph"))
    model_dir = cfg.model_dir or "model"
    split = artifacts.read_split(_require(os.path.join(model_dir, SPLIT_FILE), "split"))
    _require(os.path.join(model_dir, NET_FILE), "fusion checkpoint")

    views = tuple(v for v in ("topology", "semantic", "balance", "duration") if v in cfg.views)
    reports = []
    if cfg.rates:
        est = _estimator(cfg)

        def trainer(train_graph: JobGraph, _split: EvalSplit):
            return est.fit(train_graph).variant_vectors()

        reports = robustness_sweep(
            g, trainer, rates=cfg.rates, weight_threshold=cfg.weight_threshold,
            seed=cfg.split_seed, ks=cfg.eval_ks, split=split,
        )
    else:
        for name, filename in _variant_files(views).items():
            path = _require(os.path.join(model_dir, filename), f"{name} vectors")
            _, vectors = artifacts.read_embeddings(path)
            if vectors.shape[0] != g.n_nodes:
                raise DataError(f"{path}: {vectors.shape[0]} rows but graph has {g.n_nodes} nodes")
            reports.append(evaluate(vectors, split, cfg.eval_ks, model=name))

    out = cfg.out or "report.tsv"
    header = "model\trate\tMRR\t" + "\t".join(f"MP@{k}" for k in sorted(cfg.eval_ks))
    with artifacts.atomic_write(out) as f:
        f.write(header + "\n")
        for report in reports:
            f.write(report.row() + "\n")
    for report in reports:
        print(report.row())
    print(f"report written to {out}")
    return 0


def cmd_predict(cfg: RunConfig, query: str, k: int) -> int:
    g = load_graph(_require(cfg.graph, "--graph"))
    model_dir = cfg.model_dir or "model"
    path = _require(os.path.join(model_dir, FUSED_FILE), "fused vectors")
    _, vectors = artifacts.read_embeddings(path)
    if vectors.shape[0] != g.n_nodes:
        raise DataError(f"{path}: {vectors.shape[0]} rows but graph has {g.n_nodes} nodes")

    if "@" not in query:
        raise DataError("query must look like 'title@company'")
    title_raw, company = query.rsplit("@", 1)
    freq_path = (cfg.graph or "") + ".freq"
    if os.path.exists(freq_path):
        freq = artifacts.read_frequencies(freq_path)
        title = aggregate_title(title_raw, freq, cfg.min_freq)
    else:  # fall back to vocabulary membership
        from .titles import tokenize

        tokens = tokenize(title_raw)
        kept = tuple(t for t in tokens if t in g.vocabulary)
        title = kept if kept else tokens
    from .titles import NodeKey

    key = NodeKey(title, company)
    node = g.index.get(key)
    if node is None:
        raise DataError(f"query node {key.label()!r} not in graph")

    candidates = np.array([c for c in range(g.n_nodes) if c != node], dtype=np.intp)
    ranked = rank_candidates(node, vectors, candidates)[:k]
    norms = np.linalg.norm(vectors, axis=1)
    for c in ranked:
        if norms[node] == 0 or norms[c] == 0:
            cosine = 0.0
        else:
            cosine = float(vectors[node] @ vectors[c] / (norms[node] * norms[c]))
        print(f"{g.keys[c].label()}\t{cosine:.6f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config_from_args(args)
        if args.command == "gen-synth":
            return cmd_gen_synth(cfg)
        if args.command == "aggregate":
            return cmd_aggregate(cfg)
        if args.command == "build-graph":
            return cmd_build_graph(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "predict":
            return cmd_predict(cfg, args.query, args.k)
        parser.error(f"unknown command {args.command!r}")
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
