"""Directed weighted job-transition graph.

Nodes are (normalized title, company) pairs with dense integer ids. Each
edge carries the transition count and, for base edges, the mean tenure (in
years) spent at the source job before moving. Higher-order edges added by
``extend_k_steps`` densify the topology for embedding training.

Serialized form (UTF-8, deterministic by id):

    #nodes N #edges M
    id<TAB>title_norm<TAB>company          (N lines)
    src<TAB>dst<TAB>w<TAB>t_avg_years|-<TAB>order   (M lines)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import DataError
from .records import Transition
from .titles import NodeKey

MONTHS_PER_YEAR = 12.0


@dataclass
class EdgeStats:
    w: float
    t_avg_years: float | None = None
    order: int = 1


@dataclass
class JobGraph:
    keys: list[NodeKey] = field(default_factory=list)
    index: dict[NodeKey, int] = field(default_factory=dict)
    edges: dict[tuple[int, int], EdgeStats] = field(default_factory=dict)
    vocabulary: dict[str, int] = field(default_factory=dict)
    self_loops_dropped: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.keys)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def add_node(self, key: NodeKey) -> int:
        node_id = self.index.get(key)
        if node_id is None:
            node_id = len(self.keys)
            self.index[key] = node_id
            self.keys.append(key)
        return node_id

    def rebuild_vocabulary(self) -> None:
        """Assign word ids in first-seen order over nodes by ascending id."""
        self.vocabulary = {}
        for key in self.keys:
            for word in key.title:
                if word not in self.vocabulary:
                    self.vocabulary[word] = len(self.vocabulary)

    def total_weight(self) -> float:
        return sum(e.w for e in self.edges.values())


def build_graph(transitions: Iterable[Transition]) -> JobGraph:
    """Aggregate transitions into edge counts and mean source tenures.

    Self-transitions created by title aggregation carry no benchmarking
    signal; they are dropped and counted in ``self_loops_dropped``.
    """
    g = JobGraph()
    counts: dict[tuple[int, int], int] = {}
    tenure_sums: dict[tuple[int, int], int] = {}
    for t in transitions:
        i = g.add_node(t.src)
        j = g.add_node(t.dst)
        if i == j:
            g.self_loops_dropped += 1
            continue
        counts[(i, j)] = counts.get((i, j), 0) + 1
        tenure_sums[(i, j)] = tenure_sums.get((i, j), 0) + t.src_tenure_months
    for pair, w in counts.items():
        t_avg = tenure_sums[pair] / w / MONTHS_PER_YEAR
        g.edges[pair] = EdgeStats(w=float(w), t_avg_years=t_avg, order=1)
    g.rebuild_vocabulary()
    return g


def extend_k_steps(g: JobGraph, k: int, lam: float) -> dict[tuple[int, int], EdgeStats]:
    """Edge set densified with paths of length 2..k.

    A path i -> ... -> j of length l contributes lam**(l-1) times the product
    of its base edge weights. Contributions landing on a pair that already
    has an edge add to its weight; base edges keep their duration and order,
    purely higher-order pairs carry no duration and record the shortest
    contributing path length. Self-loop paths are discarded.
    """
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k!r}")
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lambda must be in (0, 1], got {lam!r}")

    extended = {
        pair: EdgeStats(w=e.w, t_avg_years=e.t_avg_years, order=e.order)
        for pair, e in g.edges.items()
    }
    if k == 1:
        return extended

    out_adj: dict[int, list[tuple[int, float]]] = {}
    for (i, j), e in g.edges.items():
        out_adj.setdefault(i, []).append((j, e.w))

    # paths[(i, j)] = sum over length-l paths of the product of base weights
    paths = {pair: e.w for pair, e in g.edges.items()}
    for length in range(2, k + 1):
        longer: dict[tuple[int, int], float] = {}
        for (i, mid), w_path in paths.items():
            for j, w_base in out_adj.get(mid, ()):
                pair = (i, j)
                longer[pair] = longer.get(pair, 0.0) + w_path * w_base
        discount = lam ** (length - 1)
        for (i, j), total in longer.items():
            if i == j:
                continue
            entry = extended.get((i, j))
            if entry is None:
                extended[(i, j)] = EdgeStats(w=discount * total, t_avg_years=None, order=length)
            else:
                entry.w += discount * total
        paths = longer
    return extended


def subgraph_with_edges(g: JobGraph, pairs: Iterable[tuple[int, int]]) -> JobGraph:
    """Same nodes and vocabulary, edges restricted to the given pairs."""
    sub = JobGraph(
        keys=list(g.keys),
        index=dict(g.index),
        vocabulary=dict(g.vocabulary),
    )
    for pair in pairs:
        e = g.edges[pair]
        sub.edges[pair] = EdgeStats(w=e.w, t_avg_years=e.t_avg_years, order=e.order)
    return sub


def _fmt(x: float) -> str:
    return format(x, ".17g")


def save_graph(g: JobGraph, path: str) -> None:
    from .artifacts import atomic_write

    with atomic_write(path) as f:
        f.write(f"#nodes {g.n_nodes} #edges {g.n_edges}\n")
        for node_id, key in enumerate(g.keys):
            f.write(f"{node_id}\t{' '.join(key.title)}\t{key.company}\n")
        for (i, j) in sorted(g.edges):
            e = g.edges[(i, j)]
            t = "-" if e.t_avg_years is None else _fmt(e.t_avg_years)
            f.write(f"{i}\t{j}\t{_fmt(e.w)}\t{t}\t{e.order}\n")


def load_graph(path: str) -> JobGraph:
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read graph file {path}: {exc}") from exc

    g = JobGraph()
    if not lines:
        return g

    header = lines[0].split()
    if len(header) != 4 or header[0] != "#nodes" or header[2] != "#edges":
        raise DataError(f"{path}: line 1: bad header {lines[0]!r}")
    try:
        n_nodes, n_edges = int(header[1]), int(header[3])
    except ValueError as exc:
        raise DataError(f"{path}: line 1: bad header counts") from exc

    if len(lines) < 1 + n_nodes + n_edges:
        raise DataError(f"{path}: line {len(lines) + 1}: unexpected end of file")
    if len(lines) > 1 + n_nodes + n_edges:
        raise DataError(f"{path}: line {2 + n_nodes + n_edges}: trailing data")

    for lineno in range(2, 2 + n_nodes):
        fields = lines[lineno - 1].split("\t")
        if len(fields) != 3:
            raise DataError(f"{path}: line {lineno}: bad node line")
        try:
            node_id = int(fields[0])
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: bad node id") from exc
        if node_id != len(g.keys):
            raise DataError(f"{path}: line {lineno}: node ids must be dense and ascending")
        key = NodeKey(tuple(fields[1].split()), fields[2])
        g.index[key] = node_id
        g.keys.append(key)

    for lineno in range(2 + n_nodes, 2 + n_nodes + n_edges):
        fields = lines[lineno - 1].split("\t")
        if len(fields) != 5:
            raise DataError(f"{path}: line {lineno}: bad edge line")
        try:
            i, j = int(fields[0]), int(fields[1])
            w = float(fields[2])
            t = None if fields[3] == "-" else float(fields[3])
            order = int(fields[4])
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: bad edge fields") from exc
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise DataError(f"{path}: line {lineno}: edge endpoint out of range")
        g.edges[(i, j)] = EdgeStats(w=w, t_avg_years=t, order=order)

    g.rebuild_vocabulary()
    return g
