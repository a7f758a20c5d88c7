"""On-disk artifact formats: embeddings, fusion checkpoints, splits.

All writers go through ``atomic_write`` (temp file + rename) so interrupted
runs never leave truncated files, and all numbers use repr-faithful decimal
text so identical runs produce byte-identical artifacts.
"""

from __future__ import annotations

import contextlib
import os
import tempfile
from typing import Iterator, Sequence

import numpy as np

from .errors import DataError

_FUSION_MAGIC = "fusionnet v1"


def fmt(x: float) -> str:
    """Decimal text that round-trips float64 exactly."""
    return format(float(x), ".17g")


@contextlib.contextmanager
def atomic_write(path: str) -> Iterator:
    """Write to a temp file in the target directory, rename on success."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            yield f
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def write_embeddings(path: str, keys: Sequence[str], matrix: np.ndarray) -> None:
    """Text embedding table: header ``count dim``, then ``key v1 ... v_dim``."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or len(keys) != matrix.shape[0]:
        raise ValueError("keys and matrix rows must match")
    with atomic_write(path) as f:
        f.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for key, row in zip(keys, matrix):
            f.write(key + " " + " ".join(fmt(v) for v in row) + "\n")


def read_embeddings(path: str) -> tuple[list[str], np.ndarray]:
    """Parse an embedding table; keys may contain spaces (vector parsed from the right)."""
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read embeddings {path}: {exc}") from exc
    if not lines:
        raise DataError(f"{path}: empty embedding file")
    try:
        count, dim = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise DataError(f"{path}: line 1: bad header") from exc
    if len(lines) != count + 1:
        raise DataError(f"{path}: expected {count} rows, found {len(lines) - 1}")
    keys: list[str] = []
    rows = np.empty((count, dim), dtype=np.float64)
    for r, line in enumerate(lines[1:], start=2):
        parts = line.split(" ")
        if len(parts) < dim + 1:
            raise DataError(f"{path}: line {r}: too few fields")
        keys.append(" ".join(parts[: len(parts) - dim]))
        try:
            rows[r - 2] = [float(v) for v in parts[len(parts) - dim :]]
        except ValueError as exc:
            raise DataError(f"{path}: line {r}: bad vector value") from exc
    return keys, rows


def write_fusion_net(path: str, net) -> None:
    """Versioned checkpoint: layer dims then row-major parameters in decimal text."""
    params = net.parameters()
    with atomic_write(path) as f:
        f.write(f"{_FUSION_MAGIC} {net.input_dim} {net.hidden_dim} {net.bottleneck_dim} {fmt(net.leaky_slope)}\n")
        for name, value in params.items():
            mat = np.atleast_2d(value)
            f.write(f"{name} {mat.shape[0]} {mat.shape[1]}\n")
            for row in mat:
                f.write(" ".join(fmt(v) for v in row) + "\n")


def read_fusion_net(path: str):
    from .fusion import FusionNet

    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    if not lines or not lines[0].startswith(_FUSION_MAGIC):
        raise DataError(f"{path}: not a fusion checkpoint")
    head = lines[0].split()
    input_dim, hidden_dim, bottleneck_dim = int(head[2]), int(head[3]), int(head[4])
    slope = float(head[5])
    net = FusionNet.zeros(input_dim, hidden_dim, bottleneck_dim, leaky_slope=slope)
    params = net.parameters()
    lineno = 1
    for name, value in params.items():
        if lineno >= len(lines):
            raise DataError(f"{path}: line {lineno + 1}: unexpected end of file")
        head = lines[lineno].split()
        if len(head) != 3 or head[0] != name:
            raise DataError(f"{path}: line {lineno + 1}: expected layer {name}")
        rows, cols = int(head[1]), int(head[2])
        expect = np.atleast_2d(value).shape
        if (rows, cols) != expect:
            raise DataError(f"{path}: line {lineno + 1}: layer {name} has shape {(rows, cols)}, expected {expect}")
        block = lines[lineno + 1 : lineno + 1 + rows]
        if len(block) != rows:
            raise DataError(f"{path}: line {len(lines) + 1}: unexpected end of file")
        try:
            mat = np.array([[float(v) for v in row.split()] for row in block])
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno + 2}: bad parameter value") from exc
        if mat.shape != (rows, cols):
            raise DataError(f"{path}: line {lineno + 2}: ragged parameter block")
        value[...] = mat.reshape(value.shape)
        lineno += 1 + rows
    if lineno != len(lines):
        raise DataError(f"{path}: line {lineno + 1}: trailing data")
    return net


def write_split(path: str, split) -> None:
    """Edge partition as ``src<TAB>dst<TAB>part`` rows plus a header line."""
    with atomic_write(path) as f:
        f.write(f"#threshold {fmt(split.threshold)} #seed {split.seed}\n")
        for part in ("train", "valid", "test", "dropped"):
            for (i, j) in getattr(split, part):
                f.write(f"{i}\t{j}\t{part}\n")


def read_split(path: str):
    from .evaluation import EvalSplit

    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read split {path}: {exc}") from exc
    if not lines or not lines[0].startswith("#threshold"):
        raise DataError(f"{path}: not a split file")
    head = lines[0].split()
    threshold, seed = float(head[1]), int(head[3])
    parts: dict[str, list[tuple[int, int]]] = {"train": [], "valid": [], "test": [], "dropped": []}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 3 or fields[2] not in parts:
            raise DataError(f"{path}: line {lineno}: bad split row")
        parts[fields[2]].append((int(fields[0]), int(fields[1])))
    return EvalSplit(
        train=parts["train"],
        valid=parts["valid"],
        test=parts["test"],
        dropped=parts["dropped"],
        threshold=threshold,
        seed=seed,
    )


def write_frequencies(path: str, freq) -> None:
    with atomic_write(path) as f:
        f.write(f"#titles {freq.total_titles}\n")
        for word in sorted(freq.counts):
            f.write(f"{word}\t{freq.counts[word]}\n")


def read_frequencies(path: str):
    from collections import Counter

    from .titles import WordFrequencyTable

    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read frequency table {path}: {exc}") from exc
    if not lines or not lines[0].startswith("#titles"):
        raise DataError(f"{path}: not a frequency table")
    total = int(lines[0].split()[1])
    counts: Counter = Counter()
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 2:
            raise DataError(f"{path}: line {lineno}: bad frequency row")
        counts[fields[0]] = int(fields[1])
    return WordFrequencyTable(counts=counts, total_titles=total)
