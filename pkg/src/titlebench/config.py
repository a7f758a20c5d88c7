"""Run configuration: plain-text key=value file merged with CLI flags.

Precedence is flags > file > defaults. Every key must be declared below;
unknown keys in a config file are fatal so typos cannot silently fall back
to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any

from .errors import DataError


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text) -> tuple[int, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(int(x) for x in text)
    return tuple(int(x) for x in text.split(",") if x.strip())


def _parse_float_list(text) -> tuple[float, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in text.split(",") if x.strip())


def _parse_str_list(text) -> tuple[str, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(text)
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _parse_weight_map(text) -> dict:
    """'topology:2.0,semantic:1.5' -> {'topology': 2.0, 'semantic': 1.5}"""
    if isinstance(text, dict):
        return dict(text)
    weights = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, value = item.partition(":")
        if not value:
            raise ValueError(f"expected name:value, got {item!r}")
        weights[name.strip()] = float(value)
    return weights


@dataclass
class RunConfig:
    # paths
    records: str | None = None
    graph: str | None = None
    truth: str | None = None
    out: str | None = None
    model_dir: str | None = None
    # title normalization
    min_freq: int = 30
    # graph extension
    k_steps: int = 2
    path_decay: float = 0.5
    # evaluation protocol
    weight_threshold: float = 5.0
    split_seed: int = 0
    eval_ks: tuple = (5, 10, 15, 20)
    rates: tuple = ()
    # view training
    dim: int = 128
    epochs: int = 10
    samples_per_epoch: int | None = None
    negatives: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    noise_power: float = 0.75
    views: tuple = ("topology", "semantic", "balance", "duration")
    view_weights: dict = None
    seed: int = 0
    n_workers: int = 1
    # fusion autoencoder
    hidden_dim: int = 512
    bottleneck_dim: int = 248
    fusion_learning_rate: float = 0.01
    fusion_batch: int = 64
    fusion_weight: float = 1.0
    leaky_slope: float = 0.7
    end_to_end: bool = False
    # synthetic generator
    n_companies: int = 10
    n_levels: int = 5
    n_functions: int = 8
    n_persons: int = 5000
    mean_tenure_years: float = 1.5
    lateral_move_prob: float = 0.7
    promote_tenure_factor: float = 2.5
    noise_word_prob: float = 0.15
    synth_seed: int = 0


_PARSERS = {
    "records": str,
    "graph": str,
    "truth": str,
    "out": str,
    "model_dir": str,
    "min_freq": int,
    "k_steps": int,
    "path_decay": float,
    "weight_threshold": float,
    "split_seed": int,
    "eval_ks": _parse_int_list,
    "rates": _parse_float_list,
    "dim": int,
    "epochs": int,
    "samples_per_epoch": int,
    "negatives": int,
    "learning_rate": float,
    "min_learning_rate": float,
    "noise_power": float,
    "views": _parse_str_list,
    "view_weights": _parse_weight_map,
    "seed": int,
    "n_workers": int,
    "hidden_dim": int,
    "bottleneck_dim": int,
    "fusion_learning_rate": float,
    "fusion_batch": int,
    "fusion_weight": float,
    "leaky_slope": float,
    "end_to_end": _parse_bool,
    "n_companies": int,
    "n_levels": int,
    "n_functions": int,
    "n_persons": int,
    "mean_tenure_years": float,
    "lateral_move_prob": float,
    "promote_tenure_factor": float,
    "noise_word_prob": float,
    "synth_seed": int,
}

assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def read_config_file(path: str) -> dict[str, Any]:
    """Parse key=value lines; '#' starts a comment, unknown keys are fatal."""
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}: line {lineno}: expected key=value")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _PARSERS:
            raise DataError(f"{path}: line {lineno}: unknown config key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: bad value for {key}: {exc}") from exc
    return values


def resolve_config(file_path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, overlaid by the config file, overlaid by non-None overrides."""
    cfg = RunConfig()
    merged: dict[str, Any] = {}
    if file_path:
        merged.update(read_config_file(file_path))
    for key, value in (overrides or {}).items():
        if value is None or key not in _PARSERS:
            continue
        merged[key] = _PARSERS[key](value) if isinstance(value, str) else value
    for key, value in merged.items():
        setattr(cfg, key, value)
    return cfg
