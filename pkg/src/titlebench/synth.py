"""Synthetic career records with known same-level title structure.

Each person walks a career lattice of (function, level, company) states:
lateral moves keep the level and switch company, while promotions raise
the level inside the current company and take longer on average by
``promote_tenure_factor``. Titles are "<level word> <function words>",
shared across companies, optionally decorated with a rare word drawn from
a pool large enough that every decorator stays below the normalization
frequency threshold.

Companies sit on a ring and lateral destinations are drawn with weight
1/distance^2, planting company-pair affinities: flow between market
neighbors is heavy and, because the affinity is symmetric, balanced in
both directions. A held-out heavy link is therefore recoverable from the
surviving structure instead of being interchangeable with every other
company at the same level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .records import CareerRecord, format_month
from .titles import NodeKey

_LEVEL_WORDS = ("junior", "associate", "senior", "staff", "principal", "lead", "director", "executive")
_FUNCTION_WORDS = (
    ("software", "engineer"),
    ("product", "manager"),
    ("data", "analyst"),
    ("sales", "representative"),
    ("network", "architect"),
    ("marketing", "specialist"),
    ("finance", "controller"),
    ("support", "technician"),
    ("security", "consultant"),
    ("operations", "coordinator"),
    ("design", "illustrator"),
    ("research", "scientist"),
    ("quality", "inspector"),
    ("logistics", "planner"),
    ("platform", "developer"),
    ("content", "strategist"),
)

_MOVES_MIN, _MOVES_MAX = 3, 8  # transitions per person, inclusive bounds


@dataclass(frozen=True)
class SynthConfig:
    n_companies: int = 10
    n_levels: int = 5
    n_functions: int = 8
    n_persons: int = 5000
    mean_tenure_years: float = 1.5
    lateral_move_prob: float = 0.7
    promote_tenure_factor: float = 2.5
    noise_word_prob: float = 0.15
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.n_companies, self.n_levels, self.n_functions, self.n_persons) < 1:
            raise ValueError("all counts must be >= 1")
        if self.n_levels > len(_LEVEL_WORDS):
            raise ValueError(f"at most {len(_LEVEL_WORDS)} levels supported")
        if self.n_functions > len(_FUNCTION_WORDS):
            raise ValueError(f"at most {len(_FUNCTION_WORDS)} functions supported")
        if not 0 <= self.lateral_move_prob <= 1 or not 0 <= self.noise_word_prob <= 1:
            raise ValueError("probabilities must lie in [0, 1]")
        if self.promote_tenure_factor <= 1:
            raise ValueError("promote_tenure_factor must be > 1")
        if self.mean_tenure_years <= 0:
            raise ValueError("mean_tenure_years must be positive")


@dataclass
class GroundTruth:
    """Planted (function, level) labels keyed by normalized node."""

    labels: dict[NodeKey, tuple[int, int]]

    def same_level(self, a: NodeKey, b: NodeKey) -> bool:
        return self.labels[a][1] == self.labels[b][1]


def canonical_title(function: int, level: int) -> tuple[str, ...]:
    return (_LEVEL_WORDS[level],) + _FUNCTION_WORDS[function]


def company_name(index: int) -> str:
    return f"company{index:02d}"


def _decorator_pool_size(cfg: SynthConfig) -> int:
    expected_draws = cfg.n_persons * (_MOVES_MAX + 1) * cfg.noise_word_prob
    return max(64, int(np.ceil(expected_draws / 8.0)))  # about 8 uses per word


def _tenure_months(rng: np.random.Generator, mean_years: float) -> int:
    return max(1, int(round(rng.exponential(mean_years * 12.0))))


def lateral_company_weights(n_companies: int, current: int) -> np.ndarray:
    """Ring-affinity weights over destination companies (zero for staying put)."""
    distance = np.abs(np.arange(n_companies) - current)
    distance = np.minimum(distance, n_companies - distance)
    weights = np.zeros(n_companies)
    weights[distance > 0] = 1.0 / distance[distance > 0] ** 2
    return weights


def generate(cfg: SynthConfig) -> tuple[list[CareerRecord], GroundTruth]:
    """Career records for every person plus the planted node labels.

    Person trajectories are independently seeded, so generation is
    reproducible and partitionable by person.
    """
    labels = {
        NodeKey(canonical_title(f, l), company_name(c)): (f, l)
        for f in range(cfg.n_functions)
        for l in range(cfg.n_levels)
        for c in range(cfg.n_companies)
    }
    pool = _decorator_pool_size(cfg)
    records: list[CareerRecord] = []
    for person in range(cfg.n_persons):
        records.extend(_person_records(cfg, person, pool))
    return records, GroundTruth(labels=labels)


def _person_records(cfg: SynthConfig, person: int, pool: int) -> Iterator[CareerRecord]:
    rng = np.random.default_rng([cfg.seed, person])
    company = int(rng.integers(cfg.n_companies))
    function = int(rng.integers(cfg.n_functions))
    level = int(rng.integers(cfg.n_levels))
    month = 1995 * 12 + int(rng.integers(0, 180))
    n_moves = int(rng.integers(_MOVES_MIN, _MOVES_MAX + 1))

    person_id = f"p{person:06d}"
    states = [(function, level, company)]
    tenures = []
    for _ in range(n_moves):
        lateral = rng.random() < cfg.lateral_move_prob
        if not lateral and level + 1 >= cfg.n_levels:
            break  # promotion impossible at the top; trajectory ends
        if lateral and cfg.n_companies > 1:
            mean = cfg.mean_tenure_years
            weights = lateral_company_weights(cfg.n_companies, company)
            company = int(rng.choice(cfg.n_companies, p=weights / weights.sum()))
        elif lateral:
            break  # nowhere to move laterally with a single company
        else:
            mean = cfg.mean_tenure_years * cfg.promote_tenure_factor
            level += 1
        tenures.append(_tenure_months(rng, mean))
        states.append((function, level, company))
    tenures.append(_tenure_months(rng, cfg.mean_tenure_years))  # final job

    for (f, l, c), tenure in zip(states, tenures):
        title = " ".join(canonical_title(f, l))
        if rng.random() < cfg.noise_word_prob:
            word = f"zz{int(rng.integers(pool)):05d}"
            title = f"{word} {title}" if rng.random() < 0.5 else f"{title} {word}"
        yield CareerRecord(person_id, title, company_name(c), month, month + tenure)
        month += tenure


def write_records(path: str, records: list[CareerRecord]) -> None:
    from .artifacts import atomic_write

    with atomic_write(path) as f:
        for r in records:
            end = format_month(r.end) if r.end is not None else "present"
            f.write(f"{r.person_id}\t{r.title}\t{r.company}\t{format_month(r.start)}\t{end}\n")


def write_ground_truth(path: str, truth: GroundTruth) -> None:
    from .artifacts import atomic_write

    with atomic_write(path) as f:
        for key in sorted(truth.labels):
            function, level = truth.labels[key]
            f.write(f"{' '.join(key.title)}\t{key.company}\t{function}\t{level}\n")


def planted_balance_means(graph, truth: GroundTruth) -> tuple[float, float]:
    """Mean transition balance over same-level vs cross-level linked pairs.

    One-directional pairs score 0, matching their exclusion from the
    balance view. Used to verify the generator actually plants the signal.
    """
    from .views import transition_balance

    same, cross = [], []
    seen = set()
    for (i, j) in graph.edges:
        if (j, i) in seen:
            continue
        seen.add((i, j))
        ka, kb = graph.keys[i], graph.keys[j]
        if ka not in truth.labels or kb not in truth.labels:
            continue
        w_ij = graph.edges[(i, j)].w
        back = graph.edges.get((j, i))
        tb = transition_balance(w_ij, back.w) if back is not None else 0.0
        (same if truth.same_level(ka, kb) else cross).append(tb)
    mean = lambda xs: float(np.mean(xs)) if xs else 0.0
    return mean(same), mean(cross)
