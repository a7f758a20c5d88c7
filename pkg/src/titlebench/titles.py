"""Title normalization: tokenizing job titles and merging variants.

Raw titles mix a core function ("software engineer") with rare decorations
("(Azure)", "MARCOM & FSOS"). Corpus-wide word counts separate the two:
frequent words describe the function, rare words are noise. Dropping the
rare words collapses title variants onto a shared normalized form.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple

DEFAULT_MIN_FREQ = 30

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


class NodeKey(NamedTuple):
    """A job node: normalized title words plus the employing company."""

    title: tuple[str, ...]
    company: str

    def label(self) -> str:
        return f"{' '.join(self.title)}@{self.company}"


def tokenize(title: str) -> tuple[str, ...]:
    """Lowercase and split on non-alphanumeric runs, dropping empty tokens."""
    return tuple(_TOKEN.findall(title.lower()))


@dataclass
class WordFrequencyTable:
    """Corpus-global word counts over raw (pre-filter) titles."""

    counts: Counter
    total_titles: int

    def frequency(self, word: str) -> int:
        return self.counts.get(word, 0)


def word_frequencies(titles: Iterable[str]) -> WordFrequencyTable:
    """Count every token occurrence across the given raw titles (multiset)."""
    counts: Counter = Counter()
    total = 0
    for title in titles:
        counts.update(tokenize(title))
        total += 1
    return WordFrequencyTable(counts=counts, total_titles=total)


def aggregate_title(
    title_raw: str,
    freq: WordFrequencyTable,
    min_freq: int = DEFAULT_MIN_FREQ,
) -> tuple[str, ...]:
    """Normalize a title by keeping only words with corpus frequency >= min_freq.

    Word order is preserved. If every word falls below the threshold the
    original token list is kept unchanged: an empty key would collapse all
    rare titles into a single node.
    """
    tokens = tokenize(title_raw)
    kept = tuple(t for t in tokens if freq.frequency(t) >= min_freq)
    return kept if kept else tokens
