"""Career-record ingestion and job-transition extraction.

Input is one employment row per line:

    person_id<TAB>title<TAB>company<TAB>start<TAB>end

with months rendered as ``YYYY/MM`` and ``present`` allowed in the end
field. Consecutive rows of one person become directed transitions carrying
the tenure (in months) spent at the source job.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, TextIO

from .errors import DataError
from .titles import NodeKey, tokenize

PRESENT = "present"


@dataclass(frozen=True)
class CareerRecord:
    person_id: str
    title: str
    company: str
    start: int  # absolute month index: year * 12 + (month - 1)
    end: int | None  # None while the job is still marked "present"


class Transition(NamedTuple):
    src: NodeKey
    dst: NodeKey
    src_tenure_months: int


@dataclass
class ParseResult:
    records: list[CareerRecord]
    skipped_lines: int = 0
    snapshot_month: int | None = None


def parse_month(text: str) -> int:
    """Parse ``YYYY/MM`` into an absolute month index."""
    parts = text.strip().split("/")
    if len(parts) != 2:
        raise ValueError(f"bad month {text!r}")
    year, month = int(parts[0]), int(parts[1])
    if not 1 <= month <= 12 or year < 1:
        raise ValueError(f"bad month {text!r}")
    return year * 12 + (month - 1)


def format_month(month_index: int) -> str:
    return f"{month_index // 12}/{month_index % 12 + 1:02d}"


def _parse_line(line: str) -> CareerRecord:
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 5:
        raise ValueError("expected 5 tab-separated fields")
    person, title, company, start_s, end_s = (f.strip() for f in fields)
    if not person or not title or not company:
        raise ValueError("empty field")
    start = parse_month(start_s)
    end = None if end_s.lower() == PRESENT else parse_month(end_s)
    if end is not None and start > end:
        raise ValueError("start after end")
    return CareerRecord(person, title, company, start, end)


def parse_records(stream: TextIO | Iterable[str], snapshot_month: int | None = None) -> ParseResult:
    """Parse a record stream; malformed lines are skipped and counted.

    Open-ended ("present") rows are closed at ``snapshot_month``, defaulting
    to the latest concrete end month in the data (latest start month if no
    row has a concrete end). Records come back grouped by person and sorted
    by start month, ties broken by end month then input order.
    """
    try:
        raw: list[CareerRecord] = []
        skipped = 0
        for line in stream:
            if not line.strip():
                continue
            try:
                raw.append(_parse_line(line))
            except ValueError:
                skipped += 1
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"unreadable record stream: {exc}") from exc

    if snapshot_month is None:
        ends = [r.end for r in raw if r.end is not None]
        if ends:
            snapshot_month = max(ends)
        elif raw:
            snapshot_month = max(r.start for r in raw)

    resolved = []
    for i, r in enumerate(raw):
        if r.end is None:
            end = max(r.start, snapshot_month if snapshot_month is not None else r.start)
            r = CareerRecord(r.person_id, r.title, r.company, r.start, end)
        resolved.append((r.person_id, r.start, r.end, i, r))
    resolved.sort(key=lambda item: item[:4])
    records = [item[4] for item in resolved]
    return ParseResult(records=records, skipped_lines=skipped, snapshot_month=snapshot_month)


def serialize_records(records: Iterable[CareerRecord]) -> str:
    lines = []
    for r in records:
        end = PRESENT if r.end is None else format_month(r.end)
        lines.append(f"{r.person_id}\t{r.title}\t{r.company}\t{format_month(r.start)}\t{end}")
    return "\n".join(lines) + ("\n" if lines else "")


def extract_transitions(
    records: Iterable[CareerRecord],
    normalize: Callable[[str], tuple[str, ...]] = tokenize,
) -> list[Transition]:
    """Emit one transition per consecutive record pair of each person.

    ``normalize`` maps a raw title to its normalized word sequence (see
    titles.aggregate_title); the default keeps all tokens. Tenure is the
    source record's own duration. Employment gaps do not break the chain.
    """
    by_person: dict[str, list[CareerRecord]] = {}
    for r in records:
        by_person.setdefault(r.person_id, []).append(r)

    transitions: list[Transition] = []
    for person_records in by_person.values():
        for src, dst in zip(person_records, person_records[1:]):
            end = src.end if src.end is not None else src.start
            transitions.append(
                Transition(
                    src=NodeKey(normalize(src.title), src.company),
                    dst=NodeKey(normalize(dst.title), dst.company),
                    src_tenure_months=end - src.start,
                )
            )
    return transitions
