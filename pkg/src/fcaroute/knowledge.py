"""Per-peer query history and knowledge-base maintenance.

A knowledge base holds two concept sets mined from a peer's query log:
``e1`` over the queries x terms context and ``e2`` over the queries x
positive-peers context.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .fca import FormalConcept, FormalContext, enumerate_concepts


@dataclass(frozen=True)
class LogEntry:
    query_id: int
    terms: frozenset
    downloaded_docs: frozenset = frozenset()
    positive_peers: frozenset = frozenset()

    def __post_init__(self):
        if bool(self.downloaded_docs) != bool(self.positive_peers):
            raise ValueError(
                f"query {self.query_id}: positive peers must be present exactly when documents were downloaded"
            )


@dataclass
class QueryLog:
    entries: list[LogEntry] = field(default_factory=list)
    watermark: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def append(self, entry: LogEntry) -> None:
        if self.entries and entry.query_id <= self.entries[-1].query_id:
            raise ValueError(
                f"query id {entry.query_id} is not greater than last logged id {self.entries[-1].query_id}"
            )
        self.entries.append(entry)

    def pending(self) -> list[LogEntry]:
        return self.entries[self.watermark :]


def append_log(log: QueryLog, entry: LogEntry) -> QueryLog:
    log.append(entry)
    return log


def build_context_c1(entries: Sequence[LogEntry]) -> FormalContext:
    return FormalContext.from_rows({e.query_id: _ordered(e.terms) for e in entries})


def build_context_c2(entries: Sequence[LogEntry]) -> FormalContext:
    return FormalContext.from_rows({e.query_id: _ordered(e.positive_peers) for e in entries})


def _ordered(items: Iterable[int]) -> list[int]:
    # first-seen attribute order must not depend on set iteration order
    return sorted(items)


def _lectic_key(items: frozenset) -> tuple:
    # Lectic order over integer ids (smallest id most significant):
    # A < B iff min(A ^ B) is in B. Reversed lexicographic order of the
    # sorted elements, with an end marker below every element.
    return tuple(-x for x in sorted(items)) + (float("-inf"),)


@dataclass(frozen=True)
class KnowledgeBase:
    """The pair (e1, e2) owned by one peer.

    ``e1_batch``/``e2_batch`` tag each concept with the log slice it was mined
    from (an index into ``batches``), so closure can be re-checked later.
    """

    e1: tuple = ()
    e2: tuple = ()
    generation: int = 0
    objects: frozenset = frozenset()
    batches: tuple = ()  # (start, end) log-entry index ranges
    e1_batch: tuple = ()
    e2_batch: tuple = ()
    work: int = 0  # closures computed by the maintenance step that produced this base
    seconds: float = 0.0

    @property
    def size(self) -> int:
        return len(self.e1) + len(self.e2)

    # Lookup tables used by the selectors. Concepts with a zero score never
    # get selected, so only concepts sharing a term (resp. a query id) matter.
    @cached_property
    def term_index(self) -> dict:
        index: dict = {}
        for pos, c in enumerate(self.e1):
            for t in c.intent:
                index.setdefault(t, []).append(pos)
        return index

    @cached_property
    def query_index(self) -> dict:
        index: dict = {}
        for pos, c in enumerate(self.e2):
            if not c.intent:
                continue
            for q in c.extent:
                index.setdefault(q, []).append(pos)
        return index

    @cached_property
    def memo(self) -> dict:
        # selector results that depend only on this (immutable) base
        return {}

    @cached_property
    def e1_keys(self) -> list:
        return [_lectic_key(c.intent) for c in self.e1]

    @cached_property
    def e2_keys(self) -> list:
        return [_lectic_key(c.intent) for c in self.e2]


def _mine(entries: Sequence[LogEntry], stats: Counter) -> tuple[list, list]:
    e1 = enumerate_concepts(build_context_c1(entries), stats)
    e2 = enumerate_concepts(build_context_c2(entries), stats)
    return e1, e2


def build_static(log: QueryLog, previous: KnowledgeBase | None = None) -> KnowledgeBase:
    """Rebuild the whole base from every logged query."""
    start = time.perf_counter()
    stats: Counter = Counter()
    entries = log.entries
    e1, e2 = _mine(entries, stats)
    log.watermark = len(entries)
    generation = (previous.generation if previous is not None else 0) + 1
    return KnowledgeBase(
        e1=tuple(e1),
        e2=tuple(e2),
        generation=generation,
        objects=frozenset(e.query_id for e in entries),
        batches=((0, len(entries)),),
        e1_batch=(0,) * len(e1),
        e2_batch=(0,) * len(e2),
        work=stats["closures"],
        seconds=time.perf_counter() - start,
    )


def update_incremental(kb: KnowledgeBase, log: QueryLog) -> KnowledgeBase | None:
    """Mine only the entries logged since the last maintenance and union them in.

    Returns ``None`` when there is nothing new to fold in; the log and ``kb``
    are left untouched in that case.
    """
    if log.watermark >= len(log.entries):
        return None
    start = time.perf_counter()
    stats: Counter = Counter()
    lo, hi = log.watermark, len(log.entries)
    fresh = log.entries[lo:hi]
    new_e1, new_e2 = _mine(fresh, stats)
    batch = len(kb.batches)

    def union(old: tuple, old_tags: tuple, new: list) -> tuple[tuple, tuple]:
        present = set(old)
        merged, tags = list(old), list(old_tags)
        for c in new:
            if c not in present:
                present.add(c)
                merged.append(c)
                tags.append(batch)
        return tuple(merged), tuple(tags)

    e1, e1_tags = union(kb.e1, kb.e1_batch, new_e1)
    e2, e2_tags = union(kb.e2, kb.e2_batch, new_e2)
    log.watermark = hi
    return KnowledgeBase(
        e1=e1,
        e2=e2,
        generation=kb.generation + 1,
        objects=kb.objects | {e.query_id for e in fresh},
        batches=kb.batches + ((lo, hi),),
        e1_batch=e1_tags,
        e2_batch=e2_tags,
        work=stats["closures"],
        seconds=time.perf_counter() - start,
    )


def closure_violations(kb: KnowledgeBase, log: QueryLog) -> list[FormalConcept]:
    """Concepts of ``kb`` that are not closed in the context they were mined from."""
    contexts = []
    for lo, hi in kb.batches:
        entries = log.entries[lo:hi]
        contexts.append((build_context_c1(entries), build_context_c2(entries)))
    bad = []
    for which, concepts, tags in ((0, kb.e1, kb.e1_batch), (1, kb.e2, kb.e2_batch)):
        for c, tag in zip(concepts, tags):
            ctx = contexts[tag][which]
            try:
                ext = ctx.extent_mask(ctx.attribute_mask(c.intent))
                closed = ctx.objects_of(ext) == c.extent and ctx.attributes_of(ctx.intent_mask(ext)) == c.intent
            except ValueError:
                closed = False
            if not closed:
                bad.append(c)
    return bad


# Log persistence: query_id<TAB>terms<TAB>downloaded_docs<TAB>positive_peers,
# each set space-separated and possibly empty.


def _fmt(items: Iterable[int]) -> str:
    return " ".join(str(x) for x in sorted(items))


def _ints(field_text: str) -> frozenset:
    return frozenset(int(x) for x in field_text.split())


def save_log(log: QueryLog, path: str | Path) -> None:
    lines = [
        f"{e.query_id}\t{_fmt(e.terms)}\t{_fmt(e.downloaded_docs)}\t{_fmt(e.positive_peers)}\n"
        for e in log.entries
    ]
    Path(path).write_text("".join(lines), encoding="utf-8", newline="\n")


def load_log(path: str | Path) -> QueryLog:
    log = QueryLog()
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
            try:
                entry = LogEntry(int(parts[0]), _ints(parts[1]), _ints(parts[2]), _ints(parts[3]))
                log.append(entry)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return log
