"""Peer selection strategies: random flooding and the two LPS variants."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .fca import FormalConcept
from .knowledge import KnowledgeBase, _lectic_key

STRATEGIES = ("flooding", "lps_v1", "lps_v2")


@dataclass(frozen=True)
class Query:
    id: int
    terms: frozenset
    origin_peer: int

    def __post_init__(self):
        if not self.terms:
            raise ValueError(f"query {self.id} has no terms")


@dataclass(frozen=True)
class RankedConcept:
    concept: FormalConcept
    score: float


def similarity(query_terms: frozenset, intent: frozenset) -> float:
    """Jaccard coefficient of two sets; 0 when either side is empty."""
    if not query_terms or not intent:
        return 0.0
    inter = len(query_terms & intent)
    return inter / (len(query_terms) + len(intent) - inter)


def _e1_rank(score: float, concept: FormalConcept) -> tuple:
    # best first: high score, then larger extent, then lectically smaller intent
    return (-score, -len(concept.extent), _lectic_key(concept.intent))


def rank_e1(e1: Iterable[FormalConcept], query: Query) -> list[RankedConcept]:
    """SQTC: concepts with positive similarity to the query, best first."""
    scored = [(similarity(query.terms, c.intent), c) for c in e1]
    scored = [(s, c) for s, c in scored if s > 0]
    scored.sort(key=lambda sc: _e1_rank(*sc))
    return [RankedConcept(c, s) for s, c in scored]


def get_concept(e1: Iterable[FormalConcept], query: Query) -> FormalConcept | None:
    best, best_rank = None, None
    for c in e1:
        s = similarity(query.terms, c.intent)
        if s <= 0:
            continue
        rank = _e1_rank(s, c)
        if best_rank is None or rank < best_rank:
            best, best_rank = c, rank
    return best


def get_similar_concepts(
    e2: Iterable[FormalConcept], extent: frozenset, min_overlap: int = 1
) -> list[FormalConcept]:
    """SQPC: e2 concepts sharing query ids with ``extent``, most similar extent first.

    Concepts with an empty intent name no peer and are left out.
    """
    hits = []
    for c in e2:
        if not c.intent:
            continue
        inter = len(c.extent & extent)
        if inter >= min_overlap and inter > 0:
            jac = inter / (len(c.extent) + len(extent) - inter)
            hits.append((-jac, _lectic_key(c.intent), c))
    hits.sort(key=lambda h: h[:2])
    return [h[2] for h in hits]


def _intent_peers(sqpc: Sequence[FormalConcept], rng: random.Random | None) -> Iterator[int]:
    # Peers inside one intent are tied: id order, or a random order drawn
    # from ``rng`` (exactly one draw per call, even for an empty SQPC).
    if rng is None:
        key = None
    else:
        salt = rng.getrandbits(32)
        key = lambda p: hash((salt, p))  # noqa: E731
    for c in sqpc:
        yield from sorted(c.intent, key=key)


def get_selected_peers(sqpc: Sequence[FormalConcept], rng: random.Random | None = None) -> list[int]:
    """Ordered union of the intents, in SQPC order."""
    return list(dict.fromkeys(_intent_peers(sqpc, rng)))


def _similar_indexed(kb: KnowledgeBase, extent: frozenset, min_overlap: int) -> list[FormalConcept]:
    # Same result as get_similar_concepts(kb.e2, extent) using the query-id index.
    memo_key = ("sqpc", extent, min_overlap)
    if memo_key in kb.memo:
        return kb.memo[memo_key]
    overlap: Counter = Counter()
    for q in extent:
        for pos in kb.query_index.get(q, ()):
            overlap[pos] += 1
    hits = []
    for pos, inter in overlap.items():
        if inter < min_overlap:
            continue
        c = kb.e2[pos]
        jac = inter / (len(c.extent) + len(extent) - inter)
        hits.append((-jac, kb.e2_keys[pos], pos))
    hits.sort()
    kb.memo[memo_key] = out = [kb.e2[h[2]] for h in hits]
    return out


def _ranked_positions(kb: KnowledgeBase, terms: frozenset) -> list[int]:
    """Positions of e1 concepts with positive similarity, best first."""
    memo_key = ("sqtc", terms)
    if memo_key in kb.memo:
        return kb.memo[memo_key]
    positions = set()
    for t in terms:
        positions.update(kb.term_index.get(t, ()))
    ranked = []
    for pos in positions:
        c = kb.e1[pos]
        s = similarity(terms, c.intent)
        ranked.append((-s, -len(c.extent), kb.e1_keys[pos], pos))
    ranked.sort()
    kb.memo[memo_key] = out = [r[3] for r in ranked]
    return out


def lps_select_v2(
    kb: KnowledgeBase,
    query: Query,
    pmax: int,
    stats: Counter | None = None,
    min_overlap: int = 1,
    exclude: frozenset = frozenset(),
    rng: random.Random | None = None,
    truncate: bool = False,
) -> list[int]:
    """Pmax-bounded selection: expand the best remaining e1 concept until enough peers.

    The last expansion may push the list past ``pmax``. With ``truncate`` the
    scan stops at ``pmax`` peers, which yields exactly the first ``pmax``
    entries of the untruncated result.
    """
    if pmax < 1:
        raise ValueError("pmax must be at least 1")
    # Removing a picked concept does not change the others' scores, so
    # repeated getConcept over the shrinking set walks the ranking in order.
    remaining = iter(_ranked_positions(kb, query.terms))
    selected: dict = {}
    while len(selected) < pmax:
        pos = next(remaining, None)
        if pos is None:
            break
        if stats is not None:
            stats["e1_visits"] += 1
        sqpc = _similar_indexed(kb, kb.e1[pos].extent, min_overlap)
        for p in _intent_peers(sqpc, rng):
            if p != query.origin_peer and p not in exclude:
                selected.setdefault(p, None)
                if truncate and len(selected) >= pmax:
                    break
    return list(selected)


def lps_select_v1(
    kb: KnowledgeBase,
    query: Query,
    pmax: int,
    stats: Counter | None = None,
    min_overlap: int = 1,
    exclude: frozenset = frozenset(),
    rng: random.Random | None = None,
    truncate: bool = False,
) -> list[int]:
    """Unbounded selection: expand every concept of the ranked SQTC, ignoring ``pmax``."""
    if pmax < 1:
        raise ValueError("pmax must be at least 1")
    sqtc = rank_e1(kb.e1, query)
    selected: dict = {}
    for ranked in sqtc:
        if stats is not None:
            stats["e1_visits"] += 1
        sqpc = get_similar_concepts(kb.e2, ranked.concept.extent, min_overlap)
        for p in get_selected_peers(sqpc, rng):
            if p != query.origin_peer and p not in exclude:
                selected.setdefault(p, None)
    return list(selected)


def flooding_select(neighbors: Sequence[int], pmax: int, rng: random.Random) -> list[int]:
    return rng.sample(list(neighbors), min(pmax, len(neighbors)))


def fallback_fill(
    selected: Sequence[int], neighbors: Sequence[int], pmax: int, rng: random.Random
) -> list[int]:
    """Pad ``selected`` with random neighbors up to ``pmax`` peers."""
    if len(selected) >= pmax:
        return list(selected[:pmax])
    chosen = set(selected)
    pool = [n for n in neighbors if n not in chosen]
    pad = rng.sample(pool, min(pmax - len(selected), len(pool)))
    return list(selected) + pad
