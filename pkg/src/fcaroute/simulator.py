"""Deterministic query-routing simulation over a static overlay.

The run has two phases. Warm-up queries are flooded so that every peer
accumulates a query log; then each peer mines its initial knowledge base and
the remaining queries are routed with the configured strategy, with
knowledge-base maintenance at the scheduled points.
"""

from __future__ import annotations

import logging
import random
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .config import SimConfig
from .datagen import DataError, Dataset
from .knowledge import KnowledgeBase, LogEntry, QueryLog, build_static, update_incremental
from .routing import Query, fallback_fill, flooding_select, lps_select_v1, lps_select_v2

log = logging.getLogger(__name__)

_SELECTORS = {"lps_v1": lps_select_v1, "lps_v2": lps_select_v2}


@dataclass
class Peer:
    id: int
    neighbors: tuple
    documents: dict = field(default_factory=dict)  # doc id -> terms
    log: QueryLog = field(default_factory=QueryLog)
    kb: KnowledgeBase = field(default_factory=KnowledgeBase)
    seen_queries: set = field(default_factory=set)
    rng: random.Random = field(default_factory=random.Random)
    _index: dict = field(default_factory=dict, repr=False)  # term -> doc ids

    def add_document(self, doc: int, terms: frozenset) -> None:
        self.documents[doc] = terms
        for t in terms:
            self._index.setdefault(t, set()).add(doc)


class QueryMessage(NamedTuple):
    query: Query
    ttl: int
    sender: int | None
    target: int
    path: tuple = ()  # peers that forwarded this copy, origin first


@dataclass(frozen=True)
class QueryOutcome:
    results: frozenset  # (peer, doc) pairs
    messages: int
    responders: frozenset
    reached: int  # peers that evaluated the query


@dataclass(frozen=True)
class IntervalMetrics:
    interval_index: int
    mean_recall: float
    mean_messages: float
    kb_concepts_mean: float
    maintenance_time_mean: float  # ms per peer maintenance operation
    queries_answered: int
    maintenance_work: int = 0
    queries: int = 0


@dataclass(frozen=True)
class MaintenanceRound:
    index: int  # 0 is the initial base
    at_query: int
    mode: str
    peers: int
    e1_mean: float
    e2_mean: float
    work: int  # closures summed over peers
    seconds: float  # wall time summed over peers


@dataclass
class RunResult:
    config: SimConfig
    intervals: list
    rounds: list
    recalls: list  # per post-warm-up query, None when nothing was relevant
    messages: list


def local_search(peer: Peer, terms: frozenset) -> set:
    """Documents of ``peer`` containing every term of the query."""
    postings = []
    for t in terms:
        docs = peer._index.get(t)
        if not docs:
            return set()
        postings.append(docs)
    postings.sort(key=len)
    return set(postings[0]).intersection(*postings[1:])


def relevant_set(peers: Sequence[Peer], terms: frozenset) -> set:
    """Every (peer, doc) instance in the network matching the query."""
    return {(p.id, d) for p in peers for d in local_search(p, terms)}


def recall(outcome: QueryOutcome, dp: set) -> float | None:
    """Share of relevant instances retrieved; ``None`` when nothing is relevant."""
    if not dp:
        return None
    return len(outcome.results & dp) / len(dp)


def record_downloads(origin: Peer, outcome: QueryOutcome, query: Query, append: bool = True) -> LogEntry:
    """Log the query at its origin; every peer that returned a match is positive."""
    remote = [(p, d) for p, d in outcome.results if p != origin.id]
    entry = LogEntry(
        query_id=query.id,
        terms=query.terms,
        downloaded_docs=frozenset(d for _, d in remote),
        positive_peers=frozenset(p for p, _ in remote),
    )
    if append:
        origin.log.append(entry)
    return entry


class Simulator:
    def __init__(self, dataset: Dataset, config: SimConfig):
        dataset.validate()
        self.dataset = dataset
        self.config = config.resolve(len(dataset.peers), len(dataset.queries))
        cfg = self.config
        self.peers = {
            pid: Peer(pid, tuple(nbrs), rng=random.Random(f"{cfg.seed}:{pid}"))
            for pid, nbrs in dataset.peers
        }
        self._postings: dict = {}  # term -> {(peer, doc)}
        for doc, host, terms in dataset.documents:
            self.peers[host].add_document(doc, terms)
            for t in terms:
                self._postings.setdefault(t, set()).add((host, doc))
        self.rounds: list[MaintenanceRound] = []
        self._next_update: dict = {pid: 0 for pid in self.peers}
        self._maint_log: list = []  # (query index, work, seconds, ops)

    def relevant(self, terms: frozenset) -> set:
        postings = []
        for t in terms:
            inst = self._postings.get(t)
            if not inst:
                return set()
            postings.append(inst)
        postings.sort(key=len)
        return set(postings[0]).intersection(*postings[1:])

    def _targets(self, peer: Peer, query: Query, strategy: str, path: tuple) -> list[int]:
        cfg = self.config
        banned = frozenset((peer.id, query.origin_peer, *path))
        candidates = [n for n in peer.neighbors if n not in banned]
        if strategy == "flooding":
            return flooding_select(candidates, cfg.pmax, peer.rng)
        picks = _SELECTORS[strategy](
            peer.kb, query, cfg.pmax,
            min_overlap=cfg.sqpc_min_overlap,
            exclude=banned,
            rng=peer.rng if cfg.random_ties else None,
            truncate=strategy == "lps_v2",
        )
        picks = [p for p in picks if p in self.peers][: cfg.pmax]
        if cfg.fallback:
            picks = fallback_fill(picks, candidates, cfg.pmax, peer.rng)
        return picks

    def propagate(self, origin: int, query: Query, strategy: str | None = None,
                  intermediate: str | None = None) -> QueryOutcome:
        if origin not in self.peers:
            raise DataError(f"unknown origin peer {origin}")
        cfg = self.config
        strategy = strategy or cfg.strategy
        intermediate = intermediate or (cfg.intermediate if strategy != "flooding" else "flooding")
        results, responders = set(), set()
        messages = reached = 0
        queue = deque([QueryMessage(query, cfg.ttl, None, origin, ())])
        while queue:
            msg = queue.popleft()
            peer = self.peers[msg.target]
            if query.id in peer.seen_queries:
                continue
            peer.seen_queries.add(query.id)
            reached += 1
            hits = local_search(peer, query.terms)
            if hits:
                responders.add(peer.id)
                results.update((peer.id, d) for d in hits)
            # the origin sends with the full ttl; a receiver forwards only if hops remain
            remaining = msg.ttl if msg.sender is None else msg.ttl - 1
            if remaining <= 0:
                continue
            path = msg.path + (peer.id,)
            chosen = strategy if msg.sender is None else intermediate
            for t in self._targets(peer, query, chosen, msg.path):
                messages += 1
                queue.append(QueryMessage(query, remaining, peer.id, t, path))
        return QueryOutcome(frozenset(results), messages, frozenset(responders), reached)

    def _maintain_peer(self, peer: Peer, initial: bool) -> tuple[int, float] | None:
        if initial or self.config.maintenance_mode == "static":
            peer.kb = build_static(peer.log, peer.kb)
        else:
            new = update_incremental(peer.kb, peer.log)
            if new is None:
                return None
            peer.kb = new
        return peer.kb.work, peer.kb.seconds

    def maintain_all(self, at_query: int, initial: bool = False) -> MaintenanceRound:
        work = 0
        seconds = 0.0
        ops = 0
        for pid in sorted(self.peers):
            done = self._maintain_peer(self.peers[pid], initial)
            if done is not None:
                work += done[0]
                seconds += done[1]
                ops += 1
        n = len(self.peers)
        rnd = MaintenanceRound(
            index=len(self.rounds),
            at_query=at_query,
            mode="static" if initial else self.config.maintenance_mode,
            peers=ops,
            e1_mean=sum(len(p.kb.e1) for p in self.peers.values()) / n,
            e2_mean=sum(len(p.kb.e2) for p in self.peers.values()) / n,
            work=work,
            seconds=seconds,
        )
        self.rounds.append(rnd)
        self._maint_log.append((at_query, work, seconds, ops))
        return rnd

    def _per_peer_maintenance(self, peer: Peer, at_query: int) -> None:
        sched = self.config.update_schedule
        i = self._next_update[peer.id]
        if i >= len(sched) or len(peer.log) < sched[i]:
            return
        while i < len(sched) and len(peer.log) >= sched[i]:
            i += 1
        self._next_update[peer.id] = i
        done = self._maintain_peer(peer, initial=False)
        if done is not None:
            self._maint_log.append((at_query, done[0], done[1], 1))

    def run(self, progress=None) -> RunResult:
        cfg = self.config
        queries = self.dataset.queries
        warmup = cfg.warmup_queries
        schedule = set(cfg.update_schedule) if cfg.update_counting == "global" else set()
        maintaining = cfg.maintenance_mode != "off"
        recalls, messages = [], []
        intervals = []
        bucket: list = []

        def close_bucket(end: int) -> None:
            start = warmup + len(intervals) * cfg.interval
            rs = [r for r, _, _ in bucket if r is not None]
            maint = [m for m in self._maint_log if start <= m[0] < end]
            ops = sum(m[3] for m in maint)
            intervals.append(IntervalMetrics(
                interval_index=len(intervals),
                mean_recall=sum(rs) / len(rs) if rs else 0.0,
                mean_messages=sum(m for _, m, _ in bucket) / len(bucket),
                kb_concepts_mean=sum(p.kb.size for p in self.peers.values()) / len(self.peers),
                maintenance_time_mean=1000 * sum(m[2] for m in maint) / ops if ops else 0.0,
                queries_answered=sum(1 for _, _, a in bucket if a),
                maintenance_work=sum(m[1] for m in maint),
                queries=len(bucket),
            ))
            if progress is not None:
                progress(intervals[-1])
            bucket.clear()

        for qi, (qid, issuer, terms) in enumerate(queries):
            if qi == warmup:
                self.maintain_all(qi, initial=True)
                log.debug("initial bases built after %d queries", qi)
            elif qi > warmup and qi in schedule and maintaining:
                self.maintain_all(qi)
            query = Query(qid, terms, issuer)
            warm = qi < warmup
            outcome = self.propagate(issuer, query, strategy="flooding" if warm else cfg.strategy)
            origin = self.peers[issuer]
            record_downloads(origin, outcome, query)
            if warm:
                continue
            if cfg.update_counting == "per_peer" and maintaining:
                self._per_peer_maintenance(origin, qi)
            r = recall(outcome, self.relevant(terms))
            recalls.append(r)
            messages.append(outcome.messages)
            bucket.append((r, outcome.messages, bool(outcome.results)))
            if len(bucket) == cfg.interval:
                close_bucket(qi + 1)
        if bucket:
            close_bucket(len(queries))
        return RunResult(cfg, intervals, list(self.rounds), recalls, messages)


def run(config: SimConfig, dataset: Dataset) -> list[IntervalMetrics]:
    return Simulator(dataset, config).run().intervals
