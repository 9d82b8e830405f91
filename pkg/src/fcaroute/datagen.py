"""Synthetic topical datasets and their TSV file format.

A dataset directory holds three files:

``peers.tsv``      ``peer_id<TAB>n1,n2,...``
``documents.tsv``  ``doc_id<TAB>peer_id<TAB>t1 t2 ...``  (one row per replica)
``queries.tsv``    ``query_id<TAB>peer_id<TAB>t1 t2 ...`` (issue order)

Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from pathlib import Path

import networkx as nx

log = logging.getLogger(__name__)

PEERS_FILE = "peers.tsv"
DOCUMENTS_FILE = "documents.tsv"
QUERIES_FILE = "queries.tsv"

# share of a peer's interest held by its primary topic; the rest goes to one secondary topic
PRIMARY_WEIGHT = 0.9
# probability that a replica lands on a peer interested in the document's topic
REPLICA_LOCALITY = 0.95
# baseline issue weight for peers with no interest in a query's topic
ISSUER_FLOOR = 0.001


class DataError(ValueError):
    """Malformed or inconsistent dataset/config input."""


@dataclass(frozen=True)
class Dataset:
    peers: list  # (peer_id, tuple of neighbor ids)
    documents: list  # (doc_id, host peer_id, frozenset of terms)
    queries: list  # (query_id, issuer peer_id, frozenset of terms)

    def validate(self) -> None:
        ids = [p for p, _ in self.peers]
        known = set(ids)
        if len(known) != len(ids):
            raise DataError("duplicate peer id")
        adjacency = {p: set(nbrs) for p, nbrs in self.peers}
        for p, nbrs in self.peers:
            if len(set(nbrs)) != len(nbrs):
                raise DataError(f"peer {p}: duplicate neighbor")
            for n in nbrs:
                if n not in known:
                    raise DataError(f"peer {p}: unknown neighbor id {n}")
                if n == p:
                    raise DataError(f"peer {p}: self loop")
                if p not in adjacency[n]:
                    raise DataError(f"peer {p}: neighbor {n} does not list {p} back")
        doc_terms: dict = {}
        hosted = set()
        for doc, host, terms in self.documents:
            if host not in known:
                raise DataError(f"document {doc}: unknown peer id {host}")
            if (doc, host) in hosted:
                raise DataError(f"document {doc}: listed twice on peer {host}")
            hosted.add((doc, host))
            if doc_terms.setdefault(doc, terms) != terms:
                raise DataError(f"document {doc}: replicas disagree on terms")
        last = None
        for qid, issuer, terms in self.queries:
            if issuer not in known:
                raise DataError(f"query {qid}: unknown peer id {issuer}")
            if not terms:
                raise DataError(f"query {qid}: no terms")
            if last is not None and qid <= last:
                raise DataError(f"query {qid}: ids must be strictly increasing")
            last = qid


@dataclass(frozen=True)
class GenParams:
    n_peers: int = 100
    n_docs: int = 2000
    n_queries: int = 5000
    n_topics: int = 20
    terms_per_topic: int = 8
    doc_terms: int = 4
    query_terms: int = 2
    replication_factor: int = 3
    degree: int = 4
    zipf_exponent: float = 1.0
    seed: int = 0

    def check(self) -> None:
        for name in ("n_peers", "n_docs", "n_queries", "n_topics", "terms_per_topic",
                     "doc_terms", "query_terms", "replication_factor"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be positive")
        if self.degree < 0 or self.zipf_exponent < 0:
            raise DataError("degree and zipf_exponent must be non-negative")
        if self.n_peers > 1 and self.degree == 0:
            raise DataError("degree must be positive when there is more than one peer")
        if self.degree >= self.n_peers and self.n_peers > 1:
            raise DataError(f"degree ({self.degree}) must be smaller than n_peers ({self.n_peers})")
        if (self.degree * self.n_peers) % 2:
            raise DataError("degree * n_peers must be even for a regular graph")
        if self.doc_terms > self.terms_per_topic or self.query_terms > self.terms_per_topic:
            raise DataError("doc_terms and query_terms cannot exceed terms_per_topic")
        if self.query_terms > self.doc_terms:
            log.warning("query_terms > doc_terms: conjunctive queries can never match")


def _topology(n: int, degree: int, rng: random.Random) -> list[tuple[int, ...]]:
    if n == 1:
        return [()]
    for _ in range(1000):
        g = nx.random_regular_graph(degree, n, seed=rng.randrange(2**32))
        if nx.is_connected(g):
            return [tuple(sorted(g.neighbors(i))) for i in range(n)]
    raise DataError(f"no connected {degree}-regular graph found on {n} peers")


def generate(params: GenParams) -> Dataset:
    params.check()
    rng = random.Random(params.seed)
    n, k = params.n_peers, params.n_topics
    neighbors = _topology(n, params.degree, rng)

    primary = [i % k for i in range(n)]
    rng.shuffle(primary)
    secondary = []
    for p in range(n):
        others = [t for t in range(k) if t != primary[p]]
        secondary.append(rng.choice(others) if others else primary[p])
    interest = [{primary[p]: PRIMARY_WEIGHT} for p in range(n)]
    for p in range(n):
        interest[p][secondary[p]] = interest[p].get(secondary[p], 0.0) + (1 - PRIMARY_WEIGHT)
    fans = {t: [p for p in range(n) if t in interest[p]] for t in range(k)}

    def pool(topic: int) -> list[int]:
        return list(range(topic * params.terms_per_topic, (topic + 1) * params.terms_per_topic))

    documents = []
    for doc in range(params.n_docs):
        host = rng.randrange(n)
        topic = primary[host] if rng.random() < PRIMARY_WEIGHT else secondary[host]
        terms = frozenset(rng.sample(pool(topic), params.doc_terms))
        hosts = {host}
        target = min(params.replication_factor, n)
        while len(hosts) < target:
            local = [p for p in fans[topic] if p not in hosts]
            if local and rng.random() < REPLICA_LOCALITY:
                hosts.add(rng.choice(local))
            else:
                hosts.add(rng.randrange(n))
        documents.extend((doc, h, terms) for h in sorted(hosts))

    ranks = list(range(k))
    rng.shuffle(ranks)
    popularity = [1.0 / (ranks[t] + 1) ** params.zipf_exponent for t in range(k)]
    queries = []
    for qid in range(params.n_queries):
        topic = rng.choices(range(k), weights=popularity)[0]
        weights = [interest[p].get(topic, 0.0) + ISSUER_FLOOR for p in range(n)]
        issuer = rng.choices(range(n), weights=weights)[0]
        terms = frozenset(rng.sample(pool(topic), params.query_terms))
        queries.append((qid, issuer, terms))

    dataset = Dataset(list(enumerate(neighbors)), documents, queries)
    dataset.validate()
    return dataset


def home_topic_share(dataset: Dataset, params: GenParams) -> float:
    """Mean fraction of each peer's documents drawn from its most common topic."""
    per_peer: dict = {}
    for _, host, terms in dataset.documents:
        topic = min(terms) // params.terms_per_topic
        counts = per_peer.setdefault(host, {})
        counts[topic] = counts.get(topic, 0) + 1
    shares = [max(c.values()) / sum(c.values()) for c in per_peer.values()]
    return sum(shares) / len(shares)


def _ids(items) -> str:
    return " ".join(str(x) for x in sorted(items))


def save(dataset: Dataset, directory: str | Path) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    peers = ["# peer_id\tneighbors\n"] + [
        f"{p}\t{','.join(str(x) for x in nbrs)}\n" for p, nbrs in dataset.peers
    ]
    docs = ["# doc_id\tpeer_id\tterms\n"] + [
        f"{d}\t{h}\t{_ids(terms)}\n" for d, h, terms in dataset.documents
    ]
    queries = ["# query_id\tpeer_id\tterms\n"] + [
        f"{q}\t{p}\t{_ids(terms)}\n" for q, p, terms in dataset.queries
    ]
    for name, lines in ((PEERS_FILE, peers), (DOCUMENTS_FILE, docs), (QUERIES_FILE, queries)):
        (out / name).write_text("".join(lines), encoding="utf-8", newline="\n")


def _records(path: Path, n_fields: int):
    if not path.exists():
        raise DataError(f"{path}: file not found")
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != n_fields:
                raise DataError(f"{path}:{lineno}: expected {n_fields} tab-separated fields, got {len(parts)}")
            yield lineno, parts


def _parse_ints(text: str, sep: str | None, where: str) -> list[int]:
    try:
        return [int(x) for x in text.split(sep) if x != ""]
    except ValueError:
        raise DataError(f"{where}: expected integer ids, got {text!r}") from None


def load(directory: str | Path) -> Dataset:
    root = Path(directory)
    peers, documents, queries = [], [], []
    path = root / PEERS_FILE
    for lineno, (pid, nbrs) in _records(path, 2):
        where = f"{path}:{lineno}"
        peers.append((_parse_ints(pid, None, where)[0], tuple(_parse_ints(nbrs, ",", where))))
    path = root / DOCUMENTS_FILE
    for lineno, (doc, host, terms) in _records(path, 3):
        where = f"{path}:{lineno}"
        head = _parse_ints(f"{doc} {host}", None, where)
        if len(head) != 2:
            raise DataError(f"{where}: missing document or peer id")
        documents.append((head[0], head[1], frozenset(_parse_ints(terms, None, where))))
    path = root / QUERIES_FILE
    for lineno, (qid, issuer, terms) in _records(path, 3):
        where = f"{path}:{lineno}"
        head = _parse_ints(f"{qid} {issuer}", None, where)
        if len(head) != 2:
            raise DataError(f"{where}: missing query or peer id")
        queries.append((head[0], head[1], frozenset(_parse_ints(terms, None, where))))
    dataset = Dataset(peers, documents, queries)
    dataset.validate()
    return dataset
