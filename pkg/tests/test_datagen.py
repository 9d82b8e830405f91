import pytest

from fcaroute.datagen import DataError, Dataset, GenParams, generate, home_topic_share, load, save

SMALL = GenParams(n_peers=20, n_docs=100, n_queries=50, seed=1)


def test_round_trip(tmp_path):
    ds = generate(SMALL)
    save(ds, tmp_path)
    assert load(tmp_path) == ds


def test_same_seed_same_bytes(tmp_path):
    save(generate(SMALL), tmp_path / "a")
    save(generate(SMALL), tmp_path / "b")
    for name in ("peers.tsv", "documents.tsv", "queries.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_single_peer():
    ds = generate(GenParams(n_peers=1, degree=0, n_docs=1, n_queries=1))
    assert ds.peers == [(0, ())] and len(ds.documents) == 1


def test_desk_defaults_are_regular_and_connected():
    import networkx as nx

    ds = generate(GenParams())
    g = nx.Graph((p, n) for p, nbrs in ds.peers for n in nbrs)
    assert nx.is_connected(g) and {d for _, d in g.degree()} == {4}
    assert len(ds.queries) == 5000


def test_topic_locality():
    for seed in range(3):
        params = GenParams(n_peers=40, n_docs=400, n_queries=10, seed=seed)
        assert home_topic_share(generate(params), params) > 2 / params.n_topics


@pytest.mark.parametrize("kwargs, message", [
    (dict(n_peers=4, degree=4), "degree"),
    (dict(n_docs=0), "n_docs"),
    (dict(doc_terms=9), "terms_per_topic"),
    (dict(n_peers=5, degree=3), "even"),
])
def test_bad_params(kwargs, message):
    with pytest.raises(DataError, match=message):
        generate(GenParams(**kwargs))


def test_truncated_documents_file(tmp_path):
    save(generate(SMALL), tmp_path)
    path = tmp_path / "documents.tsv"
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[:5]) + "17\t3\n")
    with pytest.raises(DataError, match=r"documents.tsv:6"):
        load(tmp_path)


def test_unknown_issuer(tmp_path):
    save(generate(SMALL), tmp_path)
    with open(tmp_path / "queries.tsv", "a") as fh:
        fh.write("999\t77\t1 2\n")
    with pytest.raises(DataError, match="unknown peer id 77"):
        load(tmp_path)


def test_validation_errors():
    with pytest.raises(DataError, match="does not list"):
        Dataset([(0, (1,)), (1, ())], [], []).validate()
    with pytest.raises(DataError, match="self loop"):
        Dataset([(0, (0,))], [], []).validate()
    with pytest.raises(DataError, match="disagree"):
        Dataset([(0, ()), (1, ())], [(1, 0, frozenset({1})), (1, 1, frozenset({2}))], []).validate()
    with pytest.raises(DataError, match="increasing"):
        Dataset([(0, ())], [], [(2, 0, frozenset({1})), (1, 0, frozenset({1}))]).validate()


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load(tmp_path)
