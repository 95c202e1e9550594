import xml.etree.ElementTree as ET

import numpy as np
import pytest

from corpus_scope.bigrams import (
    GraphFormat,
    count_bigrams,
    export_graph,
    import_edge_csv,
    merge_undirected,
    threshold_graph,
)
from corpus_scope.errors import ConfigError, SchemaError
from corpus_scope.text_pipeline import TokenSequence


def seqs(*token_lists):
    return [TokenSequence(doc_id=f"d{i}", tokens=tuple(t)) for i, t in enumerate(token_lists)]


# ---------------------------------------------------------------- counting


def test_count_bigrams_ordered_pairs():
    table = count_bigrams(seqs(["machine", "learning", "machine", "learning"]))
    assert dict(table.pairs) == {("machine", "learning"): 2, ("learning", "machine"): 1}
    assert table.total_bigrams == 3
    assert table.frequency("machine", "learning") == 2
    assert table.frequency("learning", "nothing") == 0


def test_count_bigrams_never_crosses_documents():
    table = count_bigrams(seqs(["a", "b"], ["c", "d"]))
    assert ("b", "c") not in table.pairs
    assert dict(table.pairs) == {("a", "b"): 1, ("c", "d"): 1}


def test_count_bigrams_degenerate_documents():
    table = count_bigrams(seqs([], ["only"], ["x", "x"]))
    assert dict(table.pairs) == {("x", "x"): 1}
    assert table.total_bigrams == 1
    assert count_bigrams([]).total_bigrams == 0


def naive_count(token_lists):
    """Reference counter: scan every adjacent position with explicit loops."""
    out = {}
    for toks in token_lists:
        for i in range(len(toks) - 1):
            key = (toks[i], toks[i + 1])
            out[key] = out.get(key, 0) + 1
    return out


def test_count_bigrams_matches_naive_oracle():
    rng = np.random.default_rng(1001)
    alphabet = [f"w{i}" for i in range(8)]
    for _ in range(100):
        docs = [
            [alphabet[int(j)] for j in rng.integers(0, len(alphabet), size=rng.integers(0, 25))]
            for _ in range(int(rng.integers(0, 10)))
        ]
        table = count_bigrams(seqs(*docs))
        assert dict(table.pairs) == naive_count(docs)
        assert table.total_bigrams == sum(max(len(d) - 1, 0) for d in docs)


def test_count_bigrams_invariant_under_document_order():
    rng = np.random.default_rng(1002)
    docs = [[f"t{int(j)}" for j in rng.integers(0, 5, size=12)] for _ in range(6)]
    base = count_bigrams(seqs(*docs))
    shuffled = [docs[i] for i in rng.permutation(len(docs))]
    again = count_bigrams(seqs(*shuffled))
    assert dict(base.pairs) == dict(again.pairs)
    assert base.total_bigrams == again.total_bigrams


# ---------------------------------------------------------------- threshold


def test_threshold_is_inclusive():
    table = count_bigrams(seqs(["a", "b"] * 3 + ["c"]))  # (a,b)=3, (b,a)=2, (b,c)=1
    graph = threshold_graph(table, min_freq=2)
    assert dict(graph.edges) == {("a", "b"): 3, ("b", "a"): 2}
    assert graph.nodes == ("a", "b")
    assert graph.threshold == 2
    assert graph.directed


def test_threshold_graph_may_be_empty():
    graph = threshold_graph(count_bigrams(seqs(["a", "b"])), min_freq=10)
    assert graph.nodes == () and dict(graph.edges) == {}
    with pytest.raises(ConfigError):
        threshold_graph(count_bigrams([]), min_freq=0)


def test_threshold_monotonicity():
    rng = np.random.default_rng(1003)
    docs = [[f"v{int(j)}" for j in rng.integers(0, 4, size=40)] for _ in range(5)]
    table = count_bigrams(seqs(*docs))
    for low, high in [(1, 2), (2, 5), (3, 9), (1, 30)]:
        loose = set(threshold_graph(table, low).edges)
        tight = set(threshold_graph(table, high).edges)
        assert tight <= loose


def test_merge_undirected_sums_reciprocal_pairs():
    table = count_bigrams(seqs(["a", "b", "a", "b", "a"]))  # (a,b)=2, (b,a)=2
    graph = merge_undirected(threshold_graph(table, 1))
    assert not graph.directed
    assert dict(graph.edges) == {("a", "b"): 4}
    # already-canonical edges survive unchanged
    single = merge_undirected(threshold_graph(count_bigrams(seqs(["x", "z"])), 1))
    assert dict(single.edges) == {("x", "z"): 1}


# ---------------------------------------------------------------- exports


def demo_graph():
    table = count_bigrams(seqs(["data", "science", "data", "science"], ["deep", "learning"]))
    return threshold_graph(table, min_freq=1)


def test_export_dot_directed_and_undirected():
    graph = demo_graph()
    dot = export_graph(graph, GraphFormat.DOT, provenance="demo run").decode()
    assert dot.startswith("digraph bigrams {")
    assert "// demo run" in dot
    assert '"data" -> "science" [weight=2];' in dot
    assert '"science" -> "data" [weight=1];' in dot

    undirected = export_graph(merge_undirected(graph), "dot").decode()
    assert undirected.startswith("graph bigrams {")
    assert '"data" -- "science" [weight=3];' in undirected


def test_export_dot_escapes_quotes():
    from corpus_scope.bigrams import BigramGraph

    graph = BigramGraph(nodes=('he said "hi"',), edges={}, threshold=1, directed=True)
    dot = export_graph(graph, "dot").decode()
    assert '"he said \\"hi\\"";' in dot


def test_export_graphml_is_well_formed():
    data = export_graph(demo_graph(), GraphFormat.GRAPHML, provenance="demo")
    root = ET.fromstring(data.decode())
    ns = "{http://graphml.graphdrawing.org/xmlns}"
    graph_el = root.find(f"{ns}graph")
    assert graph_el.get("edgedefault") == "directed"
    nodes = [n.get("id") for n in graph_el.findall(f"{ns}node")]
    assert nodes == ["data", "deep", "learning", "science"]
    edges = graph_el.findall(f"{ns}edge")
    weights = {(e.get("source"), e.get("target")): int(e.find(f"{ns}data").text)
               for e in edges}
    assert weights == {("data", "science"): 2, ("science", "data"): 1,
                       ("deep", "learning"): 1}


def test_export_edge_csv_round_trip():
    graph = demo_graph()
    data = export_graph(graph, "csv", provenance="fixture v1")
    text = data.decode()
    assert text.splitlines()[0] == "# bigram-graph threshold=1 directed=1"
    assert "# fixture v1" in text
    assert "source,target,weight" in text
    back = import_edge_csv(data)
    assert dict(back.edges) == dict(graph.edges)
    assert back.nodes == graph.nodes
    assert back.threshold == graph.threshold
    assert back.directed == graph.directed


def test_export_is_deterministic_bytes():
    g = demo_graph()
    for fmt in ("dot", "graphml", "csv"):
        assert export_graph(g, fmt) == export_graph(g, fmt)
        assert isinstance(export_graph(g, fmt), bytes)


def test_export_unknown_format_rejected():
    with pytest.raises(ConfigError, match="format"):
        export_graph(demo_graph(), "gexf")


def test_import_edge_csv_rejects_garbage():
    with pytest.raises(SchemaError):
        import_edge_csv(b"just,some,stuff\n1,2,3\n")
    with pytest.raises(SchemaError):
        import_edge_csv(b"source,target,weight\na,b\n")
