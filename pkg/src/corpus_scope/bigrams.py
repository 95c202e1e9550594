"""Adjacent word-pair counting and thresholded co-occurrence graphs."""

from __future__ import annotations

import enum
import xml.sax.saxutils
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Sequence

from .errors import ConfigError, SchemaError

if TYPE_CHECKING:  # pragma: no cover - type hints only
    from .text_pipeline import TokenSequence

DEFAULT_THRESHOLD = 150


class GraphFormat(enum.Enum):
    DOT = "dot"
    GRAPHML = "graphml"
    EDGE_CSV = "csv"


@dataclass(frozen=True)
class BigramTable:
    """Counts of ordered adjacent token pairs across a corpus."""

    pairs: Mapping[tuple[str, str], int]
    total_bigrams: int

    def frequency(self, first: str, second: str) -> int:
        return self.pairs.get((first, second), 0)


@dataclass(frozen=True)
class BigramGraph:
    """Directed bigram graph containing pairs at or above a frequency floor."""

    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], int] = field(repr=False)
    threshold: int
    directed: bool = True


def count_bigrams(sequences: Sequence["TokenSequence"]) -> BigramTable:
    """Count ordered pairs of adjacent tokens within each document.

    Pairs never span documents: a document with t tokens contributes exactly
    max(t - 1, 0) pairs, so the table total is sum over docs of (len - 1).
    """
    pairs: dict[tuple[str, str], int] = {}
    total = 0
    for seq in sequences:
        toks = seq.tokens
        total += max(len(toks) - 1, 0)
        for pair in zip(toks, toks[1:]):
            pairs[pair] = pairs.get(pair, 0) + 1
    return BigramTable(pairs=pairs, total_bigrams=total)


def threshold_graph(table: BigramTable, min_freq: int = DEFAULT_THRESHOLD) -> BigramGraph:
    """Keep pairs with frequency >= min_freq (inclusive).

    Nodes are exactly the endpoints of surviving edges, sorted; an empty
    graph (no surviving pair) is a normal result, not an error.
    """
    if min_freq < 1:
        raise ConfigError(f"threshold must be >= 1, got {min_freq}")
    edges = {pair: f for pair, f in table.pairs.items() if f >= min_freq}
    nodes: set[str] = set()
    for a, b in edges:
        nodes.add(a)
        nodes.add(b)
    return BigramGraph(
        nodes=tuple(sorted(nodes)), edges=edges, threshold=min_freq, directed=True
    )


def merge_undirected(graph: BigramGraph) -> BigramGraph:
    """Collapse (a, b) and (b, a) into one undirected edge with summed weight."""
    merged: dict[tuple[str, str], int] = {}
    for (a, b), f in graph.edges.items():
        key = (a, b) if a <= b else (b, a)
        merged[key] = merged.get(key, 0) + f
    return BigramGraph(
        nodes=graph.nodes, edges=merged, threshold=graph.threshold, directed=False
    )


def _sorted_edges(graph: BigramGraph) -> list[tuple[str, str, int]]:
    return [(a, b, graph.edges[(a, b)]) for a, b in sorted(graph.edges)]


def _dot_quote(label: str) -> str:
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_graph(graph: BigramGraph, format: GraphFormat | str, provenance: str = "") -> bytes:
    """Serialize a graph as DOT, GraphML, or edge CSV bytes.

    Nodes and edges are emitted in sorted order and floats never appear, so
    equal graphs always serialize to identical bytes.
    """
    if isinstance(format, str):
        try:
            format = GraphFormat(format.strip().lower())
        except ValueError:
            raise ConfigError(f"unknown graph format: {format!r}") from None

    if format is GraphFormat.DOT:
        kind, arrow = ("digraph", "->") if graph.directed else ("graph", "--")
        lines = [f"{kind} bigrams {{"]
        if provenance:
            lines.append(f"  // {provenance}")
        for node in graph.nodes:
            lines.append(f"  {_dot_quote(node)};")
        for a, b, f in _sorted_edges(graph):
            lines.append(f"  {_dot_quote(a)} {arrow} {_dot_quote(b)} [weight={f}];")
        lines.append("}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    if format is GraphFormat.GRAPHML:
        esc = xml.sax.saxutils.escape
        default = "directed" if graph.directed else "undirected"
        lines = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        ]
        if provenance:
            lines.append(f"  <!-- {esc(provenance)} -->")
        lines.append(
            '  <key id="weight" for="edge" attr.name="weight" attr.type="int"/>'
        )
        lines.append(f'  <graph id="bigrams" edgedefault="{default}">')
        for node in graph.nodes:
            lines.append(f'    <node id={xml.sax.saxutils.quoteattr(node)}/>')
        for a, b, f in _sorted_edges(graph):
            qa, qb = xml.sax.saxutils.quoteattr(a), xml.sax.saxutils.quoteattr(b)
            lines.append(f"    <edge source={qa} target={qb}>")
            lines.append(f'      <data key="weight">{f}</data>')
            lines.append("    </edge>")
        lines.append("  </graph>")
        lines.append("</graphml>")
        return ("\n".join(lines) + "\n").encode("utf-8")

    # edge CSV: structural comment first so the file round-trips losslessly
    lines = [f"# bigram-graph threshold={graph.threshold} directed={int(graph.directed)}"]
    if provenance:
        lines.append(f"# {provenance}")
    lines.append("source,target,weight")
    for a, b, f in _sorted_edges(graph):
        lines.append(f"{_csv_field(a)},{_csv_field(b)},{f}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _csv_field(value: str) -> str:
    if any(ch in value for ch in ',"\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def import_edge_csv(data: bytes) -> BigramGraph:
    """Parse edge CSV written by :func:`export_graph` back into a graph."""
    import csv
    import io

    threshold = 1
    directed = True
    rows: list[str] = []
    for line in data.decode("utf-8").splitlines():
        if line.startswith("#"):
            if line.startswith("# bigram-graph"):
                for part in line.split()[2:]:
                    key, _, value = part.partition("=")
                    if key == "threshold":
                        threshold = int(value)
                    elif key == "directed":
                        directed = bool(int(value))
            continue
        if line:
            rows.append(line)
    if not rows or rows[0] != "source,target,weight":
        raise SchemaError("missing edge CSV header")
    edges: dict[tuple[str, str], int] = {}
    nodes: set[str] = set()
    for rec in csv.reader(io.StringIO("\n".join(rows[1:]), newline="")):
        if not rec:
            continue
        if len(rec) != 3:
            raise SchemaError(f"bad edge row: {rec!r}")
        a, b, f = rec[0], rec[1], int(rec[2])
        edges[(a, b)] = f
        nodes.add(a)
        nodes.add(b)
    return BigramGraph(
        nodes=tuple(sorted(nodes)), edges=edges, threshold=threshold, directed=directed
    )
