"""Tokenization, stopword removal, vocabulary capping, and the sparse DTM."""

from __future__ import annotations

import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from scipy import sparse

from .errors import EmptyCorpusError, InputError, SchemaError

if TYPE_CHECKING:  # pragma: no cover - type hints only
    from .corpus_ingest import Corpus

_WORD_RE = re.compile(r"\w+")

DEFAULT_VOCAB_SIZE = 1000
DEFAULT_TEXT_FIELDS = ("title", "abstract", "keywords")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-word boundaries; keep tokens with a letter.

    Letterless runs (pure numbers, pure punctuation) are dropped, so
    "Data-driven Science, 2022!" yields ['data', 'driven', 'science'].
    Idempotent: tokenizing its own joined output changes nothing.
    """
    return [
        t for t in _WORD_RE.findall(text.lower()) if any(c.isalpha() for c in t)
    ]


def remove_stopwords(tokens: Sequence[str], stoplist: frozenset[str]) -> list[str]:
    """Drop stoplisted tokens, preserving order. Case-sensitive on purpose:
    tokens are already lowercased and stoplists are normalized on load."""
    return [t for t in tokens if t not in stoplist]


def load_stoplist(path) -> frozenset[str]:
    """Read one term per line; '#' starts a comment, blanks are ignored.
    Terms are normalized to lowercase."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read stoplist {p}: {exc}") from exc
    terms = set()
    for line in text.splitlines():
        term = line.split("#", 1)[0].strip().lower()
        if term:
            terms.add(term)
    return frozenset(terms)


def default_stoplist() -> frozenset[str]:
    """The bundled English function-word list (articles, pronouns,
    prepositions, conjunctions, auxiliaries)."""
    ref = resources.files("corpus_scope.data").joinpath("stopwords_en.txt")
    terms = set()
    for line in ref.read_text(encoding="utf-8").splitlines():
        term = line.split("#", 1)[0].strip().lower()
        if term:
            terms.add(term)
    return frozenset(terms)


@dataclass(frozen=True)
class TokenSequence:
    """Ordered tokens of one document after cleaning."""

    doc_id: str
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def _document_text(doc, fields: Sequence[str]) -> str:
    parts: list[str] = []
    for name in fields:
        if name == "keywords":
            parts.extend(doc.keywords)
        else:
            parts.append(getattr(doc, name))
    return " ".join(p for p in parts if p)


def build_sequences(
    corpus: "Corpus",
    stoplist: frozenset[str],
    fields: Sequence[str] = DEFAULT_TEXT_FIELDS,
    threads: int = 1,
) -> list[TokenSequence]:
    """Tokenize each document's selected fields (concatenated in the given
    order) and remove stopwords. With ``threads > 1`` documents are processed
    in a thread pool; output order always follows corpus order, so results are
    identical for any thread count."""
    for name in fields:
        if name not in DEFAULT_TEXT_FIELDS:
            raise SchemaError(f"unknown text field: {name!r}")

    def clean(doc) -> TokenSequence:
        toks = remove_stopwords(tokenize(_document_text(doc, fields)), stoplist)
        return TokenSequence(doc_id=doc.id, tokens=tuple(toks))

    docs = list(corpus)
    if threads > 1 and len(docs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(clean, docs))
    return [clean(d) for d in docs]


@dataclass(frozen=True)
class Vocabulary:
    """Capped term list, most frequent first; ties break lexicographically."""

    terms: tuple[str, ...]
    frequencies: tuple[int, ...]
    cap: int
    index: dict[str, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


def build_vocabulary(
    sequences: Iterable[TokenSequence], p: int = DEFAULT_VOCAB_SIZE
) -> Vocabulary:
    """Count corpus-wide frequencies and keep the top ``p`` terms.

    Ordering is (frequency desc, term asc), which makes the result independent
    of document order. Raises EmptyCorpusError when no tokens exist at all.
    """
    if p < 1:
        raise ValueError(f"vocabulary cap must be >= 1, got {p}")
    counts: Counter[str] = Counter()
    for seq in sequences:
        counts.update(seq.tokens)
    if not counts:
        raise EmptyCorpusError("no tokens in any document; cannot build vocabulary")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:p]
    terms = tuple(t for t, _ in ranked)
    freqs = tuple(f for _, f in ranked)
    return Vocabulary(
        terms=terms,
        frequencies=freqs,
        cap=p,
        index={t: i for i, t in enumerate(terms)},
    )


@dataclass(frozen=True)
class SparseDTM:
    """Document-term count matrix in CSR form with a CSC companion.

    Rows follow corpus (id-sorted) order, columns follow vocabulary order.
    Marginals are precomputed; ``n_total`` is the grand total of counts.
    """

    doc_ids: tuple[str, ...]
    terms: tuple[str, ...]
    csr: sparse.csr_matrix = field(repr=False)
    csc: sparse.csc_matrix = field(repr=False)
    row_totals: np.ndarray = field(repr=False)
    col_totals: np.ndarray = field(repr=False)
    n_total: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.csr.shape

    def row_counts(self, i: int) -> np.ndarray:
        return np.asarray(self.csr.getrow(i).todense()).ravel()

    def dense(self) -> np.ndarray:
        return self.csr.toarray()


def build_dtm(sequences: Sequence[TokenSequence], vocab: Vocabulary) -> SparseDTM:
    """Count in-vocabulary tokens per document. Out-of-vocabulary tokens are
    ignored; documents with no in-vocabulary tokens keep an all-zero row so
    row order is stable."""
    index = vocab.index
    rows: list[int] = []
    cols: list[int] = []
    data: list[int] = []
    for i, seq in enumerate(sequences):
        cell: Counter[int] = Counter()
        for tok in seq.tokens:
            j = index.get(tok)
            if j is not None:
                cell[j] += 1
        for j in sorted(cell):
            rows.append(i)
            cols.append(j)
            data.append(cell[j])
    shape = (len(sequences), len(vocab))
    csr = sparse.csr_matrix(
        (np.asarray(data, dtype=np.int64), (rows, cols)), shape=shape
    )
    csr.sum_duplicates()
    row_totals = np.asarray(csr.sum(axis=1), dtype=np.int64).ravel()
    col_totals = np.asarray(csr.sum(axis=0), dtype=np.int64).ravel()
    return SparseDTM(
        doc_ids=tuple(s.doc_id for s in sequences),
        terms=vocab.terms,
        csr=csr,
        csc=csr.tocsc(),
        row_totals=row_totals,
        col_totals=col_totals,
        n_total=int(row_totals.sum()),
    )


def export_matrixmarket(dtm: SparseDTM, comment: str = "") -> str:
    """Serialize counts as MatrixMarket coordinate text (1-based, row-major).

    The writer is deliberately hand-rolled: entry order and number formatting
    are pinned so output bytes are stable across library versions.
    """
    coo = dtm.csr.tocoo()
    order = np.lexsort((coo.col, coo.row))
    lines = ["%%MatrixMarket matrix coordinate integer general"]
    if comment:
        for part in comment.splitlines():
            lines.append(f"% {part}")
    lines.append(f"{dtm.shape[0]} {dtm.shape[1]} {coo.nnz}")
    rows, cols, data = coo.row[order], coo.col[order], coo.data[order]
    for r, c, v in zip(rows, cols, data):
        lines.append(f"{r + 1} {c + 1} {v}")
    return "\n".join(lines) + "\n"


def export_dtm_index(dtm: SparseDTM, comment: str = "") -> str:
    """Sidecar CSV mapping 1-based matrix positions to doc ids and terms."""
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append("kind,position,label,total")
    for i, doc_id in enumerate(dtm.doc_ids):
        lines.append(f"doc,{i + 1},{_csv_field(doc_id)},{int(dtm.row_totals[i])}")
    for j, term in enumerate(dtm.terms):
        lines.append(f"term,{j + 1},{_csv_field(term)},{int(dtm.col_totals[j])}")
    return "\n".join(lines) + "\n"


def _csv_field(value: str) -> str:
    if any(ch in value for ch in ',"\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def load_matrixmarket(text: str) -> sparse.csr_matrix:
    """Parse the coordinate format written by :func:`export_matrixmarket`."""
    raw = text.splitlines()
    if raw and raw[0].startswith("%%") and "MatrixMarket" not in raw[0]:
        raise SchemaError(f"not a MatrixMarket header: {raw[0]!r}")
    lines = [ln for ln in raw if ln and not ln.startswith("%")]
    if not lines:
        raise SchemaError("empty MatrixMarket payload")
    try:
        n, p, nnz = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise SchemaError(f"malformed size line: {lines[0]!r}") from exc
    if len(lines) - 1 != nnz:
        raise SchemaError(f"expected {nnz} entries, found {len(lines) - 1}")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    data = np.empty(nnz, dtype=np.int64)
    for k, ln in enumerate(lines[1:]):
        try:
            r, c, v = ln.split()
            rows[k], cols[k], data[k] = int(r) - 1, int(c) - 1, int(v)
        except ValueError as exc:
            raise SchemaError(f"malformed entry line: {ln!r}") from exc
        if not (0 <= rows[k] < n and 0 <= cols[k] < p):
            raise SchemaError(f"entry out of bounds: {ln!r}")
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, p))
