"""Bibliographic record ingestion.

Reads exported bibliographic records from CSV or JSON-Lines streams into an
immutable, deterministic :class:`Corpus`. The expected flat schema is the one
produced by the common database exporters:

========== ========================================================
column     meaning
========== ========================================================
id         unique record identifier (required)
title      document title (required column; value may be empty)
year       publication year (required column; value may be empty)
abstract   abstract text (optional)
keywords   author keywords, ';'-separated (optional)
doc_type   publication type, e.g. "Conference Proceeding" (optional)
countries  affiliation countries, ';'-separated (optional)
========== ========================================================

CSV input follows RFC 4180 quoting. JSON-Lines input holds one object per
line with the same field names; ``keywords`` and ``countries`` may be either
arrays or ';'-separated strings, and ``year`` may be a number or a string.

Validation is per-record and non-fatal wherever possible. Rows with an
unparseable or out-of-range year, an empty id, or a duplicate id are dropped
and reported as :class:`RecordError` entries (row numbers are 1-based data
rows; the CSV header is not counted). A row with a *missing* year is kept
with ``year=None`` and flagged but not dropped. Only structural problems
(missing required header columns, undecodable bytes) abort the parse.

Parsed corpora are always sorted by document id, so downstream results never
depend on the order records happened to be exported in.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Iterable

from .errors import EmptyResultError, InputError, SchemaError
from .text_pipeline import tokenize

REQUIRED_COLUMNS = ("id", "title", "year")
OPTIONAL_COLUMNS = ("abstract", "keywords", "doc_type", "countries")

YEAR_MIN = 1900
YEAR_MAX = 2100


class DocType(enum.Enum):
    """Publication types distinguished by the share breakdown."""

    CONFERENCE_PROCEEDING = "Conference Proceeding"
    RESEARCH_ARTICLE = "Research Article"
    BOOK_CHAPTER = "Book Chapter"
    CONFERENCE_REVIEW = "Conference Review"
    BOOK = "Book"
    EDITORIAL = "Editorial"
    OTHER = "Other"


def _type_key(label: str) -> str:
    return "".join(ch for ch in label.lower() if ch.isalpha())


_TYPE_ALIASES = {_type_key(t.value): t for t in DocType}
_TYPE_ALIASES.update(
    {
        # plural forms and common exporter synonyms
        "conferenceproceedings": DocType.CONFERENCE_PROCEEDING,
        "conferencepaper": DocType.CONFERENCE_PROCEEDING,
        "proceedingspaper": DocType.CONFERENCE_PROCEEDING,
        "researcharticles": DocType.RESEARCH_ARTICLE,
        "article": DocType.RESEARCH_ARTICLE,
        "bookchapters": DocType.BOOK_CHAPTER,
        "chapter": DocType.BOOK_CHAPTER,
        "conferencereviews": DocType.CONFERENCE_REVIEW,
        "books": DocType.BOOK,
        "editorials": DocType.EDITORIAL,
    }
)


def normalize_doc_type(label: str | None) -> DocType:
    """Map a raw publication-type label onto :class:`DocType` (case-insensitive).

    Unknown or empty labels map to ``DocType.OTHER``.
    """
    if not label:
        return DocType.OTHER
    return _TYPE_ALIASES.get(_type_key(label), DocType.OTHER)


@dataclass(frozen=True)
class Document:
    """One bibliographic record.

    ``year`` is ``None`` when the source row had no year. ``keywords`` and
    ``countries`` are tuples so documents stay immutable and comparable.
    """

    id: str
    title: str
    abstract: str = ""
    keywords: tuple[str, ...] = ()
    year: int | None = None
    doc_type: DocType = DocType.OTHER
    countries: tuple[str, ...] = ()


@dataclass(frozen=True)
class Provenance:
    """Where a corpus came from and which filters produced it."""

    source: str
    filters: tuple[str, ...] = ()


@dataclass(frozen=True)
class Corpus:
    """An ordered, id-sorted collection of documents."""

    documents: tuple[Document, ...]
    provenance: Provenance

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.documents)

    def derive(self, documents: Iterable[Document], filter_desc: str) -> "Corpus":
        """Return a sub-corpus with ``filter_desc`` appended to provenance."""
        prov = replace(
            self.provenance, filters=self.provenance.filters + (filter_desc,)
        )
        return Corpus(documents=tuple(documents), provenance=prov)


@dataclass(frozen=True)
class RecordError:
    """A per-record validation problem.

    ``row`` is the 1-based data-row (or JSON line) number. ``dropped`` tells
    whether the record was excluded from the corpus or kept with a flag.
    """

    row: int
    reason: str
    dropped: bool = True


def _split_multi(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, (list, tuple)):
        parts = [str(v).strip() for v in value]
    else:
        parts = [p.strip() for p in str(value).split(";")]
    return tuple(p for p in parts if p)


def _parse_year(raw, row: int, errors: list[RecordError]) -> tuple[int | None, bool]:
    """Return (year, keep). Missing year keeps the record; bad year drops it."""
    if raw is None or (isinstance(raw, str) and not raw.strip()):
        errors.append(RecordError(row, "missing year", dropped=False))
        return None, True
    try:
        year = int(str(raw).strip())
    except ValueError:
        errors.append(RecordError(row, "unparseable year", dropped=True))
        return None, False
    if not YEAR_MIN <= year <= YEAR_MAX:
        errors.append(
            RecordError(row, f"year out of range [{YEAR_MIN}, {YEAR_MAX}]", dropped=True)
        )
        return None, False
    return year, True


def _build_document(raw: dict, row: int, errors: list[RecordError]) -> Document | None:
    doc_id = str(raw.get("id") or "").strip()
    if not doc_id:
        errors.append(RecordError(row, "empty id", dropped=True))
        return None
    year, keep = _parse_year(raw.get("year"), row, errors)
    if not keep:
        return None
    return Document(
        id=doc_id,
        title=str(raw.get("title") or ""),
        abstract=str(raw.get("abstract") or ""),
        keywords=_split_multi(raw.get("keywords")),
        year=year,
        doc_type=normalize_doc_type(raw.get("doc_type")),
        countries=_split_multi(raw.get("countries")),
    )


def _iter_csv(text: str, errors: list[RecordError]):
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: no header row") from None
    header = [h.strip().lower() for h in header]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")
    for row_num, values in enumerate(reader, start=1):
        if not values:
            continue
        if len(values) != len(header):
            errors.append(RecordError(row_num, "wrong field count", dropped=True))
            continue
        yield row_num, dict(zip(header, values))


def _iter_jsonl(text: str, errors: list[RecordError]):
    for row_num, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            errors.append(RecordError(row_num, "invalid JSON", dropped=True))
            continue
        if not isinstance(obj, dict):
            errors.append(RecordError(row_num, "record is not an object", dropped=True))
            continue
        yield row_num, {str(k).lower(): v for k, v in obj.items()}


def parse_records(
    stream: BinaryIO,
    format: str,
    source: str = "",
) -> tuple[Corpus, list[RecordError]]:
    """Parse a byte stream of records into a Corpus plus per-record errors.

    ``format`` is ``"csv"`` or ``"jsonl"``. The corpus is sorted by id; for
    duplicate ids the first occurrence wins and later ones are reported.
    Structural problems raise :class:`SchemaError`; I/O and UTF-8 decoding
    errors propagate as raised by the stream.
    """
    fmt = format.strip().lower()
    if fmt not in ("csv", "jsonl"):
        raise SchemaError(f"unknown input format: {format!r}")
    try:
        text = stream.read().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"input is not valid UTF-8: {exc}") from exc

    errors: list[RecordError] = []
    rows = _iter_csv(text, errors) if fmt == "csv" else _iter_jsonl(text, errors)

    by_id: dict[str, Document] = {}
    for row_num, raw in rows:
        doc = _build_document(raw, row_num, errors)
        if doc is None:
            continue
        if doc.id in by_id:
            errors.append(RecordError(row_num, f"duplicate id {doc.id!r}", dropped=True))
            continue
        by_id[doc.id] = doc

    documents = tuple(sorted(by_id.values(), key=lambda d: d.id))
    corpus = Corpus(documents=documents, provenance=Provenance(source=source or fmt))
    return corpus, errors


def parse_file(path, format: str | None = None) -> tuple[Corpus, list[RecordError]]:
    """Open ``path`` in binary mode and parse it, inferring format from suffix."""
    from pathlib import Path

    p = Path(path)
    if format is None:
        suffix = p.suffix.lower()
        format = {".csv": "csv", ".jsonl": "jsonl", ".ndjson": "jsonl"}.get(suffix)
        if format is None:
            raise SchemaError(f"cannot infer format from suffix {suffix!r}")
    try:
        with open(p, "rb") as fh:
            return parse_records(fh, format, source=p.name)
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc}") from exc


def serialize_corpus(corpus: Corpus) -> str:
    """Render a corpus as RFC 4180 CSV text that reparses to an equal corpus."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(REQUIRED_COLUMNS) + list(OPTIONAL_COLUMNS))
    for d in corpus:
        writer.writerow(
            [
                d.id,
                d.title,
                "" if d.year is None else str(d.year),
                d.abstract,
                ";".join(d.keywords),
                d.doc_type.value,
                ";".join(d.countries),
            ]
        )
    return buf.getvalue()


def _contains_phrase(tokens: list[str], phrase: list[str]) -> bool:
    if not phrase or len(phrase) > len(tokens):
        return False
    first = phrase[0]
    span = len(phrase)
    for i, tok in enumerate(tokens[: len(tokens) - span + 1]):
        if tok == first and tokens[i : i + span] == phrase:
            return True
    return False


def filter_by_phrase(corpus: Corpus, phrase: str) -> Corpus:
    """Keep documents whose title, abstract, or any keyword contains ``phrase``.

    Matching is on token sequences (case-insensitive, punctuation-free), so
    "Data-Science." matches the phrase "data science". A phrase must appear as
    contiguous tokens within a single field; it never spans fields.
    """
    phrase_tokens = tokenize(phrase)
    if not phrase_tokens:
        raise ValueError("phrase must contain at least one token")
    kept = []
    for d in corpus:
        fields = [d.title, d.abstract, *d.keywords]
        if any(_contains_phrase(tokenize(f), phrase_tokens) for f in fields):
            kept.append(d)
    return corpus.derive(kept, f"phrase={phrase!r}")


def filter_by_years(
    corpus: Corpus, year_min: int | None = None, year_max: int | None = None
) -> Corpus:
    """Keep documents whose year lies in the closed range; drops year-less docs
    only when a bound is set."""
    if year_min is None and year_max is None:
        return corpus
    kept = [
        d
        for d in corpus
        if d.year is not None
        and (year_min is None or d.year >= year_min)
        and (year_max is None or d.year <= year_max)
    ]
    return corpus.derive(kept, f"years=[{year_min}, {year_max}]")


def partition_by_country(corpus: Corpus, country: str) -> tuple[Corpus, Corpus]:
    """Split into (documents with the country, the rest).

    Matching is a case-insensitive exact name comparison against each entry of
    ``Document.countries``. Every document lands in exactly one side.
    """
    needle = country.strip().casefold()
    if not needle:
        raise ValueError("country must be non-empty")
    members, rest = [], []
    for d in corpus:
        if any(c.strip().casefold() == needle for c in d.countries):
            members.append(d)
        else:
            rest.append(d)
    return (
        corpus.derive(members, f"country={country}"),
        corpus.derive(rest, f"country!={country}"),
    )


def require_nonempty(corpus: Corpus, what: str) -> Corpus:
    """Raise EmptyResultError when a derived corpus came out empty."""
    if len(corpus) == 0:
        raise EmptyResultError(f"{what} produced an empty corpus")
    return corpus
