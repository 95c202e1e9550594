import io
import json

import numpy as np
import pytest

from corpus_scope.corpus_ingest import (
    Corpus,
    DocType,
    Document,
    Provenance,
    filter_by_phrase,
    filter_by_years,
    normalize_doc_type,
    parse_file,
    parse_records,
    partition_by_country,
    require_nonempty,
    serialize_corpus,
)
from corpus_scope.errors import EmptyResultError, InputError, SchemaError


def parse_csv(text: str):
    return parse_records(io.BytesIO(text.encode("utf-8")), "csv")


def parse_jsonl(text: str):
    return parse_records(io.BytesIO(text.encode("utf-8")), "jsonl")


def make_corpus(*docs: Document) -> Corpus:
    return Corpus(documents=tuple(sorted(docs, key=lambda d: d.id)),
                  provenance=Provenance(source="test"))


# ---------------------------------------------------------------- parsing


def test_parse_basic_csv():
    corpus, errors = parse_csv(
        "id,title,year,abstract,keywords,doc_type,countries\n"
        "A2,Second paper,2021,Some text,data science;ml,Research Article,Germany\n"
        "A1,First paper,2020,,,Conference Proceeding,France;Spain\n"
    )
    assert errors == []
    assert corpus.ids() == ("A1", "A2")  # sorted by id, not file order
    d = corpus.documents[1]
    assert d.title == "Second paper"
    assert d.year == 2021
    assert d.keywords == ("data science", "ml")
    assert d.doc_type is DocType.RESEARCH_ARTICLE
    assert d.countries == ("Germany",)


def test_unparseable_year_drops_row_with_data_row_number():
    """Bad year at data row 3 reports row=3 (header not counted)."""
    corpus, errors = parse_csv(
        "id,title,year\n"
        "A1,First,2001\n"
        "A2,Second,2002\n"
        "A3,Third,circa 2003\n"
    )
    assert corpus.ids() == ("A1", "A2")
    assert len(errors) == 1
    err = errors[0]
    assert err.row == 3
    assert err.dropped is True
    assert "unparseable year" in err.reason


def test_missing_year_is_kept_and_flagged():
    corpus, errors = parse_csv("id,title,year\nA1,First,\nA2,Second,2002\n")
    assert corpus.ids() == ("A1", "A2")
    assert corpus.documents[0].year is None
    assert [(e.row, e.dropped) for e in errors] == [(1, False)]


@pytest.mark.parametrize("year,kept", [(1899, False), (1900, True), (2100, True), (2101, False)])
def test_year_range_bounds(year, kept):
    corpus, errors = parse_csv(f"id,title,year\nA1,Only,{year}\n")
    assert (len(corpus) == 1) is kept
    assert (not errors) is kept


def test_duplicate_id_keeps_first_occurrence():
    corpus, errors = parse_csv(
        "id,title,year\nB2,Original,2005\nB2,Copy,2006\nB1,Other,2007\n"
    )
    assert corpus.ids() == ("B1", "B2")
    assert corpus.documents[1].title == "Original"
    assert any("duplicate" in e.reason and e.row == 2 for e in errors)


def test_empty_id_and_wrong_field_count_are_dropped():
    corpus, errors = parse_csv(
        "id,title,year\n"
        ",No id,2001\n"
        "A1,Short row\n"
        "A2,Fine,2002\n"
    )
    assert corpus.ids() == ("A2",)
    reasons = sorted(e.reason for e in errors)
    assert reasons == ["empty id", "wrong field count"]


def test_missing_required_column_raises_schema_error():
    with pytest.raises(SchemaError, match="year"):
        parse_csv("id,title\nA1,No year column\n")
    with pytest.raises(SchemaError):
        parse_csv("")


def test_unknown_format_rejected():
    with pytest.raises(SchemaError, match="format"):
        parse_records(io.BytesIO(b"id,title,year\n"), "xml")


def test_non_utf8_input_is_an_input_error():
    with pytest.raises(InputError, match="UTF-8"):
        parse_records(io.BytesIO(b"id,title,year\nA1,\xff\xfe,2001\n"), "csv")


def test_parse_jsonl_records():
    lines = [
        json.dumps({"id": "J2", "title": "Two", "year": "2019",
                    "keywords": ["alpha", "beta"], "countries": "India;China"}),
        json.dumps({"id": "J1", "title": "One", "year": 2018,
                    "doc_type": "conference paper"}),
        "{broken json",
        json.dumps([1, 2, 3]),
    ]
    corpus, errors = parse_jsonl("\n".join(lines) + "\n")
    assert corpus.ids() == ("J1", "J2")
    assert corpus.documents[0].doc_type is DocType.CONFERENCE_PROCEEDING
    assert corpus.documents[1].keywords == ("alpha", "beta")
    assert corpus.documents[1].countries == ("India", "China")
    assert [(e.row, e.reason) for e in errors] == [
        (3, "invalid JSON"),
        (4, "record is not an object"),
    ]


def test_parse_file_infers_format_and_wraps_io_errors(tmp_path):
    f = tmp_path / "small.csv"
    f.write_text("id,title,year\nA1,Hello,2020\n", encoding="utf-8")
    corpus, errors = parse_file(f)
    assert corpus.ids() == ("A1",) and errors == []

    with pytest.raises(SchemaError, match="suffix"):
        parse_file(tmp_path / "mystery.dat")
    with pytest.raises(InputError, match="cannot read"):
        parse_file(tmp_path / "absent.csv")


def test_serialize_round_trip_with_awkward_values():
    corpus = make_corpus(
        Document(id="R1", title='He said, "data, science"', abstract="line one\nline two",
                 keywords=("a;b" and "a b", "c,d"), year=None,
                 doc_type=DocType.BOOK, countries=("Saudi Arabia",)),
        Document(id="R2", title="Plain", year=2022),
    )
    text = serialize_corpus(corpus)
    back, errors = parse_csv(text)
    assert back.documents == corpus.documents
    assert [e for e in errors if e.dropped] == []


def test_serialize_round_trip_random_corpora():
    rng = np.random.default_rng(1234)
    letters = list("abcdefg ,;\"'-")
    for _ in range(25):
        docs = []
        for i in rng.permutation(int(rng.integers(1, 8))):
            title = "".join(rng.choice(letters, size=rng.integers(0, 12)))
            year = None if rng.random() < 0.2 else int(rng.integers(1900, 2101))
            docs.append(Document(
                id=f"X{i}",
                title=title,
                abstract="".join(rng.choice(letters, size=rng.integers(0, 20))),
                keywords=tuple(f"kw{j}" for j in range(rng.integers(0, 3))),
                year=year,
                doc_type=list(DocType)[int(rng.integers(len(DocType)))],
            ))
        corpus = make_corpus(*docs)
        back, _ = parse_csv(serialize_corpus(corpus))
        assert back.documents == corpus.documents


# ---------------------------------------------------------------- doc types


def test_normalize_doc_type_aliases():
    assert normalize_doc_type("Conference Proceeding") is DocType.CONFERENCE_PROCEEDING
    assert normalize_doc_type("conference paper") is DocType.CONFERENCE_PROCEEDING
    assert normalize_doc_type("ARTICLE") is DocType.RESEARCH_ARTICLE
    assert normalize_doc_type("Book  Chapters") is DocType.BOOK_CHAPTER
    assert normalize_doc_type("editorial") is DocType.EDITORIAL
    assert normalize_doc_type("data set") is DocType.OTHER
    assert normalize_doc_type("") is DocType.OTHER
    assert normalize_doc_type(None) is DocType.OTHER


# ---------------------------------------------------------------- filters


PHRASE_DOCS = [
    Document(id="P1", title="A data science survey", year=2020),
    Document(id="P2", title="Unrelated", abstract="We apply data-science methods.", year=2020),
    Document(id="P3", title="Keyword only", keywords=("big data", "Data Science"), year=2020),
    Document(id="P4", title="The science of data", abstract="science of data", year=2020),
    Document(id="P5", title="data", abstract="science", keywords=("data", "science"), year=2020),
]


def test_filter_by_phrase_matches_title_abstract_and_keywords():
    corpus = make_corpus(*PHRASE_DOCS)
    kept = filter_by_phrase(corpus, "data science")
    # P4 has the words in the wrong order; P5 never has them adjacent in one field
    assert kept.ids() == ("P1", "P2", "P3")
    assert kept.provenance.filters[-1] == "phrase='data science'"


def test_filter_by_phrase_is_case_and_punctuation_insensitive():
    corpus = make_corpus(Document(id="Q1", title="DATA-SCIENCE: a review", year=2001))
    assert filter_by_phrase(corpus, "Data Science!").ids() == ("Q1",)


def test_filter_by_phrase_idempotent_and_rejects_empty():
    corpus = make_corpus(*PHRASE_DOCS)
    once = filter_by_phrase(corpus, "data science")
    twice = filter_by_phrase(once, "data science")
    assert twice.documents == once.documents
    with pytest.raises(ValueError):
        filter_by_phrase(corpus, " ... ")


def test_filter_by_years():
    docs = [Document(id=f"Y{y}", title="t", year=y) for y in (2000, 2005, 2010)]
    docs.append(Document(id="Y0", title="no year", year=None))
    corpus = make_corpus(*docs)
    assert filter_by_years(corpus).ids() == corpus.ids()  # no bounds: unchanged
    assert filter_by_years(corpus, year_min=2001).ids() == ("Y2005", "Y2010")
    assert filter_by_years(corpus, year_max=2005).ids() == ("Y2000", "Y2005")
    assert filter_by_years(corpus, 2001, 2009).ids() == ("Y2005",)


def test_partition_by_country_is_exact_and_disjoint():
    corpus = make_corpus(
        Document(id="C1", title="t", countries=("Saudi Arabia", "Egypt")),
        Document(id="C2", title="t", countries=("saudi arabia",)),
        Document(id="C3", title="t", countries=("South Africa",)),
        Document(id="C4", title="t", countries=()),
    )
    inside, outside = partition_by_country(corpus, "Saudi Arabia")
    assert inside.ids() == ("C1", "C2")
    assert outside.ids() == ("C3", "C4")
    assert set(inside.ids()) | set(outside.ids()) == set(corpus.ids())
    assert set(inside.ids()) & set(outside.ids()) == set()
    with pytest.raises(ValueError):
        partition_by_country(corpus, "  ")


def test_partition_random_corpora_always_covers_everything():
    rng = np.random.default_rng(77)
    pool = ["France", "Japan", "Brazil"]
    for _ in range(30):
        docs = [
            Document(
                id=f"D{i}",
                title="t",
                countries=tuple(rng.choice(pool, size=rng.integers(0, 3), replace=False)),
            )
            for i in range(int(rng.integers(1, 10)))
        ]
        corpus = make_corpus(*docs)
        inside, outside = partition_by_country(corpus, "Japan")
        assert sorted(inside.ids() + outside.ids()) == sorted(corpus.ids())
        assert all("japan" in [c.casefold() for c in d.countries] for d in inside)


def test_require_nonempty():
    corpus = make_corpus(Document(id="Z1", title="t"))
    assert require_nonempty(corpus, "filter") is corpus
    empty = corpus.derive([], "nothing")
    with pytest.raises(EmptyResultError, match="nothing at all"):
        require_nonempty(empty, "nothing at all")


# ---------------------------------------------------------------- fixture


def test_bundled_fixture_parses_cleanly(mini_corpus_path):
    corpus, errors = parse_file(mini_corpus_path)
    assert len(corpus) == 60
    # exactly one record lacks a year; nothing is dropped
    assert [(e.dropped, e.reason) for e in errors] == [(False, "missing year")]
    inside, _ = partition_by_country(corpus, "Saudi Arabia")
    assert len(inside) == 10
    assert len(filter_by_phrase(corpus, "data science")) == 58
