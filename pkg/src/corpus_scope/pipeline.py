"""End-to-end batch pipeline and the subset comparison mode.

Stages run in a fixed order (ingest, text, eda, lsa, lda, bigrams), each
writing its files into the output directory. Every run also writes
run_report.json, a manifest with the echoed configuration, per-stage wall
times and notes, dropped-record lists, and a SHA-256 per output file. All
data files are deterministic for a given (input, config) pair regardless of
thread count; the report's timing fields are the only thing that varies.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import time
from collections import Counter
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .bigrams import (
    DEFAULT_THRESHOLD,
    GraphFormat,
    count_bigrams,
    export_graph,
    threshold_graph,
)
from .corpus_ingest import (
    Corpus,
    RecordError,
    filter_by_phrase,
    filter_by_years,
    parse_file,
    partition_by_country,
    require_nonempty,
    serialize_corpus,
)
from .eda import (
    QuadraticFit,
    counts_per_year,
    fit_quadratic,
    forecast_point,
    top_terms,
    type_shares,
)
from .errors import (
    ConfigError,
    CorpusScopeError,
    DegenerateDesignError,
    InputError,
    InsufficientDataError,
    StageError,
)
from .lda import LdaConfig, fit_lda, render_model, top_words_per_topic
from .lsa import fit_ca, project_supplementary, representative_documents
from .svgplot import line_chart, scatter_2d
from .text_pipeline import (
    DEFAULT_TEXT_FIELDS,
    DEFAULT_VOCAB_SIZE,
    build_dtm,
    build_sequences,
    build_vocabulary,
    default_stoplist,
    export_dtm_index,
    export_matrixmarket,
    load_stoplist,
)

STAGES = ("ingest", "text", "eda", "lsa", "lda", "bigrams")

STOPLIST_ENV_VAR = "CORPUS_SCOPE_STOPLIST"


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs; CLI flags and the INI file both build this."""

    input: Path
    out_dir: Path
    format: str | None = None
    phrase: str | None = None
    year_min: int | None = None
    year_max: int | None = None
    country: str | None = None
    stoplist: Path | None = None
    text_fields: tuple[str, ...] = DEFAULT_TEXT_FIELDS
    vocab_size: int = DEFAULT_VOCAB_SIZE
    top_terms: int = 30
    forecast_years: int = 2
    dims: int = 2
    top_documents: int = 5
    topics: int = 6
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    bigram_threshold: int = DEFAULT_THRESHOLD
    seed: int = 42
    threads: int = 1

    def __post_init__(self):
        if self.vocab_size < 1:
            raise ConfigError("vocab_size must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.forecast_years < 0:
            raise ConfigError("forecast_years must be >= 0")
        if self.top_terms < 1 or self.top_documents < 1:
            raise ConfigError("top_terms and top_documents must be >= 1")

    def lda_config(self) -> LdaConfig:
        return LdaConfig(
            k=self.topics,
            alpha=self.alpha,
            beta=self.beta,
            iterations=self.iterations,
            burn_in=self.burn_in,
            seed=self.seed,
        )


_CONFIG_SCHEMA: dict[str, dict[str, Callable[[str], object]]] = {
    "corpus_ingest": {
        "input": Path,
        "format": str,
        "phrase": str,
        "country": str,
        "year_min": int,
        "year_max": int,
    },
    "text_pipeline": {
        "stoplist": Path,
        "vocab_size": int,
        "text_fields": lambda v: tuple(s.strip() for s in v.split(",") if s.strip()),
    },
    "eda": {"top_terms": int, "forecast_years": int},
    "lsa": {"dims": int, "top_documents": int},
    "lda": {
        "topics": int,
        "alpha": float,
        "beta": float,
        "iterations": int,
        "burn_in": int,
    },
    "bigrams": {"threshold": int},
    "report": {"out": Path, "seed": int, "threads": int},
}

_KEY_RENAMES = {"threshold": "bigram_threshold", "out": "out_dir"}


def load_config(path) -> dict[str, object]:
    """Parse an INI config with sections mirroring the module names.

    Returns a kwargs dict for :class:`PipelineConfig`; unknown sections or
    keys raise ConfigError so typos never silently fall back to defaults.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    kwargs: dict[str, object] = {}
    for section in parser.sections():
        if section not in _CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        schema = _CONFIG_SCHEMA[section]
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            try:
                value = schema[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
            kwargs[_KEY_RENAMES.get(key, key)] = value
    return kwargs


@dataclass
class StageReport:
    name: str
    seconds: float = 0.0
    outputs: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


@dataclass
class RunReport:
    """Machine-readable run manifest (written as run_report.json)."""

    version: str
    command: str
    config: dict
    stages: list[StageReport] = field(default_factory=list)
    output_files: dict[str, str] = field(default_factory=dict)
    record_errors: list[dict] = field(default_factory=list)
    failed_stage: str | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "stages": [
                {
                    "name": s.name,
                    "seconds": round(s.seconds, 6),
                    "outputs": s.outputs,
                    "notes": s.notes,
                }
                for s in self.stages
            ],
            "output_files": self.output_files,
            "record_errors": self.record_errors,
            "failed_stage": self.failed_stage,
            "notes": self.notes,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _config_echo(cfg: PipelineConfig) -> dict:
    echo = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, tuple):
            value = list(value)
        echo[f.name] = value
    return echo


def resolve_stoplist(cfg: PipelineConfig) -> tuple[frozenset[str], str]:
    """Stoplist resolution order: explicit path, CORPUS_SCOPE_STOPLIST, bundled."""
    if cfg.stoplist is not None:
        return load_stoplist(cfg.stoplist), f"file:{cfg.stoplist.name}"
    env = os.environ.get(STOPLIST_ENV_VAR)
    if env:
        return load_stoplist(env), f"env:{Path(env).name}"
    return default_stoplist(), "bundled"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class _Run:
    """Mutable state shared by the stage runners of one pipeline execution."""

    def __init__(self, cfg: PipelineConfig, command: str, write_stages: set[str]):
        self.cfg = cfg
        self.write = write_stages
        self.report = RunReport(
            version=__version__, command=command, config=_config_echo(cfg)
        )
        self.provenance = ""
        self.corpus: Corpus | None = None
        self.sequences = None
        self.vocab = None
        self.dtm = None

    def emit(self, stage: StageReport, name: str, payload: str | bytes) -> None:
        if stage.name not in self.write:
            return
        path = self.cfg.out_dir / name
        if isinstance(payload, bytes):
            path.write_bytes(payload)
        else:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(payload)
        stage.outputs.append(name)
        self.report.output_files[name] = _sha256(path)

    def finish_report(self) -> None:
        path = self.cfg.out_dir / "run_report.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.report.to_json())


def _float(v: float) -> str:
    return repr(float(v))


def _ingest(run: _Run, stage: StageReport) -> None:
    cfg = run.cfg
    corpus, errors = parse_file(cfg.input, cfg.format)
    run.report.record_errors = [
        {"row": e.row, "reason": e.reason, "dropped": e.dropped} for e in errors
    ]
    stage.notes.append(f"parsed {len(corpus)} unique records, {len(errors)} flagged")
    if cfg.year_min is not None or cfg.year_max is not None:
        corpus = filter_by_years(corpus, cfg.year_min, cfg.year_max)
        stage.notes.append(f"year filter kept {len(corpus)}")
    if cfg.phrase:
        corpus = filter_by_phrase(corpus, cfg.phrase)
        stage.notes.append(f"phrase filter kept {len(corpus)}")
    require_nonempty(corpus, "ingest filters")
    run.corpus = corpus
    run.provenance = (
        f"corpus-scope {__version__} | input={cfg.input.name}"
        f" | filters={'; '.join(corpus.provenance.filters) or 'none'}"
        f" | seed={cfg.seed}"
    )
    run.emit(stage, "corpus.csv", serialize_corpus(corpus))


def _text(run: _Run, stage: StageReport) -> None:
    cfg = run.cfg
    stoplist, origin = resolve_stoplist(cfg)
    stage.notes.append(f"stoplist={origin} ({len(stoplist)} terms)")
    run.sequences = build_sequences(
        run.corpus, stoplist, fields=cfg.text_fields, threads=cfg.threads
    )
    run.vocab = build_vocabulary(run.sequences, cfg.vocab_size)
    run.dtm = build_dtm(run.sequences, run.vocab)
    stage.notes.append(
        f"vocabulary {len(run.vocab)} terms, {run.dtm.n_total} tokens counted"
    )
    run.emit(stage, "dtm.mtx", export_matrixmarket(run.dtm, comment=run.provenance))
    run.emit(stage, "dtm_index.csv", export_dtm_index(run.dtm, comment=run.provenance))


def _eda(run: _Run, stage: StageReport) -> None:
    cfg = run.cfg
    series = counts_per_year(run.corpus)
    if series.missing_year_count:
        stage.notes.append(f"{series.missing_year_count} document(s) without a year")

    lines = [f"# {run.provenance}", "year,count"]
    lines += [f"{y},{c}" for y, c in series.points]
    run.emit(stage, "year_counts.csv", "\n".join(lines) + "\n")

    fit: QuadraticFit | None = None
    trend = [f"# {run.provenance}", "key,value"]
    try:
        fit = fit_quadratic(series)
    except (InsufficientDataError, DegenerateDesignError) as exc:
        trend.append(f"status,skipped: {exc}")
        stage.notes.append(f"trend fit skipped: {exc}")
    forecasts: list[tuple[int, float, bool]] = []
    if fit is not None:
        trend += [
            "status,ok",
            f"a2,{_float(fit.a2)}",
            f"a1,{_float(fit.a1)}",
            f"a0,{_float(fit.a0)}",
            f"r_squared,{_float(fit.r_squared)}",
            f"p_value,{_float(fit.p_value)}",
            f"x_encoding,{fit.x_encoding.value}",
            f"degenerate,{int(fit.degenerate)}",
            f"x_min,{fit.x_min}",
            f"x_max,{fit.x_max}",
        ]
        for offset in range(1, cfg.forecast_years + 1):
            year = fit.x_max + offset
            value, clamped = forecast_point(fit, year)
            forecasts.append((year, value, clamped))
            trend.append(f"forecast_{year},{_float(value)}")
            trend.append(f"forecast_{year}_clamped,{int(clamped)}")
    run.emit(stage, "trend.csv", "\n".join(trend) + "\n")

    ranked = top_terms(run.dtm, run.vocab, cfg.top_terms)
    lines = [f"# {run.provenance}", "rank,term,count,cumulative_share"]
    lines += [
        f"{i},{term},{count},{_float(share)}"
        for i, (term, count, share) in enumerate(ranked, start=1)
    ]
    run.emit(stage, "top_terms.csv", "\n".join(lines) + "\n")

    shares = type_shares(run.corpus)
    tally = Counter(d.doc_type for d in run.corpus)
    lines = [f"# {run.provenance}", "doc_type,count,share_percent"]
    lines += [f"{t.value},{tally[t]},{shares[t]}" for t in shares]
    run.emit(stage, "type_shares.csv", "\n".join(lines) + "\n")

    observed = [(float(y), float(c)) for y, c in series.points]
    fitted_pts: list[tuple[float, float]] = []
    forecast_pts = [(float(y), v) for y, v, _ in forecasts]
    if fit is not None:
        last = fit.x_max + cfg.forecast_years
        for year in range(fit.x_min, last + 1):
            value, _ = forecast_point(fit, year)
            fitted_pts.append((float(year), value))
    svg = line_chart(
        observed,
        fitted=fitted_pts,
        forecast=forecast_pts,
        title="Documents per year",
        x_label="year",
        y_label="documents",
    )
    run.emit(stage, "trend.svg", svg)


def _lsa(run: _Run, stage: StageReport) -> None:
    cfg = run.cfg
    n_rows = int((run.dtm.row_totals > 0).sum())
    n_cols = int((run.dtm.col_totals > 0).sum())
    max_dims = min(n_rows, n_cols) - 1
    dims = cfg.dims
    if dims > max_dims:
        dims = max_dims
        stage.notes.append(f"dims reduced to {dims} for a {n_rows}x{n_cols} table")
    model = fit_ca(run.dtm, dims=dims)
    if model.dropped_docs:
        stage.notes.append(f"dropped empty documents: {', '.join(model.dropped_docs)}")
    if model.dropped_terms:
        stage.notes.append(f"dropped empty terms: {', '.join(model.dropped_terms)}")
    stage.notes.append(
        "inertia "
        + _float(model.total_inertia)
        + " | explained "
        + ", ".join(_float(v) for v in model.explained_inertia())
    )

    ranking = {
        doc_id: rank
        for rank, (doc_id, _) in enumerate(
            representative_documents(model, top_n=len(model.row_ids)), start=1
        )
    }
    by_year: dict[str, list[str]] = {}
    years = {d.id: d.year for d in run.corpus}
    for doc_id in model.row_ids:
        year = years.get(doc_id)
        if year is not None:
            by_year.setdefault(str(year), []).append(doc_id)
    supp = project_supplementary(model, by_year) if by_year else None

    dim_cols = ",".join(f"dim_{i + 1}" for i in range(model.dims))
    lines = [f"# {run.provenance}", f"kind,label,mass,score,rank,{dim_cols}"]
    scores = np.linalg.norm(model.row_coords, axis=1)
    for i, doc_id in enumerate(model.row_ids):
        coords = ",".join(_float(v) for v in model.row_coords[i])
        lines.append(
            f"row,{doc_id},{_float(model.row_masses[i])},{_float(scores[i])},"
            f"{ranking[doc_id]},{coords}"
        )
    for j, term in enumerate(model.col_labels):
        coords = ",".join(_float(v) for v in model.col_coords[j])
        lines.append(f"col,{term},{_float(model.col_masses[j])},,,{coords}")
    if supp is not None:
        for g, label in enumerate(supp.labels):
            coords = ",".join(_float(v) for v in supp.coords[g])
            lines.append(f"year,{label},{_float(supp.masses[g])},,,{coords}")
    run.emit(stage, "ca_coords.csv", "\n".join(lines) + "\n")

    # the scatter is an extra of the lsa subcommand; `run` keeps the pinned
    # file set and the coordinates CSV is enough to regenerate the figure
    if run.report.command == "lsa" and model.dims >= 2:
        reps = representative_documents(model, top_n=cfg.top_documents)
        pos = {doc_id: i for i, doc_id in enumerate(model.row_ids)}
        labels = [
            (
                float(model.row_coords[pos[doc_id]][0]),
                float(model.row_coords[pos[doc_id]][1]),
                doc_id,
            )
            for doc_id, _ in reps
        ]
        groups = [
            ("documents", "#225599",
             [(float(x), float(y)) for x, y, *_ in model.row_coords]),
            ("terms", "#cc8822",
             [(float(x), float(y)) for x, y, *_ in model.col_coords]),
        ]
        if supp is not None and len(supp.labels):
            groups.append(
                ("years", "#338844",
                 [(float(x), float(y)) for x, y, *_ in supp.coords])
            )
            labels.extend(
                (float(supp.coords[g][0]), float(supp.coords[g][1]), label)
                for g, label in enumerate(supp.labels)
            )
        svg = scatter_2d(
            groups,
            labels=labels,
            title="Correspondence analysis (principal coordinates)",
            x_label="dim 1",
            y_label="dim 2",
        )
        run.emit(stage, "ca_scatter.svg", svg)


def _lda(run: _Run, stage: StageReport) -> None:
    cfg = run.cfg
    model = fit_lda(run.sequences, run.vocab, cfg.lda_config())
    if model.dropped_ids:
        stage.notes.append(
            f"dropped documents without vocabulary tokens: {', '.join(model.dropped_ids)}"
        )
    stage.notes.append(f"final log-likelihood {_float(model.log_likelihoods[-1])}")
    run.emit(stage, "lda_model.txt", render_model(model))

    words = top_words_per_topic(model, m=10)
    term_index = {t: j for j, t in enumerate(model.terms)}
    lines = [f"# {run.provenance}", "topic,rank,term,phi"]
    for t, terms in enumerate(words):
        for r, term in enumerate(terms, start=1):
            phi = model.phi[t, term_index[term]]
            lines.append(f"{t},{r},{term},{_float(phi)}")
    run.emit(stage, "lda_top_words.csv", "\n".join(lines) + "\n")


def _bigrams(run: _Run, stage: StageReport) -> None:
    cfg = run.cfg
    table = count_bigrams(run.sequences)
    graph = threshold_graph(table, cfg.bigram_threshold)
    stage.notes.append(
        f"{table.total_bigrams} pairs observed, {len(graph.edges)} edges kept "
        f"at threshold {graph.threshold}"
    )
    run.emit(
        stage,
        "bigrams_edges.csv",
        export_graph(graph, GraphFormat.EDGE_CSV, provenance=run.provenance),
    )


_STAGE_RUNNERS = {
    "ingest": _ingest,
    "text": _text,
    "eda": _eda,
    "lsa": _lsa,
    "lda": _lda,
    "bigrams": _bigrams,
}


def run_pipeline(
    cfg: PipelineConfig,
    write_stages: set[str] | None = None,
    command: str = "run",
) -> RunReport:
    """Execute the pipeline, writing files for ``write_stages`` (default all).

    Stages that no requested stage depends on are skipped entirely. The input
    is validated before anything is written; a failing stage still produces
    run_report.json with ``failed_stage`` set, then raises StageError.
    """
    if write_stages is None:
        write_stages = set(STAGES)
    unknown = write_stages - set(STAGES)
    if unknown:
        raise ConfigError(f"unknown stage(s): {', '.join(sorted(unknown))}")
    if not cfg.input.is_file():
        raise InputError(f"input path is not a readable file: {cfg.input}")

    compute = {"ingest", "text"} | write_stages
    run = _Run(cfg, command, write_stages)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        for name in STAGES:
            if name not in compute:
                continue
            stage = StageReport(name=name)
            run.report.stages.append(stage)
            started = time.perf_counter()
            try:
                _STAGE_RUNNERS[name](run, stage)
            except CorpusScopeError as exc:
                run.report.failed_stage = name
                stage.notes.append(f"failed: {exc}")
                raise StageError(name, exc, run.report) from exc
            finally:
                stage.seconds = time.perf_counter() - started
    finally:
        run.finish_report()
    return run.report


def _share_percent(part: int, whole: int) -> str:
    return f"{100.0 * part / whole:.1f}" if whole else "0.0"


def compare_subsets(cfg: PipelineConfig, country: str | None = None) -> RunReport:
    """Side-by-side country subset vs the whole corpus (compare.csv).

    Rows are (section, key, subset, overall): corpus sizes and share, counts
    per year, publication-type shares, top-20 terms, and per-topic top words
    from topic models fitted separately with identical settings and seed.
    An empty subset raises EmptyResultError (CLI exit code 3).
    """
    if country is None:
        country = cfg.country
    if not country:
        raise ConfigError("compare requires a country")
    if not cfg.input.is_file():
        raise InputError(f"input path is not a readable file: {cfg.input}")

    run = _Run(cfg, "compare", write_stages={"compare"})
    stage = StageReport(name="compare")
    run.report.stages.append(stage)
    started = time.perf_counter()

    corpus, errors = parse_file(cfg.input, cfg.format)
    run.report.record_errors = [
        {"row": e.row, "reason": e.reason, "dropped": e.dropped} for e in errors
    ]
    if cfg.year_min is not None or cfg.year_max is not None:
        corpus = filter_by_years(corpus, cfg.year_min, cfg.year_max)
    if cfg.phrase:
        corpus = filter_by_phrase(corpus, cfg.phrase)
    require_nonempty(corpus, "ingest filters")
    subset, _rest = partition_by_country(corpus, country)
    require_nonempty(subset, f"country filter {country!r}")
    stage.notes.append(f"subset {len(subset)} of {len(corpus)} documents")
    run.provenance = (
        f"corpus-scope {__version__} | input={cfg.input.name}"
        f" | compare country={country} | seed={cfg.seed}"
    )

    stoplist, origin = resolve_stoplist(cfg)
    stage.notes.append(f"stoplist={origin}")

    def analyze(c: Corpus):
        seqs = build_sequences(c, stoplist, fields=cfg.text_fields, threads=cfg.threads)
        vocab = build_vocabulary(seqs, cfg.vocab_size)
        dtm = build_dtm(seqs, vocab)
        terms = top_terms(dtm, vocab, 20)
        lda_model = fit_lda(seqs, vocab, cfg.lda_config())
        return terms, top_words_per_topic(lda_model, m=10)

    rows: list[tuple[str, str, str, str]] = []
    rows.append(("size", "documents", str(len(subset)), str(len(corpus))))
    rows.append(
        (
            "size",
            "share_percent",
            _share_percent(len(subset), len(corpus)),
            "100.0",
        )
    )

    sub_years = dict(counts_per_year(subset).points)
    all_years = dict(counts_per_year(corpus).points)
    for year in sorted(all_years | sub_years):
        rows.append(
            ("years", str(year), str(sub_years.get(year, 0)), str(all_years.get(year, 0)))
        )

    sub_shares = type_shares(subset)
    all_shares = type_shares(corpus)
    for t in sorted(set(sub_shares) | set(all_shares), key=lambda t: t.value):
        rows.append(
            ("types", t.value, str(sub_shares.get(t, 0)), str(all_shares.get(t, 0)))
        )

    sub_terms, sub_topics = analyze(subset)
    all_terms, all_topics = analyze(corpus)
    for i in range(20):
        sub = f"{sub_terms[i][0]}:{sub_terms[i][1]}" if i < len(sub_terms) else ""
        full = f"{all_terms[i][0]}:{all_terms[i][1]}" if i < len(all_terms) else ""
        rows.append(("top_terms", f"rank_{i + 1:02d}", sub, full))
    for t in range(cfg.topics):
        for r in range(10):
            sub = sub_topics[t][r] if t < len(sub_topics) and r < len(sub_topics[t]) else ""
            full = all_topics[t][r] if t < len(all_topics) and r < len(all_topics[t]) else ""
            rows.append(("lda_top_words", f"topic_{t}_rank_{r + 1:02d}", sub, full))

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"# {run.provenance}", "section,key,subset,overall"]
    lines += [",".join(r) for r in rows]
    run.emit(stage, "compare.csv", "\n".join(lines) + "\n")
    stage.seconds = time.perf_counter() - started
    run.finish_report()
    return run.report
