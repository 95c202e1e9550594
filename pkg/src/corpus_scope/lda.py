"""Latent Dirichlet Allocation via collapsed Gibbs sampling.

The sampler integrates out the topic-word and document-topic multinomials
and resamples each token's topic assignment z from

    p(z = t | rest)  ~  (n_wt + beta) / (n_t + p*beta) * (n_dt + alpha)

where n_wt counts word w in topic t, n_t all tokens in topic t, and n_dt
tokens of document d in topic t, all excluding the token being resampled.
Randomness comes from one stdlib ``random.Random(seed)`` generator whose
``random()`` stream is documented to be reproducible across Python versions
and platforms, so a (corpus, config) pair fully determines the result.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from random import Random
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import (
    ConfigError,
    DomainError,
    EmptyCorpusError,
    NotFoundError,
    SchemaError,
    SimplexError,
)

if TYPE_CHECKING:  # pragma: no cover - type hints only
    from .text_pipeline import TokenSequence, Vocabulary

logger = logging.getLogger(__name__)

DEFAULT_TOPICS = 6
DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000
DEFAULT_BURN_IN = 200

MODEL_FORMAT = "corpus-scope-lda v1"


@dataclass(frozen=True)
class LdaConfig:
    """Sampler settings. ``alpha`` defaults to the 50/k heuristic."""

    k: int = DEFAULT_TOPICS
    alpha: float | None = None
    beta: float = DEFAULT_BETA
    iterations: int = DEFAULT_ITERATIONS
    burn_in: int = DEFAULT_BURN_IN
    seed: int = 0
    sample_averaging: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", 50.0 / self.k)
        if self.alpha <= 0.0 or self.beta <= 0.0:
            raise ConfigError("alpha and beta must be positive")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < iterations")


@dataclass(frozen=True)
class LdaModel:
    """Fitted topic model.

    ``phi`` is k x p (topics over terms), ``theta`` is n x k (documents over
    topics); both are smoothed point estimates from the final (or averaged)
    counts. Count tables and per-token assignments are retained so a model
    can be persisted and reloaded exactly.
    """

    config: LdaConfig
    doc_ids: tuple[str, ...]
    terms: tuple[str, ...]
    phi: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    topic_word_counts: np.ndarray = field(repr=False)
    doc_topic_counts: np.ndarray = field(repr=False)
    assignments: tuple[tuple[int, ...], ...] = field(repr=False)
    dropped_ids: tuple[str, ...]
    log_likelihoods: tuple[float, ...] = field(repr=False)

    def doc_index(self, doc_id: str) -> int:
        try:
            return self.doc_ids.index(doc_id)
        except ValueError:
            raise NotFoundError(f"document {doc_id!r} not in the model") from None


def dirichlet_density(theta: Sequence[float], alpha: Sequence[float]) -> float:
    """Dirichlet density Gamma(sum a) / prod Gamma(a_i) * prod theta_i^(a_i-1).

    Evaluated in log space with gammaln and exponentiated at the end.
    ``theta`` must lie on the probability simplex within 1e-9; boundary zeros
    follow the exact limit (0, 1, or +inf depending on the exponent).
    """
    t = np.asarray(theta, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64)
    if t.ndim != 1 or a.shape != t.shape or t.size == 0:
        raise DomainError("theta and alpha must be 1-D of equal positive length")
    if np.any(a <= 0.0):
        raise DomainError("alpha entries must be positive")
    if np.any(t < 0.0) or abs(float(t.sum()) - 1.0) > 1e-9:
        raise SimplexError("theta must be nonnegative and sum to 1 within 1e-9")
    log_norm = float(gammaln(a.sum()) - gammaln(a).sum())
    zero = t == 0.0
    if zero.any():
        exps = a[zero] - 1.0
        if np.any(exps < 0.0):
            return float("inf")
        if np.any(exps > 0.0):
            return 0.0
    rest = ~zero
    log_kernel = float(np.sum((a[rest] - 1.0) * np.log(t[rest])))
    return float(np.exp(log_norm + log_kernel))


def _vectorize(
    sequences: Sequence["TokenSequence"], vocab: "Vocabulary"
) -> tuple[list[str], list[list[int]], list[str]]:
    """Map token sequences to vocabulary ids, dropping empty documents."""
    index = vocab.index
    doc_ids: list[str] = []
    docs: list[list[int]] = []
    dropped: list[str] = []
    for seq in sequences:
        words = [index[t] for t in seq.tokens if t in index]
        if words:
            doc_ids.append(seq.doc_id)
            docs.append(words)
        else:
            dropped.append(seq.doc_id)
    if dropped:
        logger.warning(
            "dropping %d document(s) with no in-vocabulary tokens", len(dropped)
        )
    if not docs:
        raise EmptyCorpusError("no document has in-vocabulary tokens")
    return doc_ids, docs, dropped


def seed_assignments(
    sequences: Sequence["TokenSequence"], vocab: "Vocabulary", config: LdaConfig
) -> list[list[int]]:
    """The seed-derived initial topic assignment used by :func:`fit_lda`.

    Exposed so reproducibility experiments can start chains from an explicit
    (e.g. relabeled) state via ``fit_lda(..., initial_assignments=...)``.
    """
    _, docs, _ = _vectorize(sequences, vocab)
    rng = Random(config.seed)
    k = config.k
    return [[rng.randrange(k) for _ in doc] for doc in docs]


def _log_likelihood(
    n_wk: np.ndarray, n_k: np.ndarray, k: int, p: int, beta: float
) -> float:
    """Joint log p(w | z) under the collapsed model (topic-word part)."""
    val = k * (gammaln(p * beta) - p * gammaln(beta))
    val += float(gammaln(n_wk + beta).sum() - gammaln(n_k + p * beta).sum())
    return float(val)


def fit_lda(
    sequences: Sequence["TokenSequence"],
    vocab: "Vocabulary",
    config: LdaConfig,
    initial_assignments: Sequence[Sequence[int]] | None = None,
) -> LdaModel:
    """Run the collapsed Gibbs sampler and return point estimates.

    Documents with no in-vocabulary tokens are dropped (with a warning) and
    listed on ``dropped_ids``. Count tables are cross-checked for exact
    conservation after every sweep. With ``sample_averaging`` the phi/theta
    estimates average the post-burn-in sweeps instead of using final counts.
    """
    doc_ids, docs, dropped = _vectorize(sequences, vocab)
    k = config.k
    p = len(vocab)
    alpha = float(config.alpha)
    beta = float(config.beta)
    vbeta = p * beta
    rng = Random(config.seed)
    rand = rng.random

    n_docs = len(docs)
    total_tokens = sum(len(d) for d in docs)

    # plain Python ints in nested lists: the inner loop below runs millions
    # of times and numpy scalar indexing would dominate the runtime
    n_wk = [[0] * k for _ in range(p)]
    n_dk = [[0] * k for _ in range(n_docs)]
    n_k = [0] * k

    if initial_assignments is None:
        z: list[list[int]] = [[rng.randrange(k) for _ in doc] for doc in docs]
    else:
        if len(initial_assignments) != n_docs:
            raise ConfigError("initial_assignments must cover every kept document")
        z = []
        for d, (doc, given) in enumerate(zip(docs, initial_assignments)):
            if len(given) != len(doc):
                raise ConfigError(f"initial assignment length mismatch in doc {d}")
            row = [int(t) for t in given]
            if any(t < 0 or t >= k for t in row):
                raise ConfigError("initial assignment topic out of range")
            z.append(row)

    for d, doc in enumerate(docs):
        ndk_d = n_dk[d]
        z_d = z[d]
        for i, w in enumerate(doc):
            t = z_d[i]
            n_wk[w][t] += 1
            ndk_d[t] += 1
            n_k[t] += 1

    cum = [0.0] * k
    log_likelihoods: list[float] = []
    phi_acc = np.zeros((k, p)) if config.sample_averaging else None
    theta_acc = np.zeros((n_docs, k)) if config.sample_averaging else None
    averaged = 0

    for sweep in range(config.iterations):
        for d in range(n_docs):
            doc = docs[d]
            z_d = z[d]
            ndk_d = n_dk[d]
            for i, w in enumerate(doc):
                old = z_d[i]
                nwk_w = n_wk[w]
                nwk_w[old] -= 1
                ndk_d[old] -= 1
                n_k[old] -= 1
                total = 0.0
                for t in range(k):
                    total += (nwk_w[t] + beta) / (n_k[t] + vbeta) * (ndk_d[t] + alpha)
                    cum[t] = total
                u = rand() * total
                new = 0
                while cum[new] < u:
                    new += 1
                z_d[i] = new
                nwk_w[new] += 1
                ndk_d[new] += 1
                n_k[new] += 1

        # exact conservation check: every margin must re-add to the token total
        if sum(n_k) != total_tokens:
            raise RuntimeError(f"count conservation violated at sweep {sweep}")
        if sum(map(sum, n_wk)) != total_tokens or sum(map(sum, n_dk)) != total_tokens:
            raise RuntimeError(f"count table margin mismatch at sweep {sweep}")

        nwk_arr = np.asarray(n_wk, dtype=np.float64)  # p x k
        nk_arr = np.asarray(n_k, dtype=np.float64)
        log_likelihoods.append(_log_likelihood(nwk_arr, nk_arr, k, p, beta))

        if config.sample_averaging and sweep >= config.burn_in:
            ndk_arr = np.asarray(n_dk, dtype=np.float64)
            phi_acc += (nwk_arr.T + beta) / (nk_arr + vbeta)[:, None]
            theta_acc += (ndk_arr + alpha) / (ndk_arr.sum(axis=1) + k * alpha)[:, None]
            averaged += 1

    nwk_arr = np.asarray(n_wk, dtype=np.int64)
    ndk_arr = np.asarray(n_dk, dtype=np.int64)
    nk_arr = np.asarray(n_k, dtype=np.int64)
    if config.sample_averaging:
        phi = phi_acc / averaged
        theta = theta_acc / averaged
    else:
        phi = (nwk_arr.T + beta) / (nk_arr.astype(np.float64) + vbeta)[:, None]
        lens = ndk_arr.sum(axis=1).astype(np.float64)
        theta = (ndk_arr + alpha) / (lens + k * alpha)[:, None]

    return LdaModel(
        config=config,
        doc_ids=tuple(doc_ids),
        terms=vocab.terms,
        phi=phi,
        theta=theta,
        topic_word_counts=nwk_arr.T.copy(),
        doc_topic_counts=ndk_arr,
        assignments=tuple(tuple(row) for row in z),
        dropped_ids=tuple(dropped),
        log_likelihoods=tuple(log_likelihoods),
    )


def top_words_per_topic(model: LdaModel, m: int = 10) -> list[list[str]]:
    """The ``m`` highest-probability terms per topic, count desc then term asc."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    out: list[list[str]] = []
    for t in range(model.config.k):
        counts = model.topic_word_counts[t]
        order = sorted(
            range(len(model.terms)), key=lambda j: (-int(counts[j]), model.terms[j])
        )
        out.append([model.terms[j] for j in order[:m]])
    return out


def doc_topic_distribution(model: LdaModel, doc_id: str) -> np.ndarray:
    """The smoothed topic mixture of one document (sums to 1)."""
    return model.theta[model.doc_index(doc_id)].copy()


def render_model(model: LdaModel) -> str:
    """The versioned text format (header, labels, CSV count tables)."""
    cfg = model.config
    lines = [
        MODEL_FORMAT,
        f"k={cfg.k}",
        f"alpha={cfg.alpha!r}",
        f"beta={cfg.beta!r}",
        f"iterations={cfg.iterations}",
        f"burn_in={cfg.burn_in}",
        f"seed={cfg.seed}",
        f"sample_averaging={int(cfg.sample_averaging)}",
        f"n_docs={len(model.doc_ids)}",
        f"n_terms={len(model.terms)}",
        "dropped=" + ";".join(model.dropped_ids),
        "[terms]",
        *model.terms,
        "[documents]",
        *model.doc_ids,
        "[topic_word_counts]",
        *(",".join(str(int(v)) for v in row) for row in model.topic_word_counts),
        "[doc_topic_counts]",
        *(",".join(str(int(v)) for v in row) for row in model.doc_topic_counts),
        "[assignments]",
        *(",".join(str(t) for t in row) for row in model.assignments),
    ]
    if cfg.sample_averaging:
        lines.append("[phi]")
        lines.extend(",".join(repr(float(v)) for v in row) for row in model.phi)
        lines.append("[theta]")
        lines.extend(",".join(repr(float(v)) for v in row) for row in model.theta)
    lines.append("[log_likelihoods]")
    lines.extend(repr(v) for v in model.log_likelihoods)
    return "\n".join(lines) + "\n"


def save_model(model: LdaModel, path) -> None:
    """Write :func:`render_model` output to ``path``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_model(model))


def load_model(path) -> LdaModel:
    """Reload a model written by :func:`save_model`; phi/theta reproduce exactly.

    Final-count models recompute phi/theta through the same arithmetic as the
    fit; averaged models restore the stored matrices (repr round-trips floats
    losslessly).
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MODEL_FORMAT:
        raise SchemaError(f"not a {MODEL_FORMAT} file: {path}")
    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and not lines[i].startswith("["):
        key, _, value = lines[i].partition("=")
        header[key] = value
        i += 1

    sections: dict[str, list[str]] = {}
    current: list[str] = []
    while i < len(lines):
        if lines[i].startswith("[") and lines[i].endswith("]"):
            current = sections.setdefault(lines[i][1:-1], [])
        else:
            current.append(lines[i])
        i += 1

    cfg = LdaConfig(
        k=int(header["k"]),
        alpha=float(header["alpha"]),
        beta=float(header["beta"]),
        iterations=int(header["iterations"]),
        burn_in=int(header["burn_in"]),
        seed=int(header["seed"]),
        sample_averaging=bool(int(header["sample_averaging"])),
    )
    n_docs, n_terms = int(header["n_docs"]), int(header["n_terms"])
    terms = tuple(sections["terms"])
    doc_ids = tuple(sections["documents"])
    if len(terms) != n_terms or len(doc_ids) != n_docs:
        raise SchemaError("label sections do not match the declared sizes")

    def int_table(name: str, rows: int, cols: int) -> np.ndarray:
        raw = sections[name]
        if len(raw) != rows:
            raise SchemaError(f"section {name} has {len(raw)} rows, expected {rows}")
        arr = np.array([[int(v) for v in ln.split(",")] for ln in raw], dtype=np.int64)
        if arr.shape != (rows, cols):
            raise ConfigError(f"section {name} is not {rows}x{cols}")
        return arr

    nwk = int_table("topic_word_counts", cfg.k, n_terms)
    ndk = int_table("doc_topic_counts", n_docs, cfg.k)
    assignments = tuple(
        tuple(int(v) for v in ln.split(",")) if ln else ()
        for ln in sections["assignments"]
    )
    if cfg.sample_averaging:
        phi = np.array(
            [[float(v) for v in ln.split(",")] for ln in sections["phi"]]
        )
        theta = np.array(
            [[float(v) for v in ln.split(",")] for ln in sections["theta"]]
        )
    else:
        vbeta = n_terms * cfg.beta
        nk = nwk.sum(axis=1).astype(np.float64)
        phi = (nwk + cfg.beta) / (nk + vbeta)[:, None]
        lens = ndk.sum(axis=1).astype(np.float64)
        theta = (ndk + cfg.alpha) / (lens + cfg.k * cfg.alpha)[:, None]
    lls = tuple(float(v) for v in sections.get("log_likelihoods", []))
    dropped = tuple(x for x in header.get("dropped", "").split(";") if x)
    return LdaModel(
        config=cfg,
        doc_ids=doc_ids,
        terms=terms,
        phi=phi,
        theta=theta,
        topic_word_counts=nwk,
        doc_topic_counts=ndk,
        assignments=assignments,
        dropped_ids=dropped,
        log_likelihoods=lls,
    )
