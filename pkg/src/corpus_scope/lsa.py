"""Correspondence analysis of the document-term matrix.

Given counts X with grand total n, let P = X / n, let a and b be the row and
column mass vectors (P's margins), and form the standardized residual

    S = D_a^{-1/2} (P - a b^T) D_b^{-1/2}

whose SVD S = U D_sigma V^T carries the whole geometry: standard coordinates
are D_a^{-1/2} U and D_b^{-1/2} V, principal coordinates scale those by the
singular values, and the total inertia (chi-squared statistic over n) equals
the sum of all squared singular values. Subtracting the rank-one term a b^T
removes the trivial unit singular triplet up front, so S has rank at most
min(n_rows, n_cols) - 1.

The truncated SVD is computed without ever densifying S: a Lanczos iteration
with full reorthogonalization runs on the Gram matrix of the smaller side,
using S's sparse structure (a CSR product plus a rank-one correction) for
matrix-vector products. Small problems (min side <= 64) switch to a dense
LAPACK SVD, where iteration buys nothing. Axis signs are fixed by making the
largest-magnitude entry of each left singular vector positive, so results do
not depend on solver internals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np
import scipy.linalg

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateMarginError,
    NotFoundError,
)

logger = logging.getLogger(__name__)

if TYPE_CHECKING:  # pragma: no cover - type hints only
    from .text_pipeline import SparseDTM

DEFAULT_DIMS = 2
DENSE_CUTOFF = 64
LANCZOS_TOL = 1e-10
LANCZOS_MAX_ITER = 1000


@dataclass(frozen=True)
class CAModel:
    """Fitted correspondence analysis.

    Coordinates are row-aligned with ``row_ids`` / ``col_labels`` (documents
    and terms that survived empty-margin dropping). ``row_coords`` and
    ``col_coords`` are principal coordinates; the ``*_std_coords`` arrays are
    standard coordinates (principal divided by the singular value per axis).
    """

    row_ids: tuple[str, ...]
    col_labels: tuple[str, ...]
    row_masses: np.ndarray = field(repr=False)
    col_masses: np.ndarray = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    row_coords: np.ndarray = field(repr=False)
    col_coords: np.ndarray = field(repr=False)
    row_std_coords: np.ndarray = field(repr=False)
    col_std_coords: np.ndarray = field(repr=False)
    total_inertia: float
    dims: int
    dropped_docs: tuple[str, ...]
    dropped_terms: tuple[str, ...]
    solver: str
    iterations: int

    def explained_inertia(self) -> np.ndarray:
        """Share of total inertia carried by each retained axis."""
        if self.total_inertia <= 0.0:
            return np.zeros_like(self.singular_values)
        return self.singular_values**2 / self.total_inertia


@dataclass(frozen=True)
class SupplementaryPoints:
    """Labelled passive points placed in an existing CA row space."""

    labels: tuple[str, ...]
    coords: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)


def total_inertia(dtm: "SparseDTM") -> float:
    """Total inertia chi^2 / n via the sparse-friendly identity
    sum_ij p_ij^2 / (a_i b_j) - 1, summing over nonzero cells only."""
    if dtm.n_total <= 0:
        raise DegenerateMarginError("empty matrix has no inertia")
    if (dtm.row_totals == 0).any() or (dtm.col_totals == 0).any():
        raise DegenerateMarginError("zero row or column margin")
    coo = dtm.csr.tocoo()
    n = float(dtm.n_total)
    a = dtm.row_totals / n
    b = dtm.col_totals / n
    p = coo.data / n
    return float(np.sum(p * p / (a[coo.row] * b[coo.col])) - 1.0)


def _start_vector(dim: int, attempt: int, basis: np.ndarray | None) -> np.ndarray | None:
    """Deterministic unit start vector, orthogonalized against ``basis``.

    Closed-form ramps (no RNG) keep runs bit-identical everywhere; falls back
    to coordinate vectors before giving up.
    """
    idx = np.arange(1, dim + 1, dtype=np.float64)
    candidates = attempt + dim + 2
    for trial in range(attempt, candidates):
        if trial < dim + 2:
            v = np.sin(idx * (0.7 * trial + 1.0)) + 0.1 * np.cos(idx * (trial + 0.5))
        else:
            v = np.zeros(dim)
            v[(trial - dim - 2) % dim] = 1.0
        if basis is not None and basis.size:
            v = v - basis @ (basis.T @ v)
            v = v - basis @ (basis.T @ v)
        nrm = float(np.linalg.norm(v))
        if nrm > 1e-8:
            return v / nrm
    return None


def _lanczos_topk(
    matvec,
    dim: int,
    k: int,
    tol: float = LANCZOS_TOL,
    max_iter: int = LANCZOS_MAX_ITER,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Top-k eigenpairs of a symmetric PSD operator by Lanczos iteration.

    Full reorthogonalization against all previous basis vectors keeps the
    basis numerically orthonormal (the classic three-term recurrence loses
    orthogonality as Ritz values converge). Convergence is declared when the
    top-k Ritz values move less than ``tol`` between steps; an invariant
    subspace triggers a deterministic orthogonal restart. Returns
    (eigenvalues desc, eigenvectors, steps).
    """
    limit = min(dim, max_iter)
    Q = np.zeros((dim, limit))
    alphas: list[float] = []
    betas: list[float] = []
    q = _start_vector(dim, 0, None)
    if q is None:  # pragma: no cover - dim >= 1 always yields a vector
        raise ConvergenceError("could not build a start vector")
    Q[:, 0] = q
    m = 0
    restarts = 1
    prev_top: np.ndarray | None = None
    converged = False
    while True:
        w = matvec(Q[:, m])
        alphas.append(float(Q[:, m] @ w))
        w = w - Q[:, : m + 1] @ (Q[:, : m + 1].T @ w)
        w = w - Q[:, : m + 1] @ (Q[:, : m + 1].T @ w)
        beta = float(np.linalg.norm(w))
        m += 1
        if m >= k:
            if m == 1:
                evals = np.asarray(alphas)
            else:
                evals = scipy.linalg.eigh_tridiagonal(
                    np.asarray(alphas), np.asarray(betas), eigvals_only=True
                )
            # operator is a Gram matrix, so compare on the singular-value scale
            top = np.sqrt(np.clip(np.sort(evals)[::-1][:k], 0.0, None))
            if prev_top is not None and prev_top.shape == top.shape:
                if float(np.max(np.abs(top - prev_top))) < tol:
                    converged = True
                    break
            prev_top = top
        if m >= limit:
            converged = m >= dim  # full Krylov space is exact
            break
        if beta < 1e-13:
            q = _start_vector(dim, restarts, Q[:, :m])
            restarts += 1
            if q is None:
                converged = True  # space exhausted: decomposition is complete
                break
            betas.append(0.0)
            Q[:, m] = q
        else:
            betas.append(beta)
            Q[:, m] = w / beta
    if not converged:
        raise ConvergenceError(
            f"Lanczos did not stabilize top-{k} singular values after {m} iterations"
        )
    if m == 1:
        evals = np.asarray(alphas)
        evecs = np.ones((1, 1))
    else:
        evals, evecs = scipy.linalg.eigh_tridiagonal(
            np.asarray(alphas[:m]), np.asarray(betas[: m - 1])
        )
    order = np.argsort(evals)[::-1][:k]
    vals = evals[order]
    vecs = Q[:, :m] @ evecs[:, order]
    vecs /= np.linalg.norm(vecs, axis=0, keepdims=True)
    return vals, vecs, m


def _fix_signs(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip each (u_i, v_i) pair so u_i's largest-magnitude entry is positive."""
    u = u.copy()
    v = v.copy()
    for i in range(u.shape[1]):
        j = int(np.argmax(np.abs(u[:, i])))
        if u[j, i] < 0.0:
            u[:, i] = -u[:, i]
            v[:, i] = -v[:, i]
    return u, v


def fit_ca(dtm: "SparseDTM", dims: int = DEFAULT_DIMS, solver: str = "auto") -> CAModel:
    """Fit a correspondence analysis with ``dims`` retained axes.

    All-zero rows (documents with no in-vocabulary tokens) and all-zero
    columns are dropped before fitting and reported on the model. ``solver``
    is "auto" (dense below the small-problem cutoff, Lanczos above),
    "lanczos", or "dense". Requires 1 <= dims <= min(kept rows, kept cols)-1.
    """
    if solver not in ("auto", "lanczos", "dense"):
        raise ConfigError(f"unknown solver: {solver!r}")
    if dtm.n_total <= 0:
        raise DegenerateMarginError("cannot fit CA on an empty matrix")

    keep_rows = np.flatnonzero(dtm.row_totals > 0)
    keep_cols = np.flatnonzero(dtm.col_totals > 0)
    dropped_docs = tuple(dtm.doc_ids[i] for i in np.flatnonzero(dtm.row_totals == 0))
    dropped_terms = tuple(dtm.terms[j] for j in np.flatnonzero(dtm.col_totals == 0))
    X = dtm.csr[keep_rows][:, keep_cols]
    row_ids = tuple(dtm.doc_ids[i] for i in keep_rows)
    col_labels = tuple(dtm.terms[j] for j in keep_cols)

    n_rows, n_cols = X.shape
    max_dims = min(n_rows, n_cols) - 1
    if dims < 1 or dims > max_dims:
        raise ConfigError(
            f"dims must be in [1, {max_dims}] for a {n_rows}x{n_cols} table, got {dims}"
        )

    n = float(dtm.n_total)
    a = np.asarray(X.sum(axis=1), dtype=np.float64).ravel() / n
    b = np.asarray(X.sum(axis=0), dtype=np.float64).ravel() / n
    sa, sb = np.sqrt(a), np.sqrt(b)
    ra, rb = 1.0 / sa, 1.0 / sb

    if solver == "auto":
        solver = "dense" if min(n_rows, n_cols) <= DENSE_CUTOFF else "lanczos"

    if solver == "dense":
        P = X.toarray() / n
        S = (ra[:, None] * (P - np.outer(a, b))) * rb[None, :]
        U, sigma, Vt = np.linalg.svd(S, full_matrices=False)
        U, V = U[:, :dims], Vt[:dims].T
        sigma = sigma[:dims]
        iterations = 0
    else:
        P = (X / n).tocsr()
        Pt = P.T.tocsr()

        def s_apply(x: np.ndarray) -> np.ndarray:
            return ra * (P @ (rb * x)) - sa * float(sb @ x)

        def st_apply(y: np.ndarray) -> np.ndarray:
            return rb * (Pt @ (ra * y)) - sb * float(sa @ y)

        if n_cols <= n_rows:
            vals, V, iterations = _lanczos_topk(
                lambda x: st_apply(s_apply(x)), n_cols, dims
            )
            sigma = np.sqrt(np.clip(vals, 0.0, None))
            U = np.zeros((n_rows, dims))
            for i in range(dims):
                if sigma[i] > 1e-13:
                    U[:, i] = s_apply(V[:, i]) / sigma[i]
        else:
            vals, U, iterations = _lanczos_topk(
                lambda y: s_apply(st_apply(y)), n_rows, dims
            )
            sigma = np.sqrt(np.clip(vals, 0.0, None))
            V = np.zeros((n_cols, dims))
            for i in range(dims):
                if sigma[i] > 1e-13:
                    V[:, i] = st_apply(U[:, i]) / sigma[i]

    U, V = _fix_signs(U, V)
    row_std = ra[:, None] * U
    col_std = rb[:, None] * V
    return CAModel(
        row_ids=row_ids,
        col_labels=col_labels,
        row_masses=a,
        col_masses=b,
        singular_values=sigma,
        row_coords=row_std * sigma[None, :],
        col_coords=col_std * sigma[None, :],
        row_std_coords=row_std,
        col_std_coords=col_std,
        total_inertia=total_inertia(_Kept(X, row_ids, col_labels)),
        dims=dims,
        dropped_docs=dropped_docs,
        dropped_terms=dropped_terms,
        solver=solver,
        iterations=iterations,
    )


class _Kept:
    """Minimal duck-typed DTM view over the kept submatrix for inertia."""

    def __init__(self, csr, row_ids, col_labels):
        self.csr = csr
        self.doc_ids = row_ids
        self.terms = col_labels
        self.row_totals = np.asarray(csr.sum(axis=1), dtype=np.int64).ravel()
        self.col_totals = np.asarray(csr.sum(axis=0), dtype=np.int64).ravel()
        self.n_total = int(self.row_totals.sum())


def project_supplementary(
    model: CAModel, grouping: Mapping[str, Iterable[str]]
) -> SupplementaryPoints:
    """Place labelled groups of documents as passive points.

    Each group's point is the mass-weighted barycenter of its member rows'
    standard coordinates, rescaled to principal coordinates axis by axis.
    That equals the classical projection of the merged rows' profile, so a
    singleton group lands exactly on its row and the all-rows group lands at
    the origin. Unknown ids raise NotFoundError; empty groups are skipped
    with a warning.
    """
    pos = {doc_id: i for i, doc_id in enumerate(model.row_ids)}
    labels: list[str] = []
    points: list[np.ndarray] = []
    masses: list[float] = []
    for label in sorted(grouping):
        members = list(grouping[label])
        if not members:
            logger.warning("supplementary group %r is empty; skipped", label)
            continue
        idx = []
        for doc_id in members:
            if doc_id not in pos:
                raise NotFoundError(f"document {doc_id!r} not in the fitted rows")
            idx.append(pos[doc_id])
        w = model.row_masses[idx]
        mass = float(w.sum())
        bary = (w[:, None] * model.row_std_coords[idx]).sum(axis=0) / mass
        labels.append(label)
        points.append(bary * model.singular_values)
        masses.append(mass)
    coords = np.vstack(points) if points else np.zeros((0, model.dims))
    return SupplementaryPoints(
        labels=tuple(labels), coords=coords, masses=np.asarray(masses)
    )


def representative_documents(model: CAModel, top_n: int = 5) -> list[tuple[str, float]]:
    """Documents ranked by distance from the origin in principal coordinates.

    Returns (doc_id, distance) pairs sorted by distance descending, id
    ascending on ties. Extreme points are the strongest contributors to the
    retained axes, hence the most distinctive documents in the plane.
    """
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    dist = np.linalg.norm(model.row_coords, axis=1)
    order = sorted(range(len(model.row_ids)), key=lambda i: (-dist[i], model.row_ids[i]))
    return [(model.row_ids[i], float(dist[i])) for i in order[:top_n]]
