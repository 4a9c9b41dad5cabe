"""Concept-subspace math on embedding vectors.

A concept subspace is the span of the top-r right singular vectors of a
matrix of embeddings that all describe variations of one concept. Its
orthogonal projector is kept in factored form: with V_r the r-by-d matrix of
retained singular vectors, projecting e computes V_r^T (V_r e) instead of
materializing the d-by-d matrix V_r^T V_r. The two are mathematically
identical; the factored form is smaller and faster at realistic d.

Composition swaps subspace content between embeddings: the composite keeps
everything of the reference outside the concept subspaces and takes the
inside parts from the concept embeddings. All operations are pure functions
over immutable inputs and are safe to run concurrently.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DegenerateMatrixError,
    DimensionMismatchError,
    DuplicateConceptWarning,
    EmptyPlanError,
    NonFiniteInputError,
    ParameterRangeError,
    RankRangeError,
    SpectralTieWarning,
    SvdConvergenceError,
)

# Orthonormality of stored bases and idempotence of projections are promised
# to this absolute tolerance; 32-bit file round-trips stay well inside it.
ORTHONORMALITY_TOL = 1e-6

# Singular values closer than this at the truncation boundary trigger a
# SpectralTieWarning: the retained subspace depends on backend ordering.
SPECTRAL_TIE_TOL = 1e-9


def _as_finite_array(values, *, name, ndim):
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != ndim:
        raise DimensionMismatchError(
            f"{name} must be {ndim}-dimensional, got shape {array.shape}"
        )
    if array.size == 0:
        raise DimensionMismatchError(f"{name} must not be empty")
    if not np.all(np.isfinite(array)):
        raise NonFiniteInputError(f"{name} contains NaN or Inf entries")
    array = array.copy()
    array.setflags(write=False)
    return array


class SubspaceSource(str, Enum):
    """How the spanning embeddings were produced."""

    TEXT_SPANNED = "text-spanned"
    IMAGE_SPANNED = "image-spanned"


class CompositionMode(str, Enum):
    ONE_STEP = "one-step"
    SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class EmbeddingVector:
    """One d-dimensional point in embedding space, stored unnormalized."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _as_finite_array(self.values, name="embedding", ndim=1)
        )

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row-major stack of n embeddings sharing one dimension d.

    Rows are kept exactly as ingested; no L2 rescaling happens here. Spanning
    with raw encoder outputs preserves the natural variation in the data and
    measurably improves the resulting subspaces.
    """

    rows: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "rows", _as_finite_array(self.rows, name="embedding matrix", ndim=2)
        )

    @classmethod
    def from_vectors(cls, vectors) -> "EmbeddingMatrix":
        vectors = list(vectors)
        if not vectors:
            raise DimensionMismatchError("embedding matrix needs at least one row")
        dims = {v.dim for v in vectors}
        if len(dims) > 1:
            raise DimensionMismatchError(
                f"rows mix dimensions {sorted(dims)}; all rows must share one dim"
            )
        return cls(np.stack([v.values for v in vectors]))

    @classmethod
    def from_array(cls, array, *, normalize_rows: bool = False) -> "EmbeddingMatrix":
        """Build from an (n, d) array.

        normalize_rows is a diagnostic switch only. The canonical pipeline
        keeps rows unnormalized; turn this on to compare against the
        unit-norm variant, never as a default.
        """
        array = np.asarray(array, dtype=np.float64)
        if normalize_rows:
            norms = np.linalg.norm(array, axis=1, keepdims=True)
            if np.any(norms == 0.0):
                raise DegenerateMatrixError("cannot normalize a zero row")
            array = array / norms
        return cls(array)

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])


@dataclass(frozen=True)
class SvdResult:
    """Spectrum and right singular vectors of an embedding matrix.

    right_vectors holds min(n, d) orthonormal rows; the left vectors are
    recoverable as E v_i / sigma_i and are never stored.
    """

    singular_values: np.ndarray
    right_vectors: np.ndarray
    effective_rank: int

    def __post_init__(self):
        sigma = np.asarray(self.singular_values, dtype=np.float64)
        vt = np.asarray(self.right_vectors, dtype=np.float64)
        if sigma.ndim != 1 or vt.ndim != 2 or sigma.shape[0] != vt.shape[0]:
            raise DimensionMismatchError(
                f"inconsistent SVD shapes: sigma {sigma.shape}, right vectors {vt.shape}"
            )
        sigma = sigma.copy()
        vt = vt.copy()
        sigma.setflags(write=False)
        vt.setflags(write=False)
        object.__setattr__(self, "singular_values", sigma)
        object.__setattr__(self, "right_vectors", vt)


@dataclass(frozen=True)
class ConceptSubspace:
    """Factored rank-r projector for one concept.

    basis is r-by-d with orthonormal rows, sign-normalized so each row's
    largest-magnitude entry is positive. The implied projector is
    basis^T basis; it is idempotent and symmetric by construction. A rank-0
    subspace (empty basis) is tolerated as an internal sentinel whose
    projector is zero; regular construction always yields r >= 1.
    """

    basis: np.ndarray
    singular_values: np.ndarray
    concept_name: str
    source: SubspaceSource

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=np.float64)
        sigma = np.asarray(self.singular_values, dtype=np.float64)
        if basis.ndim != 2:
            raise DimensionMismatchError(f"basis must be 2-dimensional, got {basis.shape}")
        if sigma.ndim != 1 or sigma.shape[0] != basis.shape[0]:
            raise DimensionMismatchError(
                f"{basis.shape[0]} basis rows but {sigma.shape[0]} singular values"
            )
        if basis.shape[1] < 1:
            raise DimensionMismatchError("basis has zero ambient dimension")
        if not np.all(np.isfinite(basis)):
            raise NonFiniteInputError("basis contains NaN or Inf entries")
        if np.any(sigma < 0.0) or np.any(np.diff(sigma) > 0.0):
            raise ParameterRangeError("singular values must be non-increasing and >= 0")
        if basis.shape[0] > 0:
            gram = basis @ basis.T
            if np.max(np.abs(gram - np.eye(basis.shape[0]))) > ORTHONORMALITY_TOL:
                raise ParameterRangeError(
                    f"basis rows not orthonormal within {ORTHONORMALITY_TOL:g}"
                )
        basis = basis.copy()
        sigma = sigma.copy()
        basis.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "singular_values", sigma)
        object.__setattr__(self, "source", SubspaceSource(self.source))

    @property
    def rank(self) -> int:
        return int(self.basis.shape[0])

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])


@dataclass(frozen=True)
class CompositionPlan:
    """Reference embedding plus ordered (concept embedding, subspace) bindings."""

    reference: EmbeddingVector
    bindings: tuple
    mode: CompositionMode

    def __post_init__(self):
        bindings = tuple(self.bindings)
        if not bindings:
            raise EmptyPlanError("composition plan needs at least one binding")
        for concept, subspace in bindings:
            _check_dim(self.reference.dim, concept.dim, "concept embedding")
            _check_dim(self.reference.dim, subspace.dim, "concept subspace")
        names = [subspace.concept_name for _, subspace in bindings]
        dupes = sorted({name for name in names if names.count(name) > 1})
        if dupes:
            warnings.warn(
                f"plan binds duplicate concept names: {', '.join(dupes)}",
                DuplicateConceptWarning,
                stacklevel=2,
            )
        object.__setattr__(self, "bindings", bindings)
        object.__setattr__(self, "mode", CompositionMode(self.mode))

    @property
    def k(self) -> int:
        return len(self.bindings)


def _check_dim(expected, actual, what):
    if expected != actual:
        raise DimensionMismatchError(f"{what} has dim {actual}, expected {expected}")


def compute_svd(matrix: EmbeddingMatrix) -> SvdResult:
    """Full thin SVD of the embedding matrix.

    Returns the singular values in descending order and the min(n, d) right
    singular vectors as rows. Raises SvdConvergenceError instead of returning
    garbage if the backend fails to converge.
    """
    try:
        _, sigma, vt = np.linalg.svd(matrix.rows, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(f"SVD did not converge: {exc}") from exc
    tol = max(matrix.n, matrix.dim) * np.finfo(np.float64).eps * (sigma[0] if sigma.size else 0.0)
    effective_rank = int(np.count_nonzero(sigma > tol))
    return SvdResult(singular_values=sigma, right_vectors=vt, effective_rank=effective_rank)


def _sign_normalize(rows):
    """Flip rows so the largest-magnitude entry of each is positive.

    Ties on magnitude resolve to the lowest index. This pins the stored basis
    to one representative regardless of SVD backend sign choices; the
    projector itself is sign-invariant.
    """
    rows = np.array(rows, dtype=np.float64)
    for i in range(rows.shape[0]):
        j = int(np.argmax(np.abs(rows[i])))
        if rows[i, j] < 0.0:
            rows[i] = -rows[i]
    return rows


def build_subspace(
    matrix: EmbeddingMatrix,
    rank: int,
    concept_name: str,
    source: SubspaceSource = SubspaceSource.TEXT_SPANNED,
) -> ConceptSubspace:
    """Span a concept subspace with the top-`rank` right singular vectors.

    The result is deterministic for a given matrix and rank thanks to the
    sign convention. If the spectrum ties at the truncation boundary
    (sigma_r equals sigma_{r+1} within SPECTRAL_TIE_TOL) a SpectralTieWarning
    is emitted and backend ordering decides which vector is kept.
    """
    max_rank = min(matrix.n, matrix.dim)
    rank = int(rank)
    if rank < 1 or rank > max_rank:
        raise RankRangeError(
            f"rank {rank} outside [1, {max_rank}] for a {matrix.n}x{matrix.dim} matrix",
            rank=rank,
            max_rank=max_rank,
        )
    if not matrix.rows.any():
        raise DegenerateMatrixError("all-zero matrix spans no subspace")
    svd = compute_svd(matrix)
    sigma = svd.singular_values
    if rank < sigma.shape[0] and abs(sigma[rank - 1] - sigma[rank]) <= SPECTRAL_TIE_TOL:
        warnings.warn(
            f"singular values tie at the rank boundary "
            f"(sigma_{rank} = {sigma[rank - 1]:.12g}, sigma_{rank + 1} = {sigma[rank]:.12g}); "
            "the retained subspace is ill defined there",
            SpectralTieWarning,
            stacklevel=2,
        )
    basis = _sign_normalize(svd.right_vectors[:rank])
    return ConceptSubspace(
        basis=basis,
        singular_values=sigma[:rank],
        concept_name=concept_name,
        source=source,
    )


def _project_raw(basis, values):
    return basis.T @ (basis @ values)


def project(subspace: ConceptSubspace, embedding: EmbeddingVector) -> EmbeddingVector:
    """Orthogonal projection of the embedding onto the concept subspace."""
    _check_dim(subspace.dim, embedding.dim, "embedding")
    return EmbeddingVector(_project_raw(subspace.basis, embedding.values))


def compose_pair(
    e_ref: EmbeddingVector, e_c: EmbeddingVector, subspace: ConceptSubspace
) -> EmbeddingVector:
    """Swap the subspace component of the reference for that of the concept.

    Computes e_ref minus its projection onto the subspace plus the concept
    embedding's projection. Plain linear algebra; the output is deliberately
    not renormalized.
    """
    _check_dim(e_ref.dim, e_c.dim, "concept embedding")
    _check_dim(e_ref.dim, subspace.dim, "concept subspace")
    basis = subspace.basis
    composite = e_ref.values - _project_raw(basis, e_ref.values) + _project_raw(basis, e_c.values)
    return EmbeddingVector(composite)


def compose_multi(plan: CompositionPlan, *, subtract_cross_projections: bool = False) -> EmbeddingVector:
    """One-shot multi-concept swap.

    Subtracts every subspace projection of the reference, then adds each
    concept embedding's projection onto its own subspace. Projections of one
    concept onto the subspaces of the others are deliberately left in place;
    removing them makes results overly sensitive to the per-concept rank
    choice. The subtract_cross_projections switch enables that non-canonical
    variant anyway, for experiments only.

    For a single binding this reduces to, and exactly equals, compose_pair.
    The binding order only reorders a sum, so it cannot change the result
    beyond float round-off.
    """
    if plan.mode is not CompositionMode.ONE_STEP:
        raise ParameterRangeError(f"plan mode is {plan.mode.value}, expected one-step")
    if plan.k == 1:
        concept, subspace = plan.bindings[0]
        return compose_pair(plan.reference, concept, subspace)

    reference = plan.reference.values
    composite = reference.copy()
    for _, subspace in plan.bindings:
        composite -= _project_raw(subspace.basis, reference)
    for concept, subspace in plan.bindings:
        contribution = _project_raw(subspace.basis, concept.values)
        if subtract_cross_projections:
            for _, other in plan.bindings:
                if other is not subspace:
                    contribution = contribution - _project_raw(other.basis, contribution)
        composite += contribution
    return EmbeddingVector(composite)


def compose_sequential(plan: CompositionPlan) -> EmbeddingVector:
    """Left fold of pairwise swaps in binding order.

    Each step treats the previous composite as the new reference, so later
    bindings overwrite earlier ones wherever subspaces overlap. Order matters
    by design. This folds embeddings only; it does not regenerate an
    intermediate image between steps the way a generation pipeline could.
    """
    if plan.mode is not CompositionMode.SEQUENTIAL:
        raise ParameterRangeError(f"plan mode is {plan.mode.value}, expected sequential")
    composite = plan.reference
    for concept, subspace in plan.bindings:
        composite = compose_pair(composite, concept, subspace)
    return composite


def compose(plan: CompositionPlan, **kwargs) -> EmbeddingVector:
    """Dispatch to the one-step or sequential strategy named by the plan."""
    if plan.mode is CompositionMode.ONE_STEP:
        return compose_multi(plan, **kwargs)
    return compose_sequential(plan)


def interpolate(e1: EmbeddingVector, e2: EmbeddingVector, alpha: float) -> EmbeddingVector:
    """Linear interpolation (1 - alpha) * e1 + alpha * e2 with alpha in [0, 1]."""
    _check_dim(e1.dim, e2.dim, "second embedding")
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ParameterRangeError(f"alpha must lie in [0, 1], got {alpha}")
    return EmbeddingVector((1.0 - alpha) * e1.values + alpha * e2.values)
