"""Exception and warning types shared across the package.

Every error carries a stable ``code`` string; the CLI surfaces it verbatim
in its JSON error objects.
"""

from __future__ import annotations


class ConceptStitchError(Exception):
    """Base class for all engine errors."""

    code = "error"


class NonFiniteInputError(ConceptStitchError):
    """Input contains NaN or Inf entries."""

    code = "non_finite_input"


class DegenerateMatrixError(ConceptStitchError):
    """Matrix has no usable spectrum (all entries zero)."""

    code = "degenerate_matrix"


class RankRangeError(ConceptStitchError):
    """Requested rank outside [1, min(n, d)]."""

    code = "rank_out_of_range"

    def __init__(self, message, *, rank=None, max_rank=None):
        super().__init__(message)
        self.rank = rank
        self.max_rank = max_rank


class DimensionMismatchError(ConceptStitchError):
    """Operands live in spaces of different dimension."""

    code = "dim_mismatch"


class SvdConvergenceError(ConceptStitchError):
    """The SVD backend failed to converge."""

    code = "svd_no_convergence"


class EmptyPlanError(ConceptStitchError):
    """Composition plan holds no bindings."""

    code = "empty_plan"


class ParameterRangeError(ConceptStitchError):
    """Scalar parameter outside its documented range."""

    code = "parameter_out_of_range"


class ZeroVectorError(ConceptStitchError):
    """Cosine similarity is undefined for a zero vector."""

    code = "zero_vector"


class BankFormatError(ConceptStitchError):
    """Prompt-bank or manifest file failed to parse or validate."""

    code = "bank_format"


class ChecksumMismatchError(ConceptStitchError):
    """Stored checksum does not match the file on disk."""

    code = "checksum_mismatch"


class ShapeMismatchError(ConceptStitchError):
    """Declared and actual array shapes disagree."""

    code = "shape_mismatch"


class MatrixFormatError(ConceptStitchError):
    """Matrix file is malformed or uses an unsupported layout."""

    code = "matrix_format"


class OverwriteRefusedError(ConceptStitchError):
    """Output location exists and overwriting was not requested."""

    code = "overwrite_refused"


class BudgetExceededError(ConceptStitchError):
    """Synthetic benchmark dimensions exceed the embedding dimension."""

    code = "dimension_budget"


class SpectralTieWarning(UserWarning):
    """Singular values tie at the truncation boundary; the subspace is
    ill defined there and depends on backend ordering."""


class DuplicatePromptWarning(UserWarning):
    """Exact duplicate prompts were dropped from a bank."""


class DuplicateConceptWarning(UserWarning):
    """A composition plan binds the same concept name more than once."""
