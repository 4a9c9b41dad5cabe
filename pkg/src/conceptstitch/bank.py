"""Concept definitions: prompt banks, manifests, and rank heuristics.

Prompt banks are stored verbatim; nothing here ever calls a language model.
Embedding files referenced by manifests are pinned by SHA-256 so stale or
swapped matrices fail loudly instead of silently spanning the wrong space.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import matrixio
from .core import (
    ConceptSubspace,
    EmbeddingMatrix,
    SubspaceSource,
    build_subspace,
    compute_svd,
)
from .errors import (
    BankFormatError,
    ChecksumMismatchError,
    DegenerateMatrixError,
    DuplicatePromptWarning,
    ParameterRangeError,
    RankRangeError,
    ShapeMismatchError,
)

# Default ranks per variation class. Narrow concepts (outfit swaps and the
# like) do well with 30 retained directions; broad ones (patterns, animals)
# need around 120. Chosen empirically; override with an explicit rank when a
# concept does not fit either bucket.
RANK_LOW_VARIATION = 30
RANK_HIGH_VARIATION = 120

# Advisory bank sizes: ~150 prompts covers most concepts, ~500 for
# high-dimension ones such as object insertion. Not enforced.
SUGGESTED_BANK_SIZE = 150
SUGGESTED_BANK_SIZE_LARGE = 500


class RankClass(str, Enum):
    LOW_VARIATION = "low-variation"
    HIGH_VARIATION = "high-variation"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PromptBank:
    """Ordered prompt list spanning one concept's attribute space."""

    concept_name: str
    prompts: tuple
    rank_class: RankClass
    provenance: str = ""

    def __post_init__(self):
        if not self.concept_name:
            raise BankFormatError("concept_name must be a non-empty string")
        prompts = tuple(self.prompts)
        if not prompts:
            raise BankFormatError("prompt bank must hold at least one prompt")
        for prompt in prompts:
            if not isinstance(prompt, str) or not prompt:
                raise BankFormatError("prompts must be non-empty strings")
        deduped = tuple(dict.fromkeys(prompts))
        if len(deduped) != len(prompts):
            warnings.warn(
                f"dropped {len(prompts) - len(deduped)} duplicate prompt(s) "
                f"from bank '{self.concept_name}'",
                DuplicatePromptWarning,
                stacklevel=2,
            )
        object.__setattr__(self, "prompts", deduped)
        object.__setattr__(self, "rank_class", RankClass(self.rank_class))

    @property
    def n(self) -> int:
        return len(self.prompts)


def load_prompt_bank(path) -> PromptBank:
    """Load and validate a prompt-bank JSON file."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BankFormatError(f"cannot read prompt bank {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise BankFormatError(
            f"invalid JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise BankFormatError(f"{path}: top level must be a JSON object")
    for field_name in ("concept_name", "rank_class", "prompts"):
        if field_name not in data:
            raise BankFormatError(f"{path}: missing required field '{field_name}'")
    if not isinstance(data["prompts"], list):
        raise BankFormatError(f"{path}: field 'prompts' must be a list of strings")
    try:
        rank_class = RankClass(data["rank_class"])
    except ValueError:
        raise BankFormatError(
            f"{path}: field 'rank_class' must be one of "
            f"{[c.value for c in RankClass]}, got {data['rank_class']!r}"
        ) from None
    if not isinstance(data["concept_name"], str) or not data["concept_name"]:
        raise BankFormatError(f"{path}: field 'concept_name' must be a non-empty string")
    try:
        return PromptBank(
            concept_name=data["concept_name"],
            prompts=tuple(data["prompts"]),
            rank_class=rank_class,
            provenance=str(data.get("provenance", "")),
        )
    except BankFormatError as exc:
        raise BankFormatError(f"{path}: {exc}") from exc


def save_prompt_bank(bank: PromptBank, path) -> None:
    payload = {
        "concept_name": bank.concept_name,
        "rank_class": bank.rank_class.value,
        "prompts": list(bank.prompts),
        "provenance": bank.provenance,
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def default_rank(rank_class: RankClass, explicit_rank=None) -> int:
    """Resolve the subspace rank for a rank class.

    An explicit rank always wins; the custom class requires one.
    """
    if explicit_rank is not None:
        explicit_rank = int(explicit_rank)
        if explicit_rank < 1:
            raise RankRangeError(
                f"explicit rank must be >= 1, got {explicit_rank}", rank=explicit_rank
            )
        return explicit_rank
    rank_class = RankClass(rank_class)
    if rank_class is RankClass.LOW_VARIATION:
        return RANK_LOW_VARIATION
    if rank_class is RankClass.HIGH_VARIATION:
        return RANK_HIGH_VARIATION
    raise ParameterRangeError("custom rank class requires an explicit rank")


def file_checksum(path) -> str:
    """Lowercase hex SHA-256 of the file's bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class ConceptManifest:
    """Pins one concept build: bank, embedding matrix, rank, and checksum."""

    concept_name: str
    prompt_bank_path: str
    embedding_matrix_path: str
    rank: int
    source: SubspaceSource
    dim: int
    checksum: str

    def __post_init__(self):
        object.__setattr__(self, "source", SubspaceSource(self.source))
        if self.rank < 1:
            raise RankRangeError(f"manifest rank must be >= 1, got {self.rank}", rank=self.rank)
        if self.dim < 1:
            raise BankFormatError(f"manifest dim must be >= 1, got {self.dim}")

    def save(self, path) -> None:
        payload = {
            "concept_name": self.concept_name,
            "prompt_bank_path": self.prompt_bank_path,
            "embedding_matrix_path": self.embedding_matrix_path,
            "rank": int(self.rank),
            "source": self.source.value,
            "dim": int(self.dim),
            "checksum": self.checksum,
        }
        Path(path).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path) -> "ConceptManifest":
        """Load a manifest and verify its paths and embedding checksum.

        Relative paths resolve against the manifest's own directory.
        """
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise BankFormatError(
                f"invalid JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
        except OSError as exc:
            raise BankFormatError(f"cannot read manifest {path}: {exc}") from exc
        required = (
            "concept_name",
            "prompt_bank_path",
            "embedding_matrix_path",
            "rank",
            "source",
            "dim",
            "checksum",
        )
        for field_name in required:
            if field_name not in data:
                raise BankFormatError(f"{path}: missing required field '{field_name}'")
        manifest = cls(
            concept_name=data["concept_name"],
            prompt_bank_path=data["prompt_bank_path"],
            embedding_matrix_path=data["embedding_matrix_path"],
            rank=int(data["rank"]),
            source=SubspaceSource(data["source"]),
            dim=int(data["dim"]),
            checksum=data["checksum"],
        )
        base = path.parent
        for ref in (manifest.prompt_bank_path, manifest.embedding_matrix_path):
            if not (base / ref).exists():
                raise BankFormatError(f"{path}: referenced file does not exist: {ref}")
        actual = file_checksum(base / manifest.embedding_matrix_path)
        if actual != manifest.checksum:
            raise ChecksumMismatchError(
                f"embedding file {manifest.embedding_matrix_path} has checksum {actual}, "
                f"manifest pins {manifest.checksum}"
            )
        return manifest


def build_concept(manifest: ConceptManifest, *, base_dir=None) -> ConceptSubspace:
    """Build the concept subspace a manifest describes.

    Verifies the embedding checksum and that the matrix shape matches the
    bank size and declared dimension, then delegates to the core builder.
    """
    base = Path(base_dir) if base_dir is not None else Path(".")
    bank_path = base / manifest.prompt_bank_path
    matrix_path = base / manifest.embedding_matrix_path
    actual = file_checksum(matrix_path)
    if actual != manifest.checksum:
        raise ChecksumMismatchError(
            f"embedding file {matrix_path} has checksum {actual}, "
            f"manifest pins {manifest.checksum}"
        )
    bank = load_prompt_bank(bank_path)
    rows = matrixio.read_matrix(matrix_path)
    if rows.ndim != 2:
        raise ShapeMismatchError(f"{matrix_path}: expected a 2-d matrix, got shape {rows.shape}")
    if rows.shape[0] != bank.n:
        raise ShapeMismatchError(
            f"bank '{bank.concept_name}' holds {bank.n} prompts but "
            f"{matrix_path} has {rows.shape[0]} rows"
        )
    if rows.shape[1] != manifest.dim:
        raise ShapeMismatchError(
            f"{matrix_path} has dim {rows.shape[1]}, manifest declares {manifest.dim}"
        )
    matrix = EmbeddingMatrix(rows)
    return build_subspace(matrix, manifest.rank, manifest.concept_name, manifest.source)


@dataclass(frozen=True)
class SpectrumReport:
    """Singular spectrum diagnostics used to pick a rank empirically."""

    singular_values: np.ndarray
    energy_fraction: np.ndarray
    gap_ratios: np.ndarray
    suggested_ranks: dict

    def rank_at_energy(self, fraction: float) -> int:
        """Smallest rank whose cumulative squared-sigma share reaches `fraction`."""
        idx = int(np.searchsorted(self.energy_fraction, fraction - 1e-12))
        return min(idx + 1, len(self.singular_values))


def spectrum_report(matrix: EmbeddingMatrix) -> SpectrumReport:
    """Spectrum, cumulative energy, and suggested ranks at 90/95/99% energy."""
    if not matrix.rows.any():
        raise DegenerateMatrixError("all-zero matrix has no spectrum energy")
    svd = compute_svd(matrix)
    sigma = svd.singular_values
    energy = np.cumsum(sigma**2)
    energy_fraction = energy / energy[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        gap_ratios = sigma[:-1] / sigma[1:]
    report = SpectrumReport(
        singular_values=sigma,
        energy_fraction=energy_fraction,
        gap_ratios=gap_ratios,
        suggested_ranks={},
    )
    suggested = {
        level: report.rank_at_energy(level / 100.0) for level in (90, 95, 99)
    }
    object.__setattr__(report, "suggested_ranks", suggested)
    return report
