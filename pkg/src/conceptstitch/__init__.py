"""Concept-subspace construction and projection-swap embedding composition."""

from .core import (
    CompositionMode,
    CompositionPlan,
    ConceptSubspace,
    EmbeddingMatrix,
    EmbeddingVector,
    SubspaceSource,
    SvdResult,
    build_subspace,
    compose,
    compose_multi,
    compose_pair,
    compose_sequential,
    compute_svd,
    interpolate,
    project,
)
from .bank import (
    ConceptManifest,
    PromptBank,
    RankClass,
    SpectrumReport,
    build_concept,
    default_rank,
    load_prompt_bank,
    save_prompt_bank,
    spectrum_report,
)
from .evaluation import (
    AblationMethod,
    EvalCase,
    EvalReport,
    SyntheticBenchmark,
    concept_similarity,
    evaluate_case,
    leakage_score,
    make_synthetic_benchmark,
    run_ablation,
)
from .matrixio import read_matrix, read_subspace_dir, write_matrix, write_subspace_dir

__version__ = "0.1.0"

__all__ = [
    "AblationMethod",
    "CompositionMode",
    "CompositionPlan",
    "ConceptManifest",
    "ConceptSubspace",
    "EmbeddingMatrix",
    "EmbeddingVector",
    "EvalCase",
    "EvalReport",
    "PromptBank",
    "RankClass",
    "SpectrumReport",
    "SubspaceSource",
    "SvdResult",
    "SyntheticBenchmark",
    "build_concept",
    "build_subspace",
    "compose",
    "compose_multi",
    "compose_pair",
    "compose_sequential",
    "compute_svd",
    "concept_similarity",
    "default_rank",
    "evaluate_case",
    "interpolate",
    "leakage_score",
    "load_prompt_bank",
    "make_synthetic_benchmark",
    "project",
    "read_matrix",
    "read_subspace_dir",
    "run_ablation",
    "save_prompt_bank",
    "spectrum_report",
    "write_matrix",
    "write_subspace_dir",
]
