"""Command-line surface: build, compose, inspect, eval, benchmark.

Exit codes: 0 success, 2 usage error, 3 refusal (existing output without
--force), 4 data error. Every failure prints a single JSON object with a
stable "code" field on stderr. Outputs are byte-deterministic for identical
inputs and flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import matrixio
from .bank import RankClass, default_rank, load_prompt_bank
from .core import (
    CompositionMode,
    CompositionPlan,
    EmbeddingMatrix,
    EmbeddingVector,
    SubspaceSource,
    build_subspace,
    compose_multi,
    compose_sequential,
)
from .errors import (
    BankFormatError,
    BudgetExceededError,
    ConceptStitchError,
    DimensionMismatchError,
    MatrixFormatError,
    OverwriteRefusedError,
    ParameterRangeError,
    RankRangeError,
    ZeroVectorError,
)
from .evaluation import (
    AblationMethod,
    CaseScore,
    EvalCase,
    EvalReport,
    evaluate_case,
    make_synthetic_benchmark,
    run_ablation,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REFUSAL = 3
EXIT_DATA = 4


class UsageError(ConceptStitchError):
    code = "usage"


def _emit_error(code: str, message: str, **extra) -> None:
    payload = {"code": code, "message": message}
    payload.update(extra)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    """argparse that reports its own failures as JSON on stderr."""

    def error(self, message):
        _emit_error("usage", message)
        raise SystemExit(EXIT_USAGE)


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


@dataclass(frozen=True)
class CompositionManifest:
    """Composition request: reference, bindings, mode, optional text prompt.

    The text prompt is carried through untouched for generation backends
    that support joint text conditioning; composition itself ignores it.
    """

    reference_embedding_path: str
    bindings: tuple
    mode: CompositionMode
    passthrough_text_prompt: str | None = None

    @classmethod
    def load(cls, path) -> "CompositionManifest":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise BankFormatError(f"cannot read composition manifest {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise BankFormatError(
                f"invalid JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
        for field_name in ("reference_embedding_path", "bindings", "mode"):
            if field_name not in data:
                raise BankFormatError(f"{path}: missing required field '{field_name}'")
        try:
            mode = CompositionMode(data["mode"])
        except ValueError:
            raise BankFormatError(
                f"{path}: mode must be one of "
                f"{[m.value for m in CompositionMode]}, got {data['mode']!r}"
            ) from None
        raw_bindings = data["bindings"]
        if not isinstance(raw_bindings, list) or not raw_bindings:
            raise BankFormatError(f"{path}: 'bindings' must be a non-empty list")
        base = path.parent
        bindings = []
        for i, entry in enumerate(raw_bindings):
            for key in ("concept_embedding_path", "subspace_dir"):
                if key not in entry:
                    raise BankFormatError(f"{path}: binding {i} is missing '{key}'")
            bindings.append((entry["concept_embedding_path"], entry["subspace_dir"]))
        for ref in [data["reference_embedding_path"]] + [p for pair in bindings for p in pair]:
            if not (base / ref).exists():
                raise BankFormatError(f"{path}: referenced path does not exist: {ref}")
        return cls(
            reference_embedding_path=data["reference_embedding_path"],
            bindings=tuple(bindings),
            mode=mode,
            passthrough_text_prompt=data.get("passthrough_text_prompt"),
        )


def _cmd_build(args) -> int:
    if args.rank is not None and args.rank < 1:
        raise UsageError(f"--rank must be >= 1, got {args.rank}")
    if args.rank is None and args.rank_class is None:
        raise UsageError("one of --rank or --rank-class is required")
    bank = load_prompt_bank(args.bank)
    rank = default_rank(
        RankClass(args.rank_class) if args.rank_class else bank.rank_class,
        explicit_rank=args.rank,
    )
    rows = matrixio.read_matrix(args.embeddings)
    if rows.ndim != 2:
        raise MatrixFormatError(f"{args.embeddings}: expected an (n, d) matrix, got {rows.shape}")
    if rows.shape[0] != bank.n:
        raise DimensionMismatchError(
            f"bank '{bank.concept_name}' holds {bank.n} prompts but "
            f"{args.embeddings} has {rows.shape[0]} rows"
        )
    subspace = build_subspace(
        EmbeddingMatrix(rows), rank, bank.concept_name, SubspaceSource(args.source)
    )
    matrixio.write_subspace_dir(args.out, subspace, force=args.force)
    print(
        _dump_json(
            {
                "out": str(args.out),
                "concept_name": subspace.concept_name,
                "rank": subspace.rank,
                "dim": subspace.dim,
                "rows": int(rows.shape[0]),
                "source": subspace.source.value,
            }
        )
    )
    return EXIT_OK


def _load_vector(path, base: Path) -> EmbeddingVector:
    resolved = base / path
    values = matrixio.read_vector(resolved)
    try:
        return EmbeddingVector(values)
    except ConceptStitchError as exc:
        raise MatrixFormatError(f"{resolved}: {exc}") from exc


def _cmd_compose(args) -> int:
    manifest = CompositionManifest.load(args.manifest)
    base = Path(args.manifest).parent
    reference = _load_vector(manifest.reference_embedding_path, base)
    bindings = []
    for concept_path, subspace_dir in manifest.bindings:
        concept = _load_vector(concept_path, base)
        subspace = matrixio.read_subspace_dir(base / subspace_dir)
        if concept.dim != reference.dim:
            raise DimensionMismatchError(
                f"{base / concept_path} has dim {concept.dim}, reference "
                f"{base / manifest.reference_embedding_path} has dim {reference.dim}"
            )
        if subspace.dim != reference.dim:
            raise DimensionMismatchError(
                f"{base / subspace_dir} has dim {subspace.dim}, reference "
                f"{base / manifest.reference_embedding_path} has dim {reference.dim}"
            )
        bindings.append((concept, subspace))
    plan = CompositionPlan(reference=reference, bindings=tuple(bindings), mode=manifest.mode)
    if plan.mode is CompositionMode.ONE_STEP:
        composite = compose_multi(plan)
    else:
        composite = compose_sequential(plan)
    matrixio.write_matrix(args.out, composite.values)
    per_concept = []
    for (concept, subspace), (concept_path, _) in zip(bindings, manifest.bindings):
        proj_ref = subspace.basis.T @ (subspace.basis @ reference.values)
        proj_concept = subspace.basis.T @ (subspace.basis @ concept.values)
        per_concept.append(
            {
                "concept": subspace.concept_name,
                "concept_embedding_path": concept_path,
                "norm_ref_projection": float(np.linalg.norm(proj_ref)),
                "norm_concept_projection": float(np.linalg.norm(proj_concept)),
            }
        )
    summary = {
        "out": str(args.out),
        "mode": plan.mode.value,
        "norm_ref": reference.norm(),
        "norm_comp": composite.norm(),
        "per_concept_projection_norms": per_concept,
    }
    if manifest.passthrough_text_prompt is not None:
        summary["passthrough_text_prompt"] = manifest.passthrough_text_prompt
    print(_dump_json(summary))
    return EXIT_OK


def _cmd_inspect(args) -> int:
    if args.top is not None and args.top < 1:
        raise UsageError(f"--top must be >= 1, got {args.top}")
    rows = matrixio.read_matrix(args.embeddings)
    if rows.ndim != 2:
        raise MatrixFormatError(f"{args.embeddings}: expected an (n, d) matrix, got {rows.shape}")
    from .bank import spectrum_report

    report = spectrum_report(EmbeddingMatrix(rows))
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["index", "sigma", "energy_fraction"])
    limit = len(report.singular_values) if args.top is None else min(args.top, len(report.singular_values))
    for i in range(limit):
        writer.writerow(
            [i + 1, repr(float(report.singular_values[i])), repr(float(report.energy_fraction[i]))]
        )
    return EXIT_OK


def _load_description(path, base: Path) -> EmbeddingVector:
    vector = _load_vector(path, base)
    if vector.norm() == 0.0:
        raise ZeroVectorError(f"{base / path}: description embedding is a zero vector")
    return vector


def _cmd_eval(args) -> int:
    if len(args.concepts) != len(args.leaks):
        raise UsageError(
            f"got {len(args.concepts)} --concepts but {len(args.leaks)} --leaks; "
            "they pair one-to-one"
        )
    base = Path(".")
    generated = _load_vector(args.generated, base)
    if generated.norm() == 0.0:
        raise ZeroVectorError(f"{args.generated}: generated embedding is a zero vector")
    concepts = [
        (Path(p).stem, _load_description(p, base)) for p in args.concepts
    ]
    leaks = [(Path(p).stem, _load_description(p, base)) for p in args.leaks]
    case = EvalCase(
        generated_embedding=generated,
        concept_descriptions=tuple(concepts),
        leakage_descriptions=tuple(leaks),
    )
    report = evaluate_case(case)
    _write_report(report, args)
    return EXIT_OK


def _write_report(report: EvalReport, args) -> None:
    rendered = report.to_csv() if args.csv else report.to_json() + "\n"
    if args.out:
        matrixio.atomic_write_bytes(Path(args.out), rendered.encode("utf-8"))
        print(_dump_json({"out": str(args.out), "cases": len(report.cases)}))
    else:
        sys.stdout.write(rendered)


def _cmd_benchmark(args) -> int:
    benchmark = make_synthetic_benchmark(args.seed, args.dim, args.concepts, args.rank)
    report = run_ablation(
        benchmark,
        AblationMethod(args.method),
        alpha=args.alpha,
        image_noise=args.noise,
        image_sample_count=args.samples,
    )
    _write_report(report, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="conceptstitch",
        description="Build concept subspaces from embedding banks and stitch "
        "composite embeddings by swapping subspace projections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a concept subspace directory")
    p_build.add_argument("--bank", required=True, help="prompt-bank JSON file")
    p_build.add_argument("--embeddings", required=True, help="(n, d) embedding matrix file")
    p_build.add_argument("--rank", type=int, default=None, help="explicit subspace rank")
    p_build.add_argument(
        "--rank-class",
        choices=[c.value for c in RankClass],
        default=None,
        help="rank heuristic class (overrides the bank's class)",
    )
    p_build.add_argument(
        "--source",
        choices=[s.value for s in SubspaceSource],
        default=SubspaceSource.TEXT_SPANNED.value,
        help="provenance tag for the spanning embeddings",
    )
    p_build.add_argument("--out", required=True, help="output subspace directory")
    p_build.add_argument("--force", action="store_true", help="overwrite an existing directory")
    p_build.set_defaults(func=_cmd_build)

    p_compose = sub.add_parser("compose", help="stitch a composite embedding")
    p_compose.add_argument("--manifest", required=True, help="composition manifest JSON")
    p_compose.add_argument("--out", required=True, help="output embedding file (d,)")
    p_compose.set_defaults(func=_cmd_compose)

    p_inspect = sub.add_parser("inspect", help="print the singular spectrum as CSV")
    p_inspect.add_argument("--embeddings", required=True, help="(n, d) embedding matrix file")
    p_inspect.add_argument("--top", type=int, default=None, help="print only the first k rows")
    p_inspect.set_defaults(func=_cmd_inspect)

    p_eval = sub.add_parser("eval", help="score a generated embedding against descriptions")
    p_eval.add_argument("--generated", required=True, help="generated embedding file")
    p_eval.add_argument("--concepts", nargs="+", required=True, help="concept description files")
    p_eval.add_argument("--leaks", nargs="+", required=True, help="leakage description files")
    fmt = p_eval.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit JSON (default)")
    fmt.add_argument("--csv", action="store_true", help="emit CSV, one row per case")
    p_eval.add_argument("--out", default=None, help="report file (stdout when omitted)")
    p_eval.set_defaults(func=_cmd_eval)

    p_bench = sub.add_parser("benchmark", help="run an ablation on the synthetic benchmark")
    p_bench.add_argument("--seed", type=int, required=True, help="benchmark generator seed")
    p_bench.add_argument("--dim", type=int, default=16, help="embedding dimension")
    p_bench.add_argument("--concepts", type=int, default=2, help="number of planted concepts")
    p_bench.add_argument("--rank", type=int, default=3, help="rank per planted concept")
    p_bench.add_argument(
        "--method",
        choices=[m.value for m in AblationMethod],
        default=AblationMethod.PROJECTION_COMPOSE.value,
    )
    p_bench.add_argument("--alpha", type=float, default=0.5, help="interpolation weight")
    p_bench.add_argument("--noise", type=float, default=0.3, help="image-spanned noise level")
    p_bench.add_argument("--samples", type=int, default=50, help="image-spanned sample count")
    fmt = p_bench.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit JSON (default)")
    fmt.add_argument("--csv", action="store_true", help="emit CSV, one row per case")
    p_bench.add_argument("--out", default=None, help="report file (stdout when omitted)")
    p_bench.set_defaults(func=_cmd_benchmark)

    return parser


_EXIT_BY_ERROR = {
    UsageError: EXIT_USAGE,
    ParameterRangeError: EXIT_USAGE,
    BudgetExceededError: EXIT_USAGE,
    OverwriteRefusedError: EXIT_REFUSAL,
}


def _exit_code_for(exc: ConceptStitchError) -> int:
    for klass, code in _EXIT_BY_ERROR.items():
        if isinstance(exc, klass):
            return code
    return EXIT_DATA


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except ConceptStitchError as exc:
        _emit_error(exc.code, str(exc))
        return _exit_code_for(exc)
    except OSError as exc:
        _emit_error("io_error", str(exc))
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
