import json

import numpy as np
import pytest

import oracle
from conceptstitch import matrixio
from conceptstitch.bank import (
    RANK_HIGH_VARIATION,
    RANK_LOW_VARIATION,
    ConceptManifest,
    PromptBank,
    RankClass,
    build_concept,
    default_rank,
    file_checksum,
    load_prompt_bank,
    save_prompt_bank,
    spectrum_report,
)
from conceptstitch.core import EmbeddingMatrix, SubspaceSource, build_subspace
from conceptstitch.errors import (
    BankFormatError,
    ChecksumMismatchError,
    DuplicatePromptWarning,
    ParameterRangeError,
    RankRangeError,
    ShapeMismatchError,
)


def write_bank(path, concept="night sky", prompts=None, rank_class="low-variation"):
    if prompts is None:
        prompts = [f"variation {i}" for i in range(10)]
    payload = {
        "concept_name": concept,
        "rank_class": rank_class,
        "prompts": prompts,
        "provenance": "handwritten fixture",
    }
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


class TestPromptBank:
    def test_loads_150_prompt_bank(self, tmp_path):
        prompts = [f"a scene at hour {i}" for i in range(150)]
        bank = load_prompt_bank(write_bank(tmp_path / "bank.json", prompts=prompts))
        assert bank.n == 150
        assert bank.prompts == tuple(prompts)
        assert bank.rank_class is RankClass.LOW_VARIATION

    def test_duplicates_dropped_with_warning(self, tmp_path):
        path = write_bank(tmp_path / "bank.json", prompts=["same", "other", "same"])
        with pytest.warns(DuplicatePromptWarning):
            bank = load_prompt_bank(path)
        assert bank.n == 2
        assert bank.prompts == ("same", "other")

    def test_missing_concept_name_names_field(self, tmp_path):
        path = tmp_path / "bank.json"
        path.write_text(json.dumps({"rank_class": "custom", "prompts": ["a"]}))
        with pytest.raises(BankFormatError, match="concept_name"):
            load_prompt_bank(path)

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "bank.json"
        path.write_text('{"concept_name": "x",\n  "prompts": [}')
        with pytest.raises(BankFormatError, match="line 2"):
            load_prompt_bank(path)

    def test_empty_bank_rejected(self, tmp_path):
        path = write_bank(tmp_path / "bank.json", prompts=[])
        with pytest.raises(BankFormatError):
            load_prompt_bank(path)

    def test_bad_rank_class_rejected(self, tmp_path):
        path = write_bank(tmp_path / "bank.json", rank_class="enormous")
        with pytest.raises(BankFormatError, match="rank_class"):
            load_prompt_bank(path)

    def test_round_trip(self, tmp_path):
        bank = PromptBank(
            concept_name="fur",
            prompts=("spotted fur", "striped fur"),
            rank_class=RankClass.HIGH_VARIATION,
            provenance="test",
        )
        save_prompt_bank(bank, tmp_path / "out.json")
        loaded = load_prompt_bank(tmp_path / "out.json")
        assert loaded == bank


class TestDefaultRank:
    def test_low_variation(self):
        assert default_rank(RankClass.LOW_VARIATION) == 30 == RANK_LOW_VARIATION

    def test_high_variation(self):
        assert default_rank(RankClass.HIGH_VARIATION) == 120 == RANK_HIGH_VARIATION

    def test_custom_requires_explicit(self):
        with pytest.raises(ParameterRangeError):
            default_rank(RankClass.CUSTOM)

    def test_explicit_passthrough(self):
        assert default_rank(RankClass.CUSTOM, explicit_rank=7) == 7

    def test_explicit_must_be_positive(self):
        with pytest.raises(RankRangeError):
            default_rank(RankClass.CUSTOM, explicit_rank=0)


def make_concept_dir(tmp_path, n=12, d=6, rank=2, source="text-spanned"):
    rng = np.random.default_rng(101)
    rows = rng.standard_normal((n, d))
    bank_path = write_bank(
        tmp_path / "bank.json",
        concept="fixture",
        prompts=[f"p{i}" for i in range(n)],
        rank_class="custom",
    )
    matrix_path = tmp_path / "emb.npy"
    matrixio.write_matrix(matrix_path, rows)
    manifest = ConceptManifest(
        concept_name="fixture",
        prompt_bank_path="bank.json",
        embedding_matrix_path="emb.npy",
        rank=rank,
        source=SubspaceSource(source),
        dim=d,
        checksum=file_checksum(matrix_path),
    )
    return manifest, rows


class TestConceptManifest:
    def test_round_trip_is_field_identical(self, tmp_path):
        manifest, _ = make_concept_dir(tmp_path)
        manifest.save(tmp_path / "manifest.json")
        loaded = ConceptManifest.load(tmp_path / "manifest.json")
        assert loaded == manifest

    def test_single_byte_tamper_detected(self, tmp_path):
        manifest, _ = make_concept_dir(tmp_path)
        manifest.save(tmp_path / "manifest.json")
        matrix_path = tmp_path / "emb.npy"
        blob = bytearray(matrix_path.read_bytes())
        blob[-1] ^= 0x01
        matrix_path.write_bytes(bytes(blob))
        with pytest.raises(ChecksumMismatchError):
            ConceptManifest.load(tmp_path / "manifest.json")

    def test_missing_referenced_file(self, tmp_path):
        manifest, _ = make_concept_dir(tmp_path)
        manifest.save(tmp_path / "manifest.json")
        (tmp_path / "bank.json").unlink()
        with pytest.raises(BankFormatError, match="bank.json"):
            ConceptManifest.load(tmp_path / "manifest.json")


class TestBuildConcept:
    def test_delegates_bitwise_to_core(self, tmp_path):
        manifest, rows = make_concept_dir(tmp_path)
        subspace = build_concept(manifest, base_dir=tmp_path)
        # the matrix file stores float32, so compare against a core build on
        # the same 32-bit data
        direct = build_subspace(
            EmbeddingMatrix(matrixio.read_matrix(tmp_path / "emb.npy")),
            manifest.rank,
            manifest.concept_name,
            manifest.source,
        )
        np.testing.assert_array_equal(subspace.basis, direct.basis)
        np.testing.assert_array_equal(subspace.singular_values, direct.singular_values)
        assert subspace.concept_name == "fixture"
        assert subspace.source is SubspaceSource.TEXT_SPANNED

    def test_projector_trace_matches_rank(self, tmp_path):
        manifest, _ = make_concept_dir(tmp_path, n=40, d=16, rank=5)
        subspace = build_concept(manifest, base_dir=tmp_path)
        assert abs(float(np.sum(subspace.basis**2)) - 5.0) <= 1e-3

    def test_rank_beyond_rows_rejected(self, tmp_path):
        manifest, _ = make_concept_dir(tmp_path, n=10, d=40, rank=30)
        with pytest.raises(RankRangeError) as excinfo:
            build_concept(manifest, base_dir=tmp_path)
        assert excinfo.value.max_rank == 10

    def test_row_count_mismatch_names_both_counts(self, tmp_path):
        manifest, rows = make_concept_dir(tmp_path, n=12)
        matrixio.write_matrix(tmp_path / "emb.npy", rows[:9])
        manifest = ConceptManifest(
            concept_name=manifest.concept_name,
            prompt_bank_path=manifest.prompt_bank_path,
            embedding_matrix_path=manifest.embedding_matrix_path,
            rank=manifest.rank,
            source=manifest.source,
            dim=manifest.dim,
            checksum=file_checksum(tmp_path / "emb.npy"),
        )
        with pytest.raises(ShapeMismatchError, match="12(.|\n)*9"):
            build_concept(manifest, base_dir=tmp_path)

    def test_stale_checksum_detected(self, tmp_path):
        manifest, rows = make_concept_dir(tmp_path)
        matrixio.write_matrix(tmp_path / "emb.npy", rows + 1.0)
        with pytest.raises(ChecksumMismatchError):
            build_concept(manifest, base_dir=tmp_path)

    def test_image_spanned_source_propagates(self, tmp_path):
        manifest, _ = make_concept_dir(tmp_path, source="image-spanned")
        subspace = build_concept(manifest, base_dir=tmp_path)
        assert subspace.source is SubspaceSource.IMAGE_SPANNED


class TestSpectrumReport:
    def test_hand_arithmetic(self):
        report = spectrum_report(EmbeddingMatrix([[2.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_allclose(report.singular_values, [2.0, 1.0])
        assert report.energy_fraction[0] == pytest.approx(0.8)
        assert report.energy_fraction[1] == pytest.approx(1.0)
        np.testing.assert_allclose(report.gap_ratios, [2.0])

    def test_repeated_row_is_rank_one(self):
        report = spectrum_report(EmbeddingMatrix([[1.0, 2.0], [1.0, 2.0]]))
        assert report.energy_fraction[0] == pytest.approx(1.0)

    def test_matches_oracle_energy(self):
        rng = np.random.default_rng(211)
        rows = rng.standard_normal((20, 8))
        sigma, _ = oracle.eig_singular_triplets(rows)
        energy = np.cumsum(sigma**2) / np.sum(sigma**2)
        report = spectrum_report(EmbeddingMatrix(rows))
        np.testing.assert_allclose(report.energy_fraction, energy, atol=1e-8)

    def test_energy_fraction_monotone_reaches_one(self):
        rng = np.random.default_rng(223)
        report = spectrum_report(EmbeddingMatrix(rng.standard_normal((15, 9))))
        assert np.all(np.diff(report.energy_fraction) >= -1e-15)
        assert abs(report.energy_fraction[-1] - 1.0) <= 1e-9

    def test_suggested_ranks_monotone(self):
        rng = np.random.default_rng(227)
        report = spectrum_report(EmbeddingMatrix(rng.standard_normal((30, 12))))
        assert (
            report.suggested_ranks[90]
            <= report.suggested_ranks[95]
            <= report.suggested_ranks[99]
        )
