import json
import subprocess
import sys

import numpy as np
import pytest

from conceptstitch_bridge.cli import main
from conceptstitch_bridge.config import OFFLINE_MODEL
from conceptstitch_bridge.validation import write_matrix_file


def run_engine(*argv):
    return subprocess.run(
        [sys.executable, "-m", "conceptstitch", *map(str, argv)],
        capture_output=True,
        text=True,
    )


@pytest.fixture
def embedding_file(tmp_path):
    rng = np.random.default_rng(811)
    path = tmp_path / "composite.npy"
    write_matrix_file(path, rng.standard_normal(1024))
    return path


class TestMockGeneration:
    def test_identity_composition_matches_reference_render(self, tmp_path, embedding_file, capsys):
        """Composing a reference with itself is the reference embedding, so
        generation from it must match the reference-conditioned render."""
        ref_image = tmp_path / "ref.png"
        comp_image = tmp_path / "comp.png"
        assert main(["generate", "--embedding", str(embedding_file), "--out", str(ref_image), "--seed", "3"]) == 0
        identity = tmp_path / "identity.npy"
        identity.write_bytes(embedding_file.read_bytes())
        assert main(["generate", "--embedding", str(identity), "--out", str(comp_image), "--seed", "3"]) == 0
        capsys.readouterr()
        assert ref_image.read_bytes() == comp_image.read_bytes()
        assert ref_image.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_fixed_seed_is_byte_deterministic(self, tmp_path, embedding_file, capsys):
        blobs = []
        for name in ("a.png", "b.png"):
            out = tmp_path / name
            assert main(["generate", "--embedding", str(embedding_file), "--out", str(out), "--seed", "7"]) == 0
            blobs.append(out.read_bytes())
        capsys.readouterr()
        assert blobs[0] == blobs[1]

    def test_different_embeddings_render_differently(self, tmp_path, embedding_file, capsys):
        other = tmp_path / "other.npy"
        write_matrix_file(other, np.random.default_rng(813).standard_normal(1024))
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        assert main(["generate", "--embedding", str(embedding_file), "--out", str(a), "--seed", "1"]) == 0
        assert main(["generate", "--embedding", str(other), "--out", str(b), "--seed", "1"]) == 0
        capsys.readouterr()
        assert a.read_bytes() != b.read_bytes()

    def test_sidecar_records_settings(self, tmp_path, embedding_file, capsys):
        out = tmp_path / "img.png"
        assert main(
            [
                "generate",
                "--embedding", str(embedding_file),
                "--out", str(out),
                "--seed", "11",
                "--prompt", "soft golden light",
            ]
        ) == 0
        capsys.readouterr()
        sidecar = json.loads((tmp_path / "img.png.json").read_text())
        assert sidecar["seed"] == 11
        assert sidecar["text_prompt"] == "soft golden light"
        assert sidecar["backend"] == "mock"
        assert len(sidecar["image_sha256"]) == 64

    def test_dim_mismatch_is_immediate_structured_error(self, tmp_path, capsys):
        short = tmp_path / "short.npy"
        write_matrix_file(short, np.ones(8))
        code = main(["generate", "--embedding", str(short), "--out", str(tmp_path / "x.png")])
        captured = capsys.readouterr()
        assert code != 0
        payload = json.loads(captured.err)
        assert payload["code"] == "generation"
        assert "1024" in payload["message"]


class TestTwoConceptPipeline:
    def test_end_to_end_two_concept_composition_renders(self, tmp_path, capsys):
        """Stub-encode two concept banks, build subspaces and compose through
        the engine CLI, then render the composite with the mock backend."""
        for concept in ("object", "pattern"):
            bank = tmp_path / f"{concept}_bank.json"
            bank.write_text(
                json.dumps(
                    {
                        "concept_name": concept,
                        "rank_class": "custom",
                        "prompts": [f"{concept} variation {i}" for i in range(24)],
                        "provenance": "pipeline test",
                    }
                )
            )
            emb = tmp_path / f"{concept}_emb.npy"
            assert main(["encode-prompts", "--bank", str(bank), "--out", str(emb), "--model", OFFLINE_MODEL]) == 0
            build = run_engine(
                "build",
                "--bank", bank,
                "--embeddings", emb,
                "--rank", 4,
                "--out", tmp_path / f"{concept}_subspace",
            )
            assert build.returncode == 0, build.stderr
        capsys.readouterr()

        reference = tmp_path / "reference.npy"
        concept_a = tmp_path / "object_image.npy"
        concept_b = tmp_path / "pattern_image.npy"
        rng = np.random.default_rng(821)
        for path in (reference, concept_a, concept_b):
            write_matrix_file(path, rng.standard_normal(1024))
        manifest = tmp_path / "plan.json"
        manifest.write_text(
            json.dumps(
                {
                    "reference_embedding_path": "reference.npy",
                    "bindings": [
                        {"concept_embedding_path": "object_image.npy", "subspace_dir": "object_subspace"},
                        {"concept_embedding_path": "pattern_image.npy", "subspace_dir": "pattern_subspace"},
                    ],
                    "mode": "one-step",
                }
            )
        )
        composite = tmp_path / "composite.npy"
        compose = run_engine("compose", "--manifest", manifest, "--out", composite)
        assert compose.returncode == 0, compose.stderr

        image = tmp_path / "result.png"
        assert main(["generate", "--embedding", str(composite), "--out", str(image), "--seed", "5"]) == 0
        capsys.readouterr()
        assert image.exists() and image.stat().st_size > 0
        assert (tmp_path / "result.png.json").exists()
