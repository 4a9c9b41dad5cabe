import json
import subprocess
import sys

import pytest

from conceptstitch_bridge.authoring import (
    AuthoringError,
    author_prompt_bank,
    parse_prompt_lines,
)
from conceptstitch_bridge.cli import main
from conceptstitch_bridge.validation import load_prompt_bank


def fake_completion(lines):
    def complete(prompt):
        return "\n".join(lines)

    return complete


class TestParsePromptLines:
    def test_dedup_preserves_order(self):
        text = "a\nb\n\na\nc\n"
        assert parse_prompt_lines(text, 10) == ["a", "b", "c"]

    def test_caps_at_count(self):
        text = "\n".join(f"line {i}" for i in range(20))
        assert len(parse_prompt_lines(text, 5)) == 5

    def test_strips_bullets(self):
        assert parse_prompt_lines("- a red dress\n- a blue coat", 5) == [
            "a red dress",
            "a blue coat",
        ]


class TestAuthorPromptBank:
    def test_150_request_yields_unique_capped_bank(self, tmp_path):
        lines = [f"outfit variation {i}" for i in range(160)] + ["outfit variation 0"]
        bank = author_prompt_bank(
            "outfit", 150, tmp_path / "bank.json", complete=fake_completion(lines)
        )
        assert len(bank["prompts"]) == 150
        assert len(set(bank["prompts"])) == 150

    def test_500_request_for_broad_concepts(self, tmp_path):
        lines = [f"object {i}" for i in range(500)]
        bank = author_prompt_bank(
            "object insertion", 500, tmp_path / "bank.json", complete=fake_completion(lines)
        )
        assert len(bank["prompts"]) == 500

    def test_bank_file_matches_engine_schema(self, tmp_path):
        out = tmp_path / "bank.json"
        author_prompt_bank(
            "fur", 10, out, complete=fake_completion([f"fur {i}" for i in range(10)])
        )
        loaded = load_prompt_bank(out)
        assert loaded["concept_name"] == "fur"
        assert loaded["rank_class"] == "custom"
        # the engine itself accepts the authored bank
        proc = subprocess.run(
            [
                sys.executable,
                "-c",
                "import json, sys; from conceptstitch import load_prompt_bank; "
                f"bank = load_prompt_bank({str(out)!r}); print(bank.n)",
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.strip() == "10"

    def test_missing_credential_is_structured_error(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("LLM_API_KEY", raising=False)
        monkeypatch.delenv("LLM_ENDPOINT", raising=False)
        code = main(
            [
                "author-bank",
                "--concept", "fur",
                "--count", "10",
                "--out", str(tmp_path / "bank.json"),
                "--endpoint", "https://example.invalid/v1/chat/completions",
            ]
        )
        captured = capsys.readouterr()
        assert code != 0
        payload = json.loads(captured.err)
        assert payload["code"] == "authoring"
        assert "credential" in payload["message"]

    def test_empty_model_answer_is_error(self, tmp_path):
        with pytest.raises(AuthoringError):
            author_prompt_bank("fur", 5, tmp_path / "bank.json", complete=fake_completion([""]))
