"""Author prompt banks with an LLM.

Queries a chat-completions endpoint for short texts spanning a concept's
attribute space, deduplicates the answers, and writes a bank file in the
engine's schema. The shipped template works well in practice but is just a
starting point; banks are meant to be reviewed by a human before use.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from pathlib import Path

# One line per variation keeps parsing trivial and discourages rambling.
PROMPT_TEMPLATE = (
    "List {count} short, distinct image captions that together span the full "
    "attribute space of the concept \"{concept}\". Each caption describes one "
    "concrete instance or variation of the concept and nothing else. "
    "Return exactly one caption per line with no numbering."
)


class AuthoringError(Exception):
    """Prompt-bank authoring failed: configuration or endpoint trouble."""


def _http_complete(endpoint: str, api_key: str, model: str, prompt: str) -> str:
    payload = json.dumps(
        {"model": model, "messages": [{"role": "user", "content": prompt}]}
    ).encode("utf-8")
    request = urllib.request.Request(
        endpoint,
        data=payload,
        headers={
            "Content-Type": "application/json",
            "Authorization": f"Bearer {api_key}",
        },
    )
    try:
        with urllib.request.urlopen(request, timeout=120) as response:
            body = json.loads(response.read().decode("utf-8"))
    except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
        raise AuthoringError(f"LLM endpoint failure: {exc}") from exc
    try:
        return body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise AuthoringError(f"unexpected endpoint response shape: {exc}") from exc


def parse_prompt_lines(text: str, count: int) -> list:
    """Non-empty lines, deduplicated in order, capped at `count`."""
    lines = [line.strip().strip("-").strip() for line in text.splitlines()]
    unique = list(dict.fromkeys(line for line in lines if line))
    return unique[:count]


def author_prompt_bank(
    concept: str,
    count: int,
    out_path,
    *,
    rank_class: str = "custom",
    endpoint: str = None,
    api_key: str = None,
    model: str = "gpt-4o",
    template: str = PROMPT_TEMPLATE,
    complete=None,
) -> dict:
    """Write a bank JSON for `concept` with up to `count` unique prompts.

    `complete` injects an alternative completion function (used in tests); by
    default the configured HTTP endpoint is called. Requires an API key via
    argument or LLM_API_KEY unless `complete` is given.
    """
    if count < 1:
        raise AuthoringError(f"count must be >= 1, got {count}")
    if complete is None:
        endpoint = endpoint or os.environ.get("LLM_ENDPOINT")
        api_key = api_key or os.environ.get("LLM_API_KEY")
        if not endpoint:
            raise AuthoringError("no LLM endpoint configured (flag or LLM_ENDPOINT)")
        if not api_key:
            raise AuthoringError("missing API credential (flag or LLM_API_KEY)")

        def complete(prompt):
            return _http_complete(endpoint, api_key, model, prompt)

    text = complete(template.format(count=count, concept=concept))
    prompts = parse_prompt_lines(text, count)
    if not prompts:
        raise AuthoringError("the model returned no usable prompt lines")
    bank = {
        "concept_name": concept,
        "rank_class": rank_class,
        "prompts": prompts,
        "provenance": f"authored by {model} via bridge template",
    }
    Path(out_path).write_text(
        json.dumps(bank, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return bank
