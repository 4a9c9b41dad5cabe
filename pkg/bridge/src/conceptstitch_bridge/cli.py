"""Bridge CLI: encode-prompts, encode-images, generate, author-bank.

Thin wrappers around the encoder, generation, and authoring modules. All
failures exit nonzero with a single JSON error object on stderr, mirroring
the engine CLI's convention.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .authoring import AuthoringError, author_prompt_bank
from .config import DEFAULT_DIM, DEFAULT_MODEL, EncoderConfig
from .encoders import EncoderUnavailableError, load_encoder
from .generation import GenerationConfig, GenerationError, generate
from .validation import ValidationError, load_prompt_bank, validate_matrix_file, write_matrix_file


def _fail(code: str, message: str, exit_code: int = 1) -> int:
    print(json.dumps({"code": code, "message": message}, sort_keys=True), file=sys.stderr)
    return exit_code


def _encoder_flags(parser):
    parser.add_argument("--model", default=DEFAULT_MODEL, help="encoder model id")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--dim", type=int, default=DEFAULT_DIM, help="expected embedding dim")


def _cmd_encode_prompts(args) -> int:
    bank = load_prompt_bank(args.bank)
    prompts = list(dict.fromkeys(bank["prompts"]))
    config = EncoderConfig(
        model=args.model, device=args.device, batch_size=args.batch_size, dim=args.dim
    )
    encoder = load_encoder(config)
    rows = encoder.encode_texts(prompts)
    write_matrix_file(args.out, rows)
    validate_matrix_file(args.out, expect_rows=len(prompts), expect_dim=encoder.dim)
    print(
        json.dumps(
            {
                "out": str(args.out),
                "concept_name": bank["concept_name"],
                "rows": len(prompts),
                "dim": encoder.dim,
                "model": config.model,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_encode_images(args) -> int:
    config = EncoderConfig(
        model=args.model, device=args.device, batch_size=args.batch_size, dim=args.dim
    )
    encoder = load_encoder(config)
    rows = encoder.encode_images(args.images)
    write_matrix_file(args.out, rows)
    validate_matrix_file(args.out, expect_rows=len(args.images), expect_dim=encoder.dim)
    print(
        json.dumps(
            {
                "out": str(args.out),
                "rows": len(args.images),
                "dim": encoder.dim,
                "model": config.model,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_generate(args) -> int:
    config = GenerationConfig(
        backend=args.backend,
        expected_dim=args.dim,
        seed=args.seed,
        steps=args.steps,
        guidance=args.guidance,
    )
    out = generate(args.embedding, args.out, prompt=args.prompt, config=config)
    print(json.dumps({"out": str(out), "backend": config.backend, "seed": config.seed}, sort_keys=True))
    return 0


def _cmd_author_bank(args) -> int:
    bank = author_prompt_bank(
        args.concept,
        args.count,
        args.out,
        rank_class=args.rank_class,
        endpoint=args.endpoint,
        api_key=args.api_key,
        model=args.model,
    )
    print(
        json.dumps(
            {"out": str(args.out), "concept_name": args.concept, "prompts": len(bank["prompts"])},
            sort_keys=True,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conceptstitch-bridge",
        description="Encoders, authoring, and generation around the conceptstitch engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_texts = sub.add_parser("encode-prompts", help="encode a prompt bank to an (n, d) matrix")
    p_texts.add_argument("--bank", required=True, help="prompt-bank JSON file")
    p_texts.add_argument("--out", required=True, help="output NPY file")
    _encoder_flags(p_texts)
    p_texts.set_defaults(func=_cmd_encode_prompts, error_code="encoder")

    p_images = sub.add_parser("encode-images", help="encode image files to an (m, d) matrix")
    p_images.add_argument("--images", nargs="+", required=True, help="image paths, in order")
    p_images.add_argument("--out", required=True, help="output NPY file")
    _encoder_flags(p_images)
    p_images.set_defaults(func=_cmd_encode_images, error_code="encoder")

    p_gen = sub.add_parser("generate", help="generate an image from a composite embedding")
    p_gen.add_argument("--embedding", required=True, help="composite embedding file (d,)")
    p_gen.add_argument("--out", required=True, help="output image path")
    p_gen.add_argument("--prompt", default=None, help="optional joint text prompt")
    p_gen.add_argument("--backend", choices=["mock", "sdxl-ipadapter"], default="mock")
    p_gen.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--steps", type=int, default=30)
    p_gen.add_argument("--guidance", type=float, default=5.0)
    p_gen.set_defaults(func=_cmd_generate, error_code="generation")

    p_author = sub.add_parser("author-bank", help="author a prompt bank with an LLM")
    p_author.add_argument("--concept", required=True)
    p_author.add_argument("--count", type=int, default=150)
    p_author.add_argument("--rank-class", default="custom")
    p_author.add_argument("--out", required=True)
    p_author.add_argument("--endpoint", default=None, help="chat-completions URL (or LLM_ENDPOINT)")
    p_author.add_argument("--api-key", default=None, help="credential (or LLM_API_KEY)")
    p_author.add_argument("--model", default="gpt-4o")
    p_author.set_defaults(func=_cmd_author_bank, error_code="authoring")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, EncoderUnavailableError, GenerationError, AuthoringError) as exc:
        return _fail(args.error_code, str(exc))
    except OSError as exc:
        return _fail("io_error", str(exc))


if __name__ == "__main__":
    sys.exit(main())
