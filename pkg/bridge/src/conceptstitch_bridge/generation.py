"""Feed composite embeddings into a generation backend.

The real backend conditions an SDXL pipeline through its image-prompt adapter
on the composite embedding (plus an optional text prompt). It needs model
weights and the diffusion stack installed, and fails loudly otherwise.

The mock backend exists so the rest of the pipeline can be exercised without
weights: it renders a small deterministic image whose pixels are a pure
function of the embedding and the seed. Identical inputs give identical
bytes; different embeddings give different images.

Every run writes a sidecar manifest recording the backend, seed, and
settings, so any output can be reproduced exactly.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import ValidationError, validate_matrix_file


class GenerationError(Exception):
    """Generation failed: bad inputs, missing weights, or backend faults."""


@dataclass(frozen=True)
class GenerationConfig:
    backend: str = "mock"  # "mock" or "sdxl-ipadapter"
    model: str = "stabilityai/stable-diffusion-xl-base-1.0"
    adapter: str = "ip-adapter_sdxl_vit-h"
    expected_dim: int = 1024
    seed: int = 0
    steps: int = 30
    guidance: float = 5.0
    image_size: int = 64  # mock backend output size


def _load_embedding(path, expected_dim) -> np.ndarray:
    try:
        shape = validate_matrix_file(path)
    except ValidationError as exc:
        raise GenerationError(str(exc)) from exc
    raw = np.load(path)
    values = raw[0] if raw.ndim == 2 and raw.shape[0] == 1 else raw
    if values.ndim != 1:
        raise GenerationError(f"{path}: expected a single embedding, got shape {shape}")
    if values.shape[0] != expected_dim:
        raise GenerationError(
            f"{path}: embedding dim {values.shape[0]} does not match the "
            f"adapter's conditioning dim {expected_dim}"
        )
    return values.astype(np.float64)


def _render_mock(values: np.ndarray, config: GenerationConfig) -> bytes:
    from PIL import Image

    digest = hashlib.sha256(values.astype("<f8").tobytes()).digest()
    seed_material = np.frombuffer(digest, dtype=np.uint32).tolist() + [config.seed]
    rng = np.random.default_rng(seed_material)
    size = config.image_size
    pixels = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
    image = Image.fromarray(pixels, mode="RGB")
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return buffer.getvalue()


def _render_sdxl(values, prompt, config: GenerationConfig) -> bytes:
    try:
        import torch
        from diffusers import StableDiffusionXLPipeline
    except ImportError as exc:
        raise GenerationError(
            f"the sdxl-ipadapter backend needs torch and diffusers: {exc}"
        ) from exc
    try:
        pipeline = StableDiffusionXLPipeline.from_pretrained(config.model)
        pipeline.load_ip_adapter(
            "h94/IP-Adapter", subfolder="sdxl_models", weight_name=f"{config.adapter}.bin"
        )
    except Exception as exc:
        raise GenerationError(f"cannot load generation weights: {exc}") from exc
    embedding = torch.tensor(values, dtype=torch.float32)[None, None, :]
    negative = torch.zeros_like(embedding)
    generator = torch.Generator().manual_seed(config.seed)
    result = pipeline(
        prompt=prompt or "",
        ip_adapter_image_embeds=[torch.cat([negative, embedding])],
        num_inference_steps=config.steps,
        guidance_scale=config.guidance,
        generator=generator,
    )
    buffer = io.BytesIO()
    result.images[0].save(buffer, format="PNG")
    return buffer.getvalue()


def generate(embedding_path, out_path, *, prompt=None, config=None) -> Path:
    """Generate one image from a composite embedding file.

    Writes the image and a .json sidecar with the exact settings used.
    """
    config = config or GenerationConfig()
    out_path = Path(out_path)
    values = _load_embedding(embedding_path, config.expected_dim)
    if config.backend == "mock":
        payload = _render_mock(values, config)
    elif config.backend == "sdxl-ipadapter":
        payload = _render_sdxl(values, prompt, config)
    else:
        raise GenerationError(f"unknown backend {config.backend!r}")
    out_path.write_bytes(payload)
    sidecar = {
        "backend": config.backend,
        "model": config.model,
        "adapter": config.adapter,
        "seed": config.seed,
        "steps": config.steps,
        "guidance": config.guidance,
        "text_prompt": prompt,
        "embedding_path": str(embedding_path),
        "embedding_sha256": hashlib.sha256(Path(embedding_path).read_bytes()).hexdigest(),
        "image_sha256": hashlib.sha256(payload).hexdigest(),
    }
    out_path.with_suffix(out_path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out_path
