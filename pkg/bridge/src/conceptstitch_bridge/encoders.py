"""Text and image encoders behind one small interface.

Two backends:

* a CLIP model loaded through transformers (the real path; needs weights on
  disk or a reachable hub). Embeddings are taken straight from the projection
  heads, unnormalized, matching what the conditioning stack consumes.
* a deterministic offline stub that derives each embedding from a hash of the
  input. It produces valid, unnormalized files of the right shape with zero
  dependencies, so pipelines and tests run without any model weights. It is
  not semantically meaningful.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .config import OFFLINE_MODEL, EncoderConfig


class EncoderUnavailableError(Exception):
    """The requested encoder backend cannot be loaded in this environment."""


class OfflineStubEncoder:
    """Hash-seeded random features; deterministic across runs and machines."""

    def __init__(self, config: EncoderConfig):
        self.config = config
        self.dim = config.dim

    def _vector(self, payload: bytes) -> np.ndarray:
        digest = hashlib.sha256(payload).digest()
        seed = np.frombuffer(digest, dtype=np.uint32)
        rng = np.random.default_rng(seed)
        # scale varies per input so row norms are visibly non-uniform
        scale = 0.5 + (digest[0] / 64.0)
        return (rng.standard_normal(self.dim) * scale).astype(np.float32)

    def encode_texts(self, texts) -> np.ndarray:
        return np.stack([self._vector(b"text:" + t.encode("utf-8")) for t in texts])

    def encode_images(self, paths) -> np.ndarray:
        rows = []
        for p in paths:
            try:
                payload = Path(p).read_bytes()
            except OSError as exc:
                raise EncoderUnavailableError(f"cannot read image {p}: {exc}") from exc
            rows.append(self._vector(b"image:" + payload))
        return np.stack(rows)


class ClipEncoder:
    """CLIP text and image towers via transformers; projections unnormalized."""

    def __init__(self, config: EncoderConfig):
        self.config = config
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderUnavailableError(
                f"transformers/torch not installed: {exc}"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(config.model)
            self._processor = CLIPProcessor.from_pretrained(config.model)
        except Exception as exc:
            raise EncoderUnavailableError(
                f"cannot load weights for {config.model}: {exc}"
            ) from exc
        self._torch = torch
        self._model.eval().to(config.device)
        self.dim = int(self._model.config.projection_dim)
        if self.dim != config.dim:
            raise EncoderUnavailableError(
                f"{config.model} projects to dim {self.dim}, config expects {config.dim}"
            )

    def _batched(self, items):
        size = self.config.batch_size
        for start in range(0, len(items), size):
            yield items[start : start + size]

    def encode_texts(self, texts) -> np.ndarray:
        torch = self._torch
        chunks = []
        with torch.no_grad():
            for batch in self._batched(list(texts)):
                inputs = self._processor(
                    text=batch, return_tensors="pt", padding=True, truncation=True
                ).to(self.config.device)
                features = self._model.get_text_features(**inputs)
                chunks.append(features.cpu().numpy().astype(np.float32))
        return np.concatenate(chunks, axis=0)

    def encode_images(self, paths) -> np.ndarray:
        from PIL import Image

        torch = self._torch
        chunks = []
        with torch.no_grad():
            for batch in self._batched(list(paths)):
                images = [Image.open(p).convert("RGB") for p in batch]
                inputs = self._processor(images=images, return_tensors="pt").to(
                    self.config.device
                )
                features = self._model.get_image_features(**inputs)
                chunks.append(features.cpu().numpy().astype(np.float32))
        return np.concatenate(chunks, axis=0)


def load_encoder(config: EncoderConfig):
    if config.model == OFFLINE_MODEL:
        return OfflineStubEncoder(config)
    return ClipEncoder(config)
