"""Encoder and generation configuration."""

from __future__ import annotations

from dataclasses import dataclass

# Encoder used by the ip-adapter_sdxl_vit-h conditioning stack; its image and
# text towers project into a shared 1024-dimensional space.
DEFAULT_MODEL = "laion/CLIP-ViT-H-14-laion2B-s32B-b79K"
DEFAULT_DIM = 1024

# Deterministic offline encoder for tests and pipeline dry runs; produces
# valid, unnormalized embedding files without any model weights.
OFFLINE_MODEL = "offline-stub"


@dataclass(frozen=True)
class EncoderConfig:
    model: str = DEFAULT_MODEL
    device: str = "cpu"
    batch_size: int = 16
    dim: int = DEFAULT_DIM

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
