"""Ecosystem boundary for the conceptstitch engine: encoders, prompt-bank
authoring, and generation. Composition math stays in the engine; the bridge
only reads and writes its file formats."""

from .authoring import author_prompt_bank
from .config import DEFAULT_DIM, DEFAULT_MODEL, OFFLINE_MODEL, EncoderConfig
from .encoders import EncoderUnavailableError, load_encoder
from .generation import GenerationConfig, generate
from .validation import ValidationError, load_prompt_bank, validate_matrix_file, write_matrix_file

__version__ = "0.1.0"
