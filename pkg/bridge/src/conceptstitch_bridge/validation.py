"""Shared validation for every file the bridge writes.

The engine consumes NPY version 1.0 files holding little-endian float32 in C
order, shape (n, d) or (d,), with a payload that matches the header exactly.
Each bridge write path runs its output through validate_matrix_file before
declaring success, so a malformed file can never leave the bridge.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
from numpy.lib import format as npy_format


class ValidationError(Exception):
    """A bridge output failed the engine's format contract."""


def validate_matrix_file(path, *, expect_rows=None, expect_dim=None) -> tuple:
    """Check one matrix file against the engine's format spec.

    Returns the validated shape. expect_rows applies to 2-d files only;
    expect_dim applies to the final axis either way.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    stream = io.BytesIO(raw)
    try:
        version = npy_format.read_magic(stream)
    except ValueError as exc:
        raise ValidationError(f"{path}: not an NPY file ({exc})") from exc
    if version != (1, 0):
        raise ValidationError(f"{path}: NPY version {version}, engine requires 1.0")
    shape, fortran_order, dtype = npy_format.read_array_header_1_0(stream)
    if dtype != np.dtype("<f4"):
        raise ValidationError(f"{path}: dtype {dtype}, engine requires little-endian float32")
    if fortran_order:
        raise ValidationError(f"{path}: Fortran order payload, engine requires C order")
    if len(shape) not in (1, 2):
        raise ValidationError(f"{path}: shape {shape}, engine stores only 1-d or 2-d")
    payload = len(raw) - stream.tell()
    expected = int(np.prod(shape, dtype=np.int64)) * 4
    if payload != expected:
        raise ValidationError(
            f"{path}: header shape {shape} implies {expected} payload bytes, file has {payload}"
        )
    if expect_rows is not None and (len(shape) != 2 or shape[0] != expect_rows):
        raise ValidationError(f"{path}: expected {expect_rows} rows, header says {shape}")
    if expect_dim is not None and shape[-1] != expect_dim:
        raise ValidationError(f"{path}: expected dim {expect_dim}, header says {shape}")
    return shape


def load_prompt_bank(path) -> dict:
    """Parse a prompt-bank JSON file per the engine's schema."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot parse prompt bank {path}: {exc}") from exc
    for field in ("concept_name", "rank_class", "prompts"):
        if field not in data:
            raise ValidationError(f"{path}: missing required field '{field}'")
    prompts = data["prompts"]
    if not isinstance(prompts, list) or not prompts:
        raise ValidationError(f"{path}: 'prompts' must be a non-empty list")
    if not all(isinstance(p, str) and p for p in prompts):
        raise ValidationError(f"{path}: prompts must be non-empty strings")
    return data


def write_matrix_file(path, array) -> None:
    """Write float32 NPY 1.0 and immediately validate the bytes on disk."""
    path = Path(path)
    array = np.ascontiguousarray(array, dtype="<f4")
    if array.ndim not in (1, 2):
        raise ValidationError(f"refusing to write {array.ndim}-d array to {path}")
    if not np.all(np.isfinite(array)):
        raise ValidationError(f"refusing to write non-finite values to {path}")
    with open(path, "wb") as handle:
        np.save(handle, array, allow_pickle=False)
    validate_matrix_file(path, expect_dim=array.shape[-1])
