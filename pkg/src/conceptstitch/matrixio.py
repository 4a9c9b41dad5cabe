"""Bit-exact matrix and subspace-directory I/O.

On disk every matrix is an NPY version 1.0 file: little-endian 32-bit IEEE
floats, C order, shape (n, d) or (d,). That matches what encoders emit and
is trivial to parse from other languages. Core math upcasts to float64 on
read and truncates back to float32 on write. A JSON fallback reader exists
for tiny hand-written test fixtures.

Subspace builds land in a directory of basis.npy, sigma.npy, and
manifest.json rather than an archive, so builds diff cleanly. All writes go
through a temp file plus rename, and are byte-deterministic for identical
inputs.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np
from numpy.lib import format as npy_format

from .core import ConceptSubspace, SubspaceSource
from .errors import (
    ChecksumMismatchError,
    MatrixFormatError,
    NonFiniteInputError,
    OverwriteRefusedError,
)

BASIS_FILENAME = "basis.npy"
SIGMA_FILENAME = "sigma.npy"
MANIFEST_FILENAME = "manifest.json"


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def matrix_bytes(array) -> bytes:
    """Serialize an array to NPY 1.0 bytes as little-endian float32, C order."""
    array = np.asarray(array)
    if array.ndim not in (1, 2):
        raise MatrixFormatError(f"only 1-d or 2-d matrices are stored, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NonFiniteInputError("refusing to write NaN or Inf entries")
    data = np.ascontiguousarray(array, dtype="<f4")
    header = {"descr": "<f4", "fortran_order": False, "shape": data.shape}
    buffer = io.BytesIO()
    npy_format.write_array_header_1_0(buffer, header)
    buffer.write(data.tobytes(order="C"))
    return buffer.getvalue()


def write_matrix(path, array) -> None:
    """Atomically write an array as a float32 NPY 1.0 file."""
    atomic_write_bytes(Path(path), matrix_bytes(array))


def read_matrix(path) -> np.ndarray:
    """Read a matrix file, validating the container strictly.

    Accepts the canonical NPY layout, plus a JSON fallback (a 1-d or 2-d
    nested list) selected by a .json suffix. Returns float64.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        return _read_json_matrix(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc}") from exc
    return _parse_npy(raw, source=str(path))


def _read_json_matrix(path: Path) -> np.ndarray:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MatrixFormatError(f"cannot parse JSON matrix {path}: {exc}") from exc
    try:
        array = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MatrixFormatError(f"{path}: JSON payload is not a numeric matrix") from exc
    if array.ndim not in (1, 2):
        raise MatrixFormatError(f"{path}: expected a 1-d or 2-d matrix, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NonFiniteInputError(f"{path}: matrix contains NaN or Inf entries")
    return array


def _parse_npy(raw: bytes, *, source: str) -> np.ndarray:
    stream = io.BytesIO(raw)
    try:
        version = npy_format.read_magic(stream)
    except ValueError as exc:
        raise MatrixFormatError(f"{source}: not an NPY file ({exc})") from exc
    if version != (1, 0):
        raise MatrixFormatError(f"{source}: unsupported NPY version {version}, expected 1.0")
    try:
        shape, fortran_order, dtype = npy_format.read_array_header_1_0(stream)
    except ValueError as exc:
        raise MatrixFormatError(f"{source}: malformed NPY header ({exc})") from exc
    if dtype != np.dtype("<f4"):
        raise MatrixFormatError(f"{source}: dtype must be little-endian float32, got {dtype}")
    if fortran_order:
        raise MatrixFormatError(f"{source}: payload must be C order, not Fortran order")
    if len(shape) not in (1, 2):
        raise MatrixFormatError(f"{source}: expected a 1-d or 2-d matrix, got shape {shape}")
    payload = raw[stream.tell():]
    expected = int(np.prod(shape, dtype=np.int64)) * 4
    if len(payload) != expected:
        raise MatrixFormatError(
            f"{source}: header shape {shape} implies {expected} payload bytes, "
            f"file has {len(payload)}"
        )
    array = np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float64)
    if not np.all(np.isfinite(array)):
        raise NonFiniteInputError(f"{source}: matrix contains NaN or Inf entries")
    return array


def read_vector(path) -> np.ndarray:
    """Read a single embedding, accepting shape (d,) or a one-row (1, d)."""
    array = read_matrix(path)
    if array.ndim == 2:
        if array.shape[0] != 1:
            raise MatrixFormatError(
                f"{path}: expected a single embedding, got shape {array.shape}"
            )
        array = array[0]
    return array


def _sha256(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def write_subspace_dir(dirpath, subspace: ConceptSubspace, *, force: bool = False) -> Path:
    """Write basis.npy, sigma.npy, and manifest.json for a built subspace.

    Refuses to touch an existing directory unless force is set.
    """
    dirpath = Path(dirpath)
    if dirpath.exists():
        if not force:
            raise OverwriteRefusedError(
                f"{dirpath} already exists; pass force to overwrite"
            )
    else:
        dirpath.mkdir(parents=True)
    basis_bytes = matrix_bytes(subspace.basis)
    sigma_bytes = matrix_bytes(subspace.singular_values)
    manifest = {
        "concept_name": subspace.concept_name,
        "rank": subspace.rank,
        "source": subspace.source.value,
        "dim": subspace.dim,
        "files": {BASIS_FILENAME: _sha256(basis_bytes), SIGMA_FILENAME: _sha256(sigma_bytes)},
    }
    atomic_write_bytes(dirpath / BASIS_FILENAME, basis_bytes)
    atomic_write_bytes(dirpath / SIGMA_FILENAME, sigma_bytes)
    atomic_write_bytes(
        dirpath / MANIFEST_FILENAME,
        (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"),
    )
    return dirpath


def read_subspace_dir(dirpath) -> ConceptSubspace:
    """Load a subspace directory, verifying checksums and metadata."""
    dirpath = Path(dirpath)
    manifest_path = dirpath / MANIFEST_FILENAME
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MatrixFormatError(f"cannot read subspace manifest {manifest_path}: {exc}") from exc
    for field_name in ("concept_name", "rank", "source", "dim", "files"):
        if field_name not in manifest:
            raise MatrixFormatError(f"{manifest_path}: missing field '{field_name}'")
    for filename, pinned in manifest["files"].items():
        actual = _sha256((dirpath / filename).read_bytes())
        if actual != pinned:
            raise ChecksumMismatchError(
                f"{dirpath / filename}: checksum {actual} does not match pinned {pinned}"
            )
    basis = read_matrix(dirpath / BASIS_FILENAME)
    sigma = read_matrix(dirpath / SIGMA_FILENAME)
    if basis.ndim != 2 or basis.shape[0] != int(manifest["rank"]) or basis.shape[1] != int(manifest["dim"]):
        raise MatrixFormatError(
            f"{dirpath}: basis shape {basis.shape} disagrees with manifest "
            f"rank {manifest['rank']}, dim {manifest['dim']}"
        )
    return ConceptSubspace(
        basis=basis,
        singular_values=sigma,
        concept_name=manifest["concept_name"],
        source=SubspaceSource(manifest["source"]),
    )
