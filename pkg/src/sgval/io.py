"""On-disk formats.

Binary matrix files (features ``SGVF``, embeddings ``SGVW``)::

    offset  size  field
    0       4     magic, ASCII
    4       4     version, uint32 little-endian (always 1)
    8       8     rows, uint64 little-endian
    16      8     cols, uint64 little-endian
    24      4*rows*cols  float32 little-endian payload, row-major

Checkpoints use the same 24-byte header followed by a dimension block of
uint64 values and then the float32 payload:

* ``SGVM`` attribute projector: dims ``(M, D, Z)``; rows = M*Z, cols = D+1.
  Row ``m*Z + z`` holds ``weights[m, z, :]`` followed by ``bias[m, z]``.
* ``SGVC`` classifier: dims ``(C, D)``; rows = C, cols = D+1.
  Row ``c`` holds ``weights[c, :]`` followed by ``bias[c]``.

Readers reject short files, trailing bytes, foreign magic, unknown versions
and non-finite payloads.  Label matrices are CSV with a header row of class
names.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .classifier import MultiLabelClassifier
from .data import LabelMatrix
from .exceptions import (
    BadMagicError,
    DataFormatError,
    DimensionMismatchError,
    LabelRangeError,
    NonFiniteError,
    TruncatedFileError,
    VersionMismatchError,
)
from .val import AttributeProjector

FEATURES_MAGIC = b"SGVF"
EMBEDDINGS_MAGIC = b"SGVW"
PROJECTOR_MAGIC = b"SGVM"
CLASSIFIER_MAGIC = b"SGVC"
VERSION = 1

_HEADER = struct.Struct("<4sIQQ")
_F32 = np.dtype("<f4")


def _as_magic(magic) -> bytes:
    return magic.encode("ascii") if isinstance(magic, str) else bytes(magic)


def _write(path, magic, payload, dims=()):
    payload = np.asarray(payload)
    rows, cols = payload.shape
    if not np.all(np.isfinite(payload)):
        raise NonFiniteError("refusing to write non-finite values")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_as_magic(magic), VERSION, rows, cols))
        if dims:
            fh.write(struct.pack(f"<{len(dims)}Q", *dims))
        fh.write(np.ascontiguousarray(payload, dtype=_F32).tobytes())


def _read(path, expected_magic, n_dims=0):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedFileError(f"{path}: {len(data)} bytes is shorter than the header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    expected = _as_magic(expected_magic)
    if magic != expected:
        raise BadMagicError(expected.decode("ascii", "replace"), magic.decode("ascii", "replace"))
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    offset = _HEADER.size
    dims = ()
    if n_dims:
        end = offset + 8 * n_dims
        if len(data) < end:
            raise TruncatedFileError(f"{path}: missing dimension block")
        dims = struct.unpack_from(f"<{n_dims}Q", data, offset)
        offset = end
    return data, offset, rows, cols, dims


def _payload(path, data, offset, rows, cols):
    need = rows * cols * _F32.itemsize
    have = len(data) - offset
    if have < need:
        raise TruncatedFileError(f"{path}: payload has {have} bytes, header promises {need}")
    if have > need:
        raise DataFormatError(f"{path}: {have - need} unexpected trailing bytes")
    out = np.frombuffer(data, dtype=_F32, count=rows * cols, offset=offset).reshape(rows, cols)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"{path}: payload contains non-finite values")
    return out.astype(np.float32)


def write_matrix(path, matrix, magic=FEATURES_MAGIC):
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D matrix, got shape {matrix.shape}")
    _write(path, magic, matrix)


def read_matrix(path, expected_magic=FEATURES_MAGIC) -> np.ndarray:
    """Matrix as stored (float32)."""
    data, offset, rows, cols, _ = _read(path, expected_magic)
    return _payload(path, data, offset, rows, cols)


def save_projector(path, projector: AttributeProjector):
    m, z, d = projector.weights.shape
    flat = np.concatenate(
        [projector.weights.reshape(m * z, d), projector.bias.reshape(m * z, 1)], axis=1
    )
    _write(path, PROJECTOR_MAGIC, flat, dims=(m, d, z))


def load_projector(path) -> AttributeProjector:
    data, offset, rows, cols, (m, d, z) = _read(path, PROJECTOR_MAGIC, n_dims=3)
    if m < 1 or z < 1 or d < 1:
        raise DataFormatError(f"{path}: degenerate dimensions M={m}, D={d}, Z={z}")
    if (rows, cols) != (m * z, d + 1):
        raise DimensionMismatchError(
            f"{path}: header {rows}x{cols} disagrees with dims M={m}, D={d}, Z={z}"
        )
    flat = _payload(path, data, offset, rows, cols).astype(np.float64)
    return AttributeProjector(flat[:, :d].reshape(m, z, d), flat[:, d].reshape(m, z))


def save_classifier(path, classifier: MultiLabelClassifier):
    c, d = classifier.weights.shape
    flat = np.concatenate([classifier.weights, classifier.bias[:, None]], axis=1)
    _write(path, CLASSIFIER_MAGIC, flat, dims=(c, d))


def load_classifier(path) -> MultiLabelClassifier:
    data, offset, rows, cols, (c, d) = _read(path, CLASSIFIER_MAGIC, n_dims=2)
    if c < 1 or d < 1:
        raise DataFormatError(f"{path}: degenerate dimensions C={c}, D={d}")
    if (rows, cols) != (c, d + 1):
        raise DimensionMismatchError(f"{path}: header {rows}x{cols} disagrees with dims C={c}, D={d}")
    flat = _payload(path, data, offset, rows, cols).astype(np.float64)
    return MultiLabelClassifier(flat[:, :d], flat[:, d])


def format_value(v) -> str:
    v = float(v)
    if v == 0.0 or v == 1.0:
        return str(int(v))
    return repr(v)


def write_labels_csv(path, labels, class_names):
    values = labels.values if isinstance(labels, LabelMatrix) else np.asarray(labels)
    if len(class_names) != values.shape[1]:
        raise DimensionMismatchError(f"{len(class_names)} names for {values.shape[1]} columns")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(class_names)
        for row in values:
            w.writerow([format_value(v) for v in row])


def read_labels_csv(path):
    """Return ``(LabelMatrix, class_names)``; kind is binary iff all entries are 0/1."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty label file")
    names = [name.strip() for name in rows[0]]
    body = [r for r in rows[1:] if r]
    if not body:
        raise DataFormatError(f"{path}: no label rows")
    values = np.empty((len(body), len(names)))
    for i, r in enumerate(body, start=2):
        if len(r) != len(names):
            raise DataFormatError(f"{path}:{i}: expected {len(names)} fields, got {len(r)}")
        try:
            values[i - 2] = [float(x) for x in r]
        except ValueError as err:
            raise DataFormatError(f"{path}:{i}: {err}") from None
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{path}: non-finite label value")
    if np.any(values < 0) or np.any(values > 1):
        raise LabelRangeError(f"{path}: label values must lie in [0, 1]")
    return LabelMatrix.infer(values), names


def write_index_csv(path, indices, header="sample_index"):
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for i in indices:
            fh.write(f"{int(i)}\n")


def read_index_csv(path) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty index file")
    try:
        return np.array([int(x) for x in lines[1:]], dtype=np.int64)
    except ValueError as err:
        raise DataFormatError(f"{path}: {err}") from None


def write_flags_csv(path, clean_mask, ranked=None):
    """``sample_index,clean_flag`` rows, optionally followed by ranked class columns."""
    clean_mask = np.asarray(clean_mask, dtype=bool)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["sample_index", "clean_flag"]
        if ranked is not None:
            header += [f"rank_{r + 1}" for r in range(ranked.shape[1])]
        w.writerow(header)
        for i, flag in enumerate(clean_mask):
            row = [i, int(flag)]
            if ranked is not None:
                row += [int(c) for c in ranked[i]]
            w.writerow(row)


def read_flags_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["sample_index", "clean_flag"]:
        raise DataFormatError(f"{path}: not a clean-flag file")
    flags = np.array([int(r[1]) for r in rows[1:] if r], dtype=np.int64)
    if not np.all((flags == 0) | (flags == 1)):
        raise DataFormatError(f"{path}: clean_flag must be 0 or 1")
    return flags.astype(bool)


def write_neighbors_csv(path, neighbors: dict):
    with open(path, "w", newline="") as fh:
        fh.write("query_index,neighbors\n")
        for q in sorted(neighbors):
            fh.write(f"{q},{' '.join(str(int(j)) for j in neighbors[q])}\n")
