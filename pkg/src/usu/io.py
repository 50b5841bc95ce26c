"""Binary grid/label files, CSV interop and 16-bit PGM export.

Binary layout (all little-endian)::

    magic  "USUG"   4 bytes
    version u16     currently 1
    dtype   u16     0 = float64 grid, 1 = uint32 labels
    height  u32
    width   u32
    payload         height * width values, row-major
    [labels only]   u32 P, then P float64 segment scores

Every writer goes through a temporary file in the destination directory and
an atomic rename, so a failed write never leaves a partial file behind.
"""
from __future__ import annotations

import csv
import io
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .grid import SegmentPartition, as_grid

MAGIC = b"USUG"
VERSION = 1
FLOAT64 = 0
UINT32 = 1
_HEADER = struct.Struct("<4sHHII")
_COUNT = struct.Struct("<I")


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def atomic_write(path, data):
    """Write bytes to `path` via a sibling temp file and ``os.replace``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def grid_bytes(grid):
    grid = as_grid(grid)
    h, w = grid.shape
    return _HEADER.pack(MAGIC, VERSION, FLOAT64, h, w) + grid.astype("<f8").tobytes()


def labels_bytes(partition):
    labels = np.asarray(partition.labels)
    h, w = labels.shape
    scores = np.asarray(partition.scores, dtype="<f8")
    return (_HEADER.pack(MAGIC, VERSION, UINT32, h, w) + labels.astype("<u4").tobytes()
            + _COUNT.pack(len(scores)) + scores.tobytes())


def _parse_header(data, expected_tag):
    if len(data) < _HEADER.size:
        raise FormatError("file shorter than header")
    magic, version, tag, h, w = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if tag != expected_tag:
        raise FormatError(f"dtype tag {tag}, expected {expected_tag}")
    return h, w


def parse_grid(data):
    h, w = _parse_header(data, FLOAT64)
    if len(data) != _HEADER.size + 8 * h * w:
        raise FormatError(f"payload length {len(data) - _HEADER.size} != {8 * h * w}")
    return np.frombuffer(data, "<f8", h * w, _HEADER.size).reshape(h, w).astype(np.float64)


def parse_labels(data):
    """Decode a label file into a ``SegmentPartition`` (labels kept as stored)."""
    h, w = _parse_header(data, UINT32)
    at = _HEADER.size + 4 * h * w
    if len(data) < at + _COUNT.size:
        raise FormatError("label payload truncated")
    labels = np.frombuffer(data, "<u4", h * w, _HEADER.size).reshape(h, w).astype(np.int64)
    (count,) = _COUNT.unpack_from(data, at)
    at += _COUNT.size
    if len(data) != at + 8 * count:
        raise FormatError(f"score block length does not match P={count}")
    scores = np.frombuffer(data, "<f8", count, at).astype(np.float64)
    if labels.size and labels.max() >= count:
        raise FormatError(f"label {labels.max()} >= declared count {count}")
    return SegmentPartition(labels, scores)


def write_grid(path, grid):
    atomic_write(path, grid_bytes(grid))


def read_grid(path):
    return parse_grid(Path(path).read_bytes())


def write_labels(path, partition):
    atomic_write(path, labels_bytes(partition))


def read_labels(path):
    return parse_labels(Path(path).read_bytes())


# CSV: one row per grid row, values written with repr so they round-trip.
# Label CSVs carry an extra final row "scores,s0,s1,...".

def grid_csv(grid):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows([[repr(float(v)) for v in row] for row in as_grid(grid)])
    return buf.getvalue().encode()


def labels_csv(partition):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(np.asarray(partition.labels).tolist())
    writer.writerow(["scores"] + [repr(float(s)) for s in partition.scores])
    return buf.getvalue().encode()


def _csv_rows(path):
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh) if row]


def read_grid_csv(path):
    rows = _csv_rows(path)
    try:
        return as_grid(np.array([[float(v) for v in row] for row in rows]))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def read_labels_csv(path):
    rows = _csv_rows(path)
    if not rows or rows[-1][0] != "scores":
        raise FormatError(f"{path}: missing final 'scores' row")
    try:
        labels = np.array([[int(v) for v in row] for row in rows[:-1]], dtype=np.int64)
        scores = np.array([float(v) for v in rows[-1][1:]])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return SegmentPartition(labels, scores)


def pgm_bytes(grid):
    """16-bit binary PGM, min-max scaled; a constant grid maps to 0."""
    grid = as_grid(grid)
    lo, hi = grid.min(), grid.max()
    scaled = np.zeros(grid.shape) if hi == lo else (grid - lo) / (hi - lo)
    pixels = np.rint(scaled * 65535).astype(">u2")
    h, w = grid.shape
    return f"P5\n{w} {h}\n65535\n".encode() + pixels.tobytes()


def write_pgm(path, grid):
    atomic_write(path, pgm_bytes(grid))


def read_pgm(path):
    """Read a 16-bit binary PGM as written by `write_pgm` (no comments)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5" or parts[2] != b"65535":
        raise FormatError("not a 16-bit binary PGM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], ">u2", w * h).reshape(h, w)
