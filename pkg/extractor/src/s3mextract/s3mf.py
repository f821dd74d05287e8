"""Writer for the S3MF feature-file format and its JSON-lines manifest.

Independent implementation of the documented layout so files written here
are a true cross-check for any reader:

    magic "S3MF", version u16=1, dtype u8=0 (f32 LE), reserved u8,
    rows u64, cols u32, frame-shift numerator/denominator u32/u32,
    then rows*cols float32 row-major. All integers little-endian.
"""

from __future__ import annotations

import json
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4sHBBQIII")


def write_s3mf(path, data: np.ndarray, frame_shift_s: float) -> None:
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError(f"feature matrix must be 2-D and non-empty, got {data.shape}")
    if not np.isfinite(data).all():
        raise ValueError("refusing to write non-finite features")
    shift = Fraction(frame_shift_s).limit_denominator(1_000_000)
    header = _HEADER.pack(
        b"S3MF", 1, 0, 0, data.shape[0], data.shape[1],
        shift.numerator, shift.denominator,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def write_manifest(path, records: list[dict]) -> None:
    """JSON-lines manifest; utterance_id/layer/path plus provenance keys."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def manifest_record(utterance_id: str, layer: int, rel_path: str, **extra) -> dict:
    rec = {"utterance_id": utterance_id, "layer": layer, "path": str(Path(rel_path))}
    rec.update(extra)
    return rec
