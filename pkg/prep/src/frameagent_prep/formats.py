"""Writers for the bundle files the answering engine consumes.

These are implemented from the published formats on purpose: this package
must stay installable without the engine. The engine's validate command is
the authority on whether a produced bundle is well formed.

embeddings.faem, little-endian: magic "FAEM", u32 version (1), u32 frame
count, u32 dimension, then count*dim float32 row-major.
captions.tsv: "<index>\t<caption>" per line, indices strictly increasing
from 1, captions free of newlines.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import PrepError

EMBEDDING_MAGIC = b"FAEM"
EMBEDDING_VERSION = 1
NORM_TOLERANCE = 1e-5

_HEADER = struct.Struct("<4sIII")


def write_embedding_file(path: str | Path, rows: np.ndarray) -> None:
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise PrepError(f"embedding matrix must be non-empty 2-D, got shape {rows.shape}")
    rows = np.ascontiguousarray(rows, dtype="<f4")
    norms = np.sqrt((rows.astype(np.float64) ** 2).sum(axis=1))
    bad = np.nonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)[0]
    if bad.size:
        raise PrepError(f"embedding row {bad[0] + 1} has norm {norms[bad[0]]:.8f}")
    count, dim = rows.shape
    header = _HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, count, dim)
    Path(path).write_bytes(header + rows.tobytes())


def write_caption_file(path: str | Path, captions: list[str]) -> None:
    lines = []
    for i, caption in enumerate(captions, start=1):
        if not caption.strip():
            raise PrepError(f"caption {i} is empty")
        if "\n" in caption or "\r" in caption:
            raise PrepError(f"caption {i} contains a newline")
        lines.append(f"{i}\t{caption}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def write_manifest(path: str | Path, manifest: dict) -> None:
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")
