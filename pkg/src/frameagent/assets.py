"""Precomputed per-video bundles: frame captions plus unit-norm frame embeddings.

A bundle is a directory holding two files:

- ``captions.tsv``: UTF-8 lines of ``frame_index<TAB>caption`` with indices
  strictly increasing from 1. The caption is everything after the first tab.
- ``embeddings.faem``: magic ``FAEM``, then three little-endian u32 fields
  (format version, frame count, dimension), then frame_count rows of
  dimension float32 values, row-major little-endian.

Frame indices are 1-based throughout; row ``k - 1`` of the embedding matrix
belongs to frame ``k``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kernels import row_norms

EMBEDDING_MAGIC = b"FAEM"
EMBEDDING_VERSION = 1
NORM_TOLERANCE = 1e-5

CAPTION_FILENAME = "captions.tsv"
EMBEDDING_FILENAME = "embeddings.faem"

_HEADER = struct.Struct("<4sIII")


class AssetError(ValueError):
    """A bundle violates the on-disk contract."""


@dataclass
class VideoAssets:
    video_id: str
    frame_count: int
    dim: int
    captions: dict[int, str]
    embeddings: np.ndarray

    def caption(self, frame: int) -> str:
        self._check_frame(frame)
        return self.captions[frame]

    def embedding(self, frame: int) -> np.ndarray:
        self._check_frame(frame)
        return self.embeddings[frame - 1]

    def _check_frame(self, frame: int) -> None:
        if not 1 <= frame <= self.frame_count:
            raise AssetError(
                f"frame index {frame} outside 1..{self.frame_count}"
            )


def read_captions(path: Path) -> dict[int, str]:
    """Parse a caption file, enforcing strictly increasing 1-based indices."""
    text = path.read_text(encoding="utf-8")
    captions: dict[int, str] = {}
    prev = 0
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, line in enumerate(lines, start=1):
        if "\t" not in line:
            raise AssetError(f"caption line {lineno}: missing tab separator")
        head, caption = line.split("\t", 1)
        try:
            index = int(head)
        except ValueError:
            raise AssetError(f"caption line {lineno}: bad frame index {head!r}") from None
        if index < 1:
            raise AssetError(f"caption line {lineno}: frame index must be >= 1")
        if index <= prev:
            raise AssetError(
                f"caption line {lineno}: indices not strictly increasing "
                f"({index} after {prev})"
            )
        captions[index] = caption
        prev = index
    return captions


def write_captions(path: Path, captions: dict[int, str]) -> None:
    lines = []
    for index in sorted(captions):
        caption = captions[index]
        if "\n" in caption or "\r" in caption:
            raise AssetError(f"caption for frame {index} contains a newline")
        lines.append(f"{index}\t{caption}\n")
    path.write_text("".join(lines), encoding="utf-8")


def read_embeddings(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise AssetError(f"embedding file too short ({len(raw)} bytes)")
    magic, version, count, dim = _HEADER.unpack_from(raw)
    if magic != EMBEDDING_MAGIC:
        raise AssetError(f"bad embedding magic {magic!r}")
    if version != EMBEDDING_VERSION:
        raise AssetError(f"unsupported embedding format version {version}")
    expected = _HEADER.size + count * dim * 4
    if len(raw) != expected:
        raise AssetError(
            f"embedding payload size mismatch: expected {expected} bytes, got {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return np.ascontiguousarray(data.reshape(count, dim))


def write_embeddings(path: Path, embeddings: np.ndarray) -> None:
    if embeddings.ndim != 2:
        raise AssetError(f"embedding matrix must be 2-D, got shape {embeddings.shape}")
    count, dim = embeddings.shape
    header = _HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, count, dim)
    body = np.ascontiguousarray(embeddings, dtype="<f4").tobytes()
    path.write_bytes(header + body)


def read_assets(path: str | Path, video_id: str | None = None) -> VideoAssets:
    """Read a bundle directory without checking the semantic invariants."""
    root = Path(path)
    caption_path = root / CAPTION_FILENAME
    embedding_path = root / EMBEDDING_FILENAME
    if not embedding_path.is_file():
        raise AssetError(f"missing embedding file: {embedding_path}")
    if not caption_path.is_file():
        raise AssetError(f"missing caption file: {caption_path}")
    embeddings = read_embeddings(embedding_path)
    captions = read_captions(caption_path)
    return VideoAssets(
        video_id=video_id or root.name,
        frame_count=embeddings.shape[0],
        dim=embeddings.shape[1],
        captions=captions,
        embeddings=embeddings,
    )


def validate_assets(assets: VideoAssets) -> list[str]:
    """Return a report of every invariant violation, empty when the bundle is clean."""
    report: list[str] = []
    count, dim = assets.frame_count, assets.dim
    if count < 1:
        report.append("frame count must be positive")
    if dim < 1:
        report.append("embedding dimension must be positive")
    if assets.embeddings.shape != (count, dim):
        report.append(
            f"embedding matrix shape {assets.embeddings.shape} != ({count}, {dim})"
        )
        return report
    if assets.embeddings.dtype != np.float32:
        report.append(f"embedding dtype must be float32, got {assets.embeddings.dtype}")
    for frame in range(1, count + 1):
        if frame not in assets.captions:
            report.append(f"caption gap at frame {frame}")
    for frame in sorted(assets.captions):
        if not 1 <= frame <= count:
            report.append(f"caption for frame {frame} outside 1..{count}")
    if count >= 1 and dim >= 1:
        finite = np.isfinite(assets.embeddings).all(axis=1)
        for row in np.flatnonzero(~finite):
            report.append(f"non-finite embedding at frame {int(row) + 1}")
        norms = row_norms(assets.embeddings)
        bad = np.abs(norms - 1.0) > NORM_TOLERANCE
        for row in np.flatnonzero(bad & finite):
            report.append(f"norm violation at frame {int(row) + 1}")
    return report


def load_assets(path: str | Path, video_id: str | None = None) -> VideoAssets:
    """Read and validate a bundle; raises AssetError naming every violation."""
    assets = read_assets(path, video_id=video_id)
    report = validate_assets(assets)
    if report:
        raise AssetError("; ".join(report))
    return assets


def write_assets(path: str | Path, assets: VideoAssets) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    write_captions(root / CAPTION_FILENAME, assets.captions)
    write_embeddings(root / EMBEDDING_FILENAME, assets.embeddings)
