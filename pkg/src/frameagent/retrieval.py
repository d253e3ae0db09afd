"""Segment partition of unseen frames and similarity-based frame retrieval.

Queries are free-text descriptions of hoped-for frames; a text embedding
backend maps them into the same space as the stored frame embeddings, and the
frame with the highest cosine similarity inside the target segment wins.
Stored embeddings are unit-norm, so the dot product is the cosine.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._http import post_json
from .assets import VideoAssets
from .errors import BackendError
from .kernels import argmax_dot


@dataclass(frozen=True)
class Segment:
    """Span between two consecutive seen frames; candidates are the interior."""

    index: int
    start: int
    end: int

    @property
    def candidates(self) -> range:
        return range(self.start + 1, self.end)


@dataclass
class RetrievalPlan:
    items: list[tuple[int, str]] = field(default_factory=list)


@dataclass
class Observation:
    retrieved: list[tuple[int, str]] = field(default_factory=list)

    def frames(self) -> list[int]:
        return [frame for frame, _ in self.retrieved]


def partition_segments(seen: Sequence[int], length: int) -> list[Segment]:
    """Split the video between consecutive seen frames into 1-indexed segments.

    Segments whose interior is empty (adjacent seen frames) are kept in the
    partition so ids stay aligned with the seen list, but they offer no
    candidates.
    """
    if len(seen) < 2:
        raise ValueError(f"need at least 2 seen frames to partition, got {len(seen)}")
    prev = 0
    for frame in seen:
        if frame <= prev:
            raise ValueError("seen frames must be sorted and distinct")
        prev = frame
    if seen[0] < 1 or seen[-1] > length:
        raise ValueError(f"seen frames must lie within 1..{length}")
    return [
        Segment(index=i + 1, start=seen[i], end=seen[i + 1])
        for i in range(len(seen) - 1)
    ]


def retrieve_in_segment(
    assets: VideoAssets, segment: Segment, query_vec: np.ndarray
) -> int:
    """Frame index of the best-matching candidate inside one segment."""
    if not segment.candidates:
        raise ValueError(f"segment {segment.index} has no candidate frames")
    # rows are 0-based: candidate frames start+1..end-1 occupy rows start..end-2
    row = argmax_dot(assets.embeddings, query_vec, segment.start, segment.end - 1)
    return row + 1


def _retrieve_anywhere(
    assets: VideoAssets, segments: list[Segment], query_vec: np.ndarray
) -> int | None:
    """Best match across every candidate frame, ties to the lowest index."""
    best_frame = None
    best_score = -np.inf
    for segment in segments:
        if not segment.candidates:
            continue
        frame = retrieve_in_segment(assets, segment, query_vec)
        score = float(assets.embeddings[frame - 1].astype(np.float64) @ query_vec)
        if score > best_score:
            best_score = score
            best_frame = frame
    return best_frame


def execute_plan(
    assets: VideoAssets,
    plan: RetrievalPlan,
    seen: Sequence[int],
    embedder,
    whole_range: bool = False,
) -> Observation:
    """Run every plan item in order, dropping duplicate retrievals.

    With whole_range=True the segment ids are ignored and each query scans
    all unseen frames, which is how retrieval behaves when segment selection
    is turned off.
    """
    if not plan.items:
        return Observation([])
    vecs = embed_queries(embedder, [query for _, query in plan.items], assets.dim)
    segments = partition_segments(list(seen), assets.frame_count)
    by_index = {segment.index: segment for segment in segments}
    seen_set = set(seen)
    taken: set[int] = set()
    retrieved: list[tuple[int, str]] = []
    for (segment_id, query), vec in zip(plan.items, vecs):
        if whole_range:
            frame = _retrieve_anywhere(assets, segments, vec)
            if frame is None:
                continue
        else:
            segment = by_index.get(segment_id)
            if segment is None:
                raise ValueError(f"plan references unknown segment {segment_id}")
            if not segment.candidates:
                raise ValueError(f"plan references empty segment {segment_id}")
            frame = retrieve_in_segment(assets, segment, vec)
        if frame in seen_set or frame in taken:
            continue
        taken.add(frame)
        retrieved.append((frame, query))
    return Observation(retrieved)


def embed_queries(embedder, queries: list[str], dim: int) -> np.ndarray:
    """Embed query texts and renormalize, checking the dimension contract."""
    vecs = np.asarray(embedder.embed(queries), dtype=np.float64)
    if vecs.shape != (len(queries), dim):
        raise BackendError(
            f"query embeddings have shape {vecs.shape}, expected ({len(queries)}, {dim})"
        )
    norms = np.linalg.norm(vecs, axis=1)
    if np.any(norms == 0.0) or not np.all(np.isfinite(norms)):
        raise BackendError("query embedding with zero or non-finite norm")
    return vecs / norms[:, None]


class HashEmbedder:
    """Deterministic stand-in embedder: seeded hash of the text, unit norm."""

    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            digest = hashlib.sha256(f"{self.seed}:{text}".encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            vec = rng.standard_normal(self.dim)
            out[i] = vec / np.linalg.norm(vec)
        return out


class TableEmbedder:
    """Lookup embedder backed by a fixed text-to-vector table."""

    def __init__(self, table: dict[str, Sequence[float]]):
        self.table = dict(table)

    def embed(self, texts: list[str]) -> np.ndarray:
        rows = []
        for text in texts:
            if text not in self.table:
                raise BackendError(f"no embedding for query {text!r}")
            rows.append(np.asarray(self.table[text], dtype=np.float64))
        return np.stack(rows)


class HttpEmbedder:
    """Text embedding endpoint: POST {"input": [...]} -> {"embeddings": [[...]]}."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 0.5,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def embed(self, texts: list[str]) -> np.ndarray:
        body, _ = post_json(
            self.endpoint,
            {"input": list(texts)},
            timeout=self.timeout,
            retries=self.retries,
            backoff=self.backoff,
        )
        try:
            rows = body["embeddings"]
        except (KeyError, TypeError):
            raise BackendError(
                f"malformed embedding response from {self.endpoint}"
            ) from None
        if not isinstance(rows, list) or len(rows) != len(texts):
            raise BackendError(
                f"embedding endpoint returned {len(rows) if isinstance(rows, list) else 'no'} "
                f"rows for {len(texts)} inputs"
            )
        return np.asarray(rows, dtype=np.float64)
