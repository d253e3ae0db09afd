"""Frame embedding backends.

A model spec is "<kind>:<arg>". Built in:

  hash:<dim>   deterministic unit vector derived from the frame's pixel
               bytes; identical frames embed identically. No model, no
               network, reproducible everywhere. Default for tests and
               offline runs.
  st:<id>      image embedding through sentence-transformers, for real
               contrastive image-text checkpoints. Loaded lazily.

Every backend returns float32 rows normalized to unit length within 1e-5.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import PrepError


class HashingImageEmbedder:
    """Pixel-content hash expanded to a seeded gaussian direction."""

    def __init__(self, dim: int, seed: int = 0):
        if dim < 2:
            raise PrepError(f"embedding dimension must be >= 2, got {dim}")
        self.dim = dim
        self.seed = seed

    def embed_images(self, frames: list[np.ndarray]) -> np.ndarray:
        rows = np.empty((len(frames), self.dim), dtype=np.float32)
        for i, frame in enumerate(frames):
            digest = hashlib.sha256()
            digest.update(str(self.seed).encode())
            digest.update(str(frame.shape).encode())
            digest.update(np.ascontiguousarray(frame).tobytes())
            rng = np.random.default_rng(
                int.from_bytes(digest.digest()[:8], "little")
            )
            vec = rng.standard_normal(self.dim)
            rows[i] = (vec / np.linalg.norm(vec)).astype(np.float32)
        return rows


class SentenceTransformerEmbedder:
    """Real image encoder; import deferred so the toy path needs no extras."""

    def __init__(self, model_id: str, device: str = "cpu", batch_size: int = 32):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise PrepError(
                "sentence-transformers is not installed; use an 'st:' model "
                "spec only where it is available"
            ) from exc
        try:
            self._model = SentenceTransformer(model_id, device=device)
        except Exception as exc:
            raise PrepError(f"cannot load embedding model {model_id}: {exc}") from exc
        self._batch_size = batch_size
        probe = self._model.encode(["probe"], convert_to_numpy=True)
        self.dim = int(probe.shape[1])

    def embed_images(self, frames: list[np.ndarray]) -> np.ndarray:
        try:
            from PIL import Image
        except ImportError as exc:
            raise PrepError("Pillow is required for 'st:' embedding") from exc
        images = [Image.fromarray(frame[:, :, ::-1]) for frame in frames]
        rows = self._model.encode(
            images, batch_size=self._batch_size, convert_to_numpy=True
        ).astype(np.float64)
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        if not np.all(norms > 0):
            raise PrepError("embedding model produced a zero vector")
        return (rows / norms).astype(np.float32)


def get_embedder(spec: str, device: str = "cpu", batch_size: int = 32, seed: int = 0):
    kind, _, arg = spec.partition(":")
    if kind == "hash":
        try:
            dim = int(arg)
        except ValueError:
            raise PrepError(f"hash embedder needs a dimension, got {spec!r}") from None
        return HashingImageEmbedder(dim, seed=seed)
    if kind == "st":
        if not arg:
            raise PrepError("st embedder needs a model id, e.g. st:clip-ViT-B-32")
        return SentenceTransformerEmbedder(arg, device=device, batch_size=batch_size)
    raise PrepError(f"unknown embedding model spec {spec!r}")


def embed_frames(frames: list[np.ndarray], embedder, batch_size: int = 32) -> np.ndarray:
    if not frames:
        raise PrepError("no frames to embed")
    chunks = [
        embedder.embed_images(frames[i:i + batch_size])
        for i in range(0, len(frames), batch_size)
    ]
    rows = np.vstack(chunks).astype(np.float32)
    norms = np.sqrt((rows.astype(np.float64) ** 2).sum(axis=1))
    if np.any(np.abs(norms - 1.0) > 1e-5):
        raise PrepError("embedder returned rows that are not unit length")
    return rows
