"""One video in, one bundle directory out."""

from __future__ import annotations

import datetime
import os
from dataclasses import dataclass, field

from .caption import DEFAULT_PROMPT, caption_frames, get_captioner
from .embed import embed_frames, get_embedder
from .errors import PrepError
from .formats import write_caption_file, write_embedding_file, write_manifest
from .video import extract_frames

CAPTION_FILENAME = "captions.tsv"
EMBEDDING_FILENAME = "embeddings.faem"
MANIFEST_FILENAME = "manifest.json"


@dataclass
class PrepJob:
    video: str
    out_dir: str
    embed_model: str = "hash:512"
    caption_model: str = "stats"
    caption_prompt: str = DEFAULT_PROMPT
    fps: float = 1.0
    batch_size: int = 32
    device: str = "cpu"
    seed: int = 0

    def __post_init__(self):
        if self.fps != 1.0:
            raise PrepError("only 1 fps sampling is supported")
        if self.batch_size < 1:
            raise PrepError(f"batch size must be positive, got {self.batch_size}")


@dataclass
class PrepResult:
    out_dir: str
    frame_count: int
    embed_dim: int
    warnings: list[str] = field(default_factory=list)


def run_job(job: PrepJob) -> PrepResult:
    """Extract, embed, caption, and write the bundle plus its manifest."""
    warnings: list[str] = []
    frames, timestamps, info = extract_frames(job.video, fps=job.fps)

    embedder = get_embedder(
        job.embed_model,
        device=job.device,
        batch_size=job.batch_size,
        seed=job.seed,
    )
    rows = embed_frames(frames, embedder, batch_size=job.batch_size)

    captioner = get_captioner(
        job.caption_model, device=job.device, prompt=job.caption_prompt
    )
    captions = caption_frames(frames, captioner, warnings)

    os.makedirs(job.out_dir, exist_ok=True)
    write_embedding_file(os.path.join(job.out_dir, EMBEDDING_FILENAME), rows)
    write_caption_file(os.path.join(job.out_dir, CAPTION_FILENAME), captions)

    manifest = {
        "video": os.path.abspath(job.video),
        "video_id": os.path.basename(job.out_dir.rstrip("/")),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "duration_seconds": info.duration_seconds,
        "native_fps": info.native_fps,
        "fps": job.fps,
        "frame_count": len(frames),
        "timestamps": timestamps,
        "embed_model": job.embed_model,
        "embed_dim": int(rows.shape[1]),
        "caption_model": job.caption_model,
        "caption_prompt": job.caption_prompt,
        "seed": job.seed,
        # each model sees frames at whatever size the container decoded;
        # any resizing or normalization is the model's own default
        "preprocessing": "model default",
        "warnings": warnings,
    }
    write_manifest(os.path.join(job.out_dir, MANIFEST_FILENAME), manifest)

    return PrepResult(
        out_dir=job.out_dir,
        frame_count=len(frames),
        embed_dim=int(rows.shape[1]),
        warnings=warnings,
    )
