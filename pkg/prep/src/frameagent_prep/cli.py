"""Command line front end: ``prep --video clip.mp4 --out bundles/clip``."""

from __future__ import annotations

import argparse
import sys

from .caption import DEFAULT_PROMPT
from .errors import PrepError
from .job import PrepJob, run_job


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prep",
        description="Turn one video into a caption and embedding bundle.",
    )
    parser.add_argument("--video", required=True, help="input video file")
    parser.add_argument("--out", required=True, help="bundle directory to create")
    parser.add_argument(
        "--embed-model",
        default="hash:512",
        help="embedding backend spec (default: hash:512)",
    )
    parser.add_argument(
        "--caption-model",
        default="stats",
        help="caption backend spec (default: stats)",
    )
    parser.add_argument(
        "--caption-prompt",
        default=DEFAULT_PROMPT,
        help="instruction given to promptable caption models",
    )
    parser.add_argument(
        "--batch-size", type=int, default=32, help="frames per embedding batch"
    )
    parser.add_argument("--device", default="cpu", help="device hint for real models")
    parser.add_argument(
        "--seed", type=int, default=0, help="seed for the hash embedder"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = PrepJob(
            video=args.video,
            out_dir=args.out,
            embed_model=args.embed_model,
            caption_model=args.caption_model,
            caption_prompt=args.caption_prompt,
            batch_size=args.batch_size,
            device=args.device,
            seed=args.seed,
        )
        result = run_job(job)
    except PrepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(
        f"wrote {result.frame_count} frames "
        f"(dim {result.embed_dim}) to {result.out_dir}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
