"""Shared fixtures: the dough-video prompt fixture and synthetic bundle builders."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from frameagent.assets import VideoAssets, write_assets

GOLDEN_DIR = Path(__file__).parent / "goldens"

DOUGH_LENGTH = 180
DOUGH_CAPTIONS = {
    1: "#C C rolls the dough on the table with both hands.",
    28: "#C C puts the dough in the dough roller",
    45: "#C C walks to the doughs on the work table.",
    76: "#C C picks dough from the baking tray",
    90: "#C C picks up dough",
    111: "#C C picks dough from the tray of doughs with both hands. ",
    135: "#C C throws the dough on the dough roller",
    171: "#C C places the dough on the baking tray",
    180: "#C C rolls the dough on the baking table with his hands.",
}
DOUGH_QUESTION = (
    "How would you briefly describe the sequential order of the process that c "
    "performed on the dough, from initial handling to final placement on the tray?"
)
DOUGH_OPTIONS = [
    "Initially, c first carefully rolled the dough on the flour, then smoothly "
    "rolled it on the table, and finally, gently placed it in the awaiting tray.",
    "C first placed the dough in the tray, then rolled it on the table, and "
    "finally rolled it on the flour.",
    "Initially, c carefully rolled the dough on the table, then skillfully "
    "placed it in the tray, and ultimately, gently rolled it on the flour.",
    "Initially, c first carefully placed the dough in the tray, then gently "
    "rolled it on the flour, and ultimately smoothly rolled it on the table.",
    "C first rolled the dough on the table, then rolled it on the flour, and "
    "finally placed it in the tray.",
]
DOUGH_RATIONALE = (
    "Based on the sequence of sampled frames provided, the following sequential "
    "order of the process can be described:\n"
    "\n"
    "- C rolls the dough on the table with both hands. (frame 1 & frame 180)\n"
    "- C puts the dough in the dough roller. (frame 28 & frame 135)\n"
    "- C walks to the doughs on the work table. (frame 45, context not clear "
    "enough to make this a major step)\n"
    "- C picks dough from the baking tray. (frame 76)\n"
    "- C picks up dough. (frame 90, likely a continuation of picking it from "
    "the tray based on the next frame)\n"
    "- C picks dough from the tray of doughs with both hands. (frame 111, this "
    "confirms the action started at frame 76)\n"
    "- C places the dough on the baking tray. (frame 171)\n"
    "\n"
    "From the above sequence, the most accurate description is that C first "
    "rolls the dough on the table, then puts it through the dough roller, and "
    "finally places it on the baking tray. Thus, the correct sequential order, "
    "represented by the best answer, should be:\n"
    "\n"
    "4. C first rolled the dough on the table, then rolled it on the flour, and "
    "finally placed it in the tray.\n"
    "\n"
    "Now to provide the answer in the requested JSON format:\n"
    "\n"
    "```\n"
    "{'final_answer': '4'}\n"
    "```"
)


def load_golden(name: str) -> str:
    text = (GOLDEN_DIR / name).read_text(encoding="utf-8").replace("\r\n", "\n")
    return text[:-1] if text.endswith("\n") else text


def unit_rows(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    rows = rng.standard_normal((count, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows.astype(np.float32)


def make_assets(
    video_id: str = "vid",
    length: int = 180,
    dim: int = 8,
    seed: int = 0,
    captions: dict[int, str] | None = None,
) -> VideoAssets:
    rng = np.random.default_rng(seed)
    if captions is None:
        captions = {k: f"a person does something at second {k}" for k in range(1, length + 1)}
    return VideoAssets(
        video_id=video_id,
        frame_count=length,
        dim=dim,
        captions=captions,
        embeddings=unit_rows(rng, length, dim),
    )


def write_bundle(root: Path, assets: VideoAssets) -> Path:
    bundle_dir = root / assets.video_id
    write_assets(bundle_dir, assets)
    return bundle_dir
