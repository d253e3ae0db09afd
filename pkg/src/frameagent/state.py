"""Agent state: which frames have been seen and what was said about them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .assets import VideoAssets


@dataclass
class AgentState:
    seen: tuple[int, ...]
    captions_seen: dict[int, str]
    round: int = 1
    last_prediction: int | None = None
    last_rationale: str | None = None


def uniform_sample(length: int, count: int) -> list[int]:
    """Endpoint-inclusive uniform frame indices: floor(1 + (L-1) * k / (N-1)).

    Pure integer arithmetic, so the floor is exact for any L up to 1e5 and
    beyond.
    """
    if count < 2:
        raise ValueError(f"need at least 2 samples, got {count}")
    if count > length:
        raise ValueError(f"cannot sample {count} frames from a {length}-frame video")
    return [1 + (length - 1) * k // (count - 1) for k in range(count)]


def init_state(
    assets: VideoAssets, count: int, caption_fn: Callable[[int], str]
) -> AgentState:
    """Seed the state with uniformly sampled frames and their captions."""
    frames = uniform_sample(assets.frame_count, count)
    captions = {frame: caption_fn(frame) for frame in frames}
    return AgentState(seen=tuple(frames), captions_seen=captions, round=1)


def merge(state: AgentState, new_captions: dict[int, str]) -> AgentState:
    """Fold newly captioned frames into the state; existing captions win.

    The round counter is advanced by the controller, never here.
    """
    captions = dict(new_captions)
    captions.update(state.captions_seen)
    return AgentState(
        seen=tuple(sorted(set(state.seen) | set(new_captions))),
        captions_seen=captions,
        round=state.round,
        last_prediction=state.last_prediction,
        last_rationale=state.last_rationale,
    )


def render_caption_map(captions: dict[int, str]) -> str:
    """Single-line map literal: {'frame 1': 'text', ...} in frame order.

    Embedded single quotes are doubled rather than backslash-escaped.
    """
    parts = []
    for frame in sorted(captions):
        text = captions[frame].replace("'", "''")
        parts.append(f"'frame {frame}': '{text}'")
    return "{" + ", ".join(parts) + "}"
