"""Fixed-rate frame extraction with OpenCV."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import PrepError


@dataclass(frozen=True)
class VideoInfo:
    path: str
    native_fps: float
    native_frames: int
    duration_seconds: float


def probe_video(path: str | Path) -> VideoInfo:
    capture = cv2.VideoCapture(str(path))
    try:
        if not capture.isOpened():
            raise PrepError(f"cannot open video: {path}")
        native_fps = capture.get(cv2.CAP_PROP_FPS)
        native_frames = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
        if native_fps <= 0 or native_frames <= 0:
            raise PrepError(f"container reports no frames or no frame rate: {path}")
        return VideoInfo(
            path=str(path),
            native_fps=float(native_fps),
            native_frames=native_frames,
            duration_seconds=native_frames / float(native_fps),
        )
    finally:
        capture.release()


def extract_frames(
    path: str | Path, fps: int = 1
) -> tuple[list[np.ndarray], list[float], VideoInfo]:
    """Decode one frame per output second.

    Output frame k (1-based) is the source frame at timestamp (k-1)/fps.
    Returns the frames, their exact source timestamps, and the probe info.
    A clip shorter than one second still yields its first frame.
    """
    if fps != 1:
        raise PrepError(f"only 1 fps extraction is supported, got {fps}")
    info = probe_video(path)
    count = max(1, math.floor(info.duration_seconds * fps))
    targets = []
    for k in range(count):
        native_index = round(k / fps * info.native_fps)
        targets.append(min(native_index, info.native_frames - 1))

    wanted = {}
    for out_index, native_index in enumerate(targets):
        wanted.setdefault(native_index, []).append(out_index)

    frames: list[np.ndarray | None] = [None] * count
    capture = cv2.VideoCapture(str(path))
    try:
        native_index = 0
        remaining = len(wanted)
        while remaining:
            ok, frame = capture.read()
            if not ok:
                break
            if native_index in wanted:
                for out_index in wanted[native_index]:
                    frames[out_index] = frame.copy()
                remaining -= 1
            native_index += 1
    finally:
        capture.release()

    missing = [i for i, frame in enumerate(frames) if frame is None]
    if missing:
        # containers sometimes overstate their frame count; reuse the last
        # decoded frame rather than failing one short of the promised length
        last = None
        for i, frame in enumerate(frames):
            if frame is not None:
                last = frame
            elif last is not None:
                frames[i] = last.copy()
        if frames[0] is None:
            raise PrepError(f"could not decode any frames from {path}")
    timestamps = [k / fps for k in range(count)]
    return [f for f in frames], timestamps, info
