"""Caption lookup for frames the controller decides to inspect."""

from __future__ import annotations

from dataclasses import dataclass

from ._http import post_json
from .assets import VideoAssets
from .errors import BackendError


@dataclass(frozen=True)
class CaptionRequest:
    video_id: str
    frame_index: int
    window: int = 0


class StoreCaptioner:
    """Serves captions straight from the asset bundle."""

    def caption(self, assets: VideoAssets, request: CaptionRequest) -> str:
        if request.frame_index not in assets.captions:
            raise BackendError(f"no caption stored for frame {request.frame_index}")
        return assets.captions[request.frame_index]


class HttpCaptioner:
    """Caption endpoint: POST {"video_id", "frame_index", "window"} -> {"caption"}."""

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

    def caption(self, assets: VideoAssets, request: CaptionRequest) -> str:
        body, _ = post_json(
            self.endpoint,
            {
                "video_id": request.video_id,
                "frame_index": request.frame_index,
                "window": request.window,
            },
            timeout=self.timeout,
            retries=self.retries,
            backoff=self.backoff,
        )
        try:
            text = body["caption"]
        except (KeyError, TypeError):
            raise BackendError(f"malformed caption response from {self.endpoint}") from None
        if not isinstance(text, str):
            raise BackendError("caption response is not text")
        return text


def caption_frame(backend, assets: VideoAssets, request: CaptionRequest) -> str:
    """Fetch one caption, clamping the context window to the video bounds."""
    index = request.frame_index
    if not 1 <= index <= assets.frame_count:
        raise ValueError(f"frame index {index} outside 1..{assets.frame_count}")
    if request.window < 0:
        raise ValueError(f"caption window must be >= 0, got {request.window}")
    window = min(request.window, index - 1, assets.frame_count - index)
    clamped = CaptionRequest(request.video_id, index, window)
    return backend.caption(assets, clamped)
