"""Frame captioning backends.

Model specs mirror the embedder registry:

  stats        deterministic one-line description built from pixel
               statistics. No model needed; useful for pipeline tests
               and offline bundles.
  hf:<id>      image-to-text through transformers, for real captioning
               checkpoints. Loaded lazily.

Captions must be non-empty single lines. A backend that returns an empty
string for a frame is retried once; if it comes back empty again the
frame gets the placeholder "[no caption]" and a warning is recorded for
the manifest.
"""

from __future__ import annotations

import numpy as np

from .errors import PrepError

PLACEHOLDER = "[no caption]"
DEFAULT_PROMPT = "describe the image in detail"


class StatsCaptioner:
    """Describes brightness, dominant channel, and busyness of the frame."""

    _LEVELS = (
        (50.0, "a very dark frame"),
        (105.0, "a dim frame"),
        (170.0, "a moderately lit frame"),
        (235.0, "a bright frame"),
        (256.0, "a washed-out frame"),
    )

    def caption_image(self, frame: np.ndarray) -> str:
        pixels = frame.astype(np.float64)
        mean = float(pixels.mean())
        for bound, label in self._LEVELS:
            if mean < bound:
                tone = label
                break
        else:
            tone = "a washed-out frame"
        if frame.ndim == 3 and frame.shape[2] == 3:
            # OpenCV hands frames over as BGR
            channel_means = pixels.reshape(-1, 3).mean(axis=0)
            dominant = ("blue", "green", "red")[int(np.argmax(channel_means))]
            color = f" dominated by {dominant} tones"
        else:
            color = " in grayscale"
        spread = float(pixels.std())
        texture = "busy detail" if spread > 48.0 else "flat areas"
        return f"{tone}{color} with mostly {texture}"


class TransformersCaptioner:
    """Real captioning model; import deferred like the st embedder."""

    def __init__(self, model_id: str, device: str = "cpu", prompt: str = DEFAULT_PROMPT):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise PrepError(
                "transformers is not installed; use an 'hf:' model spec only "
                "where it is available"
            ) from exc
        try:
            self._pipe = pipeline("image-to-text", model=model_id, device=device)
        except Exception as exc:
            raise PrepError(f"cannot load caption model {model_id}: {exc}") from exc
        self.prompt = prompt

    def caption_image(self, frame: np.ndarray) -> str:
        try:
            from PIL import Image
        except ImportError as exc:
            raise PrepError("Pillow is required for 'hf:' captioning") from exc
        image = Image.fromarray(frame[:, :, ::-1])
        try:
            out = self._pipe(image, prompt=self.prompt)
        except (TypeError, ValueError):
            # not every checkpoint is promptable
            out = self._pipe(image)
        if not out:
            return ""
        return str(out[0].get("generated_text", "")).strip()


def get_captioner(spec: str, device: str = "cpu", prompt: str = DEFAULT_PROMPT):
    kind, _, arg = spec.partition(":")
    if kind == "stats":
        if arg:
            raise PrepError(f"stats captioner takes no argument, got {spec!r}")
        return StatsCaptioner()
    if kind == "hf":
        if not arg:
            raise PrepError("hf captioner needs a model id, e.g. hf:blip-base")
        return TransformersCaptioner(arg, device=device, prompt=prompt)
    raise PrepError(f"unknown caption model spec {spec!r}")


def caption_frames(
    frames: list[np.ndarray], captioner, warnings: list[str]
) -> list[str]:
    """Caption every frame, applying the retry-then-placeholder policy."""
    captions = []
    for index, frame in enumerate(frames, start=1):
        text = _single_line(captioner.caption_image(frame))
        if not text:
            text = _single_line(captioner.caption_image(frame))
        if not text:
            text = PLACEHOLDER
            warnings.append(f"frame {index}: captioner returned empty text twice")
        captions.append(text)
    return captions


def _single_line(text: str) -> str:
    return " ".join(str(text).split())
