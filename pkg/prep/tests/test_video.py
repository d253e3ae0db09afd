import numpy as np
import pytest

from frameagent_prep.errors import PrepError
from frameagent_prep.video import extract_frames, probe_video

from conftest import FRAME_SIZE, PALETTE, WRITE_FPS


def test_probe_reports_container_numbers(long_video):
    info = probe_video(long_video)
    assert info.native_fps == pytest.approx(WRITE_FPS, rel=0.01)
    assert info.native_frames == 10 * WRITE_FPS
    assert info.duration_seconds == pytest.approx(10.0, rel=0.01)


def test_probe_rejects_garbage(corrupt_video):
    with pytest.raises(PrepError):
        probe_video(corrupt_video)


def test_extract_one_frame_per_second(long_video):
    frames, timestamps, info = extract_frames(long_video)
    assert len(frames) == 10
    assert timestamps == [float(k) for k in range(10)]
    assert info.native_frames == 10 * WRITE_FPS
    width, height = FRAME_SIZE
    for frame in frames:
        assert frame.shape == (height, width, 3)
        assert frame.dtype == np.uint8


def test_extracted_frames_land_on_second_boundaries(long_video):
    frames, _, _ = extract_frames(long_video)
    # MJPG is lossy, so compare mean color with slack
    for second, frame in enumerate(frames):
        expected = np.array(PALETTE[second], dtype=np.float64)
        got = frame.reshape(-1, 3).mean(axis=0)
        assert np.abs(got - expected).max() < 12.0, (
            f"frame {second} does not match the color of second {second}"
        )


def test_subsecond_clip_still_yields_one_frame(short_video):
    frames, timestamps, _ = extract_frames(short_video)
    assert len(frames) == 1
    assert timestamps == [0.0]


def test_extract_rejects_other_rates(long_video):
    with pytest.raises(PrepError, match="1 fps"):
        extract_frames(long_video, fps=2)


def test_extract_rejects_garbage(corrupt_video):
    with pytest.raises(PrepError):
        extract_frames(corrupt_video)


def test_frames_are_independent_copies(long_video):
    frames, _, _ = extract_frames(long_video)
    frames[0][:] = 0
    assert frames[1].mean() > 0
