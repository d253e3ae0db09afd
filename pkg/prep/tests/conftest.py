import cv2
import numpy as np
import pytest

# one distinct BGR color per second so decoded frames can be traced back
PALETTE = [
    (40, 40, 200),
    (40, 200, 40),
    (200, 40, 40),
    (40, 180, 220),
    (200, 40, 200),
    (220, 180, 40),
    (90, 90, 90),
    (30, 120, 210),
    (160, 220, 60),
    (100, 60, 170),
    (210, 210, 210),
    (25, 25, 25),
]

WRITE_FPS = 12
FRAME_SIZE = (64, 48)


def write_video(path, seconds, fps=WRITE_FPS, size=FRAME_SIZE):
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, size
    )
    assert writer.isOpened(), "MJPG writer unavailable"
    width, height = size
    for i in range(round(seconds * fps)):
        frame = np.zeros((height, width, 3), dtype=np.uint8)
        frame[:] = PALETTE[(i // fps) % len(PALETTE)]
        writer.write(frame)
    writer.release()
    return str(path)


@pytest.fixture(scope="session")
def long_video(tmp_path_factory):
    """Ten seconds, one solid color per second."""
    path = tmp_path_factory.mktemp("video") / "long.avi"
    return write_video(path, seconds=10)


@pytest.fixture(scope="session")
def short_video(tmp_path_factory):
    """Half a second, shorter than one sampling period."""
    path = tmp_path_factory.mktemp("video") / "short.avi"
    return write_video(path, seconds=0.5)


@pytest.fixture
def corrupt_video(tmp_path):
    path = tmp_path / "broken.avi"
    path.write_bytes(b"this is not a video container at all")
    return str(path)
