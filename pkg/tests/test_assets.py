"""Bundle IO: binary embedding files, caption tables, validation."""

from __future__ import annotations

import random
import struct

import numpy as np
import pytest

from conftest import make_assets, unit_rows, write_bundle
from frameagent.assets import (
    AssetError,
    load_assets,
    read_assets,
    read_captions,
    read_embeddings,
    validate_assets,
    write_captions,
    write_embeddings,
)


def test_embedding_file_golden_bytes(tmp_path):
    # oracle assembled by hand: header then row-major little-endian float32
    rows = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.float32)
    path = tmp_path / "e.faem"
    write_embeddings(path, rows)
    expected = struct.pack("<4sIII", b"FAEM", 1, 2, 2)
    expected += struct.pack("<f", 1.0) + struct.pack("<f", 0.0)
    expected += struct.pack("<f", 0.0) + struct.pack("<f", -1.0)
    assert path.read_bytes() == expected


def test_embedding_round_trip_fuzz(tmp_path):
    rng = np.random.default_rng(7)
    for i in range(100):
        frames = int(rng.integers(1, 40))
        dim = int(rng.integers(1, 17))
        rows = unit_rows(rng, frames, dim)
        path = tmp_path / f"rt_{i}.faem"
        write_embeddings(path, rows)
        back = read_embeddings(path)
        assert back.dtype == np.float32
        assert back.shape == (frames, dim)
        assert np.array_equal(back, rows)
        # writing the reread copy must reproduce the file byte for byte
        path2 = tmp_path / f"rt_{i}_again.faem"
        write_embeddings(path2, back)
        assert path2.read_bytes() == path.read_bytes()


def test_embedding_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.faem"
    path.write_bytes(b"XXXX" + struct.pack("<III", 1, 1, 1) + b"\x00\x00\x80\x3f")
    with pytest.raises(AssetError, match="magic"):
        read_embeddings(path)


def test_embedding_rejects_bad_version(tmp_path):
    path = tmp_path / "bad.faem"
    path.write_bytes(struct.pack("<4sIII", b"FAEM", 9, 1, 1) + b"\x00\x00\x80\x3f")
    with pytest.raises(AssetError, match="version"):
        read_embeddings(path)


def test_embedding_rejects_short_header(tmp_path):
    path = tmp_path / "bad.faem"
    path.write_bytes(b"FAEM\x01")
    with pytest.raises(AssetError, match="too short"):
        read_embeddings(path)


def test_embedding_rejects_payload_mismatch(tmp_path):
    path = tmp_path / "bad.faem"
    # header promises 2x2 floats, payload holds only 3
    path.write_bytes(struct.pack("<4sIII", b"FAEM", 1, 2, 2) + b"\x00" * 12)
    with pytest.raises(AssetError, match="payload size mismatch"):
        read_embeddings(path)


def test_caption_round_trip(tmp_path):
    path = tmp_path / "captions.tsv"
    captions = {1: "first", 2: "tab  inside spaces ok", 5: "it's quoted"}
    write_captions(path, captions)
    assert read_captions(path) == captions


def test_caption_rejects_newline_in_text(tmp_path):
    with pytest.raises(AssetError):
        write_captions(tmp_path / "c.tsv", {1: "two\nlines"})


def test_caption_read_errors(tmp_path):
    path = tmp_path / "c.tsv"

    path.write_text("1\tok\nno tab here\n", encoding="utf-8")
    with pytest.raises(AssetError, match="line 2: missing tab"):
        read_captions(path)

    path.write_text("2\tb\n1\ta\n", encoding="utf-8")
    with pytest.raises(AssetError, match="strictly increasing"):
        read_captions(path)

    path.write_text("x\ta\n", encoding="utf-8")
    with pytest.raises(AssetError, match="bad frame index"):
        read_captions(path)

    path.write_text("0\ta\n", encoding="utf-8")
    with pytest.raises(AssetError, match=">= 1"):
        read_captions(path)


def test_bundle_round_trip_and_validate(tmp_path):
    assets = make_assets(video_id="clip", length=24, dim=6, seed=3)
    bundle_dir = write_bundle(tmp_path, assets)
    back = read_assets(bundle_dir)
    assert back.video_id == "clip"
    assert back.frame_count == 24
    assert back.dim == 6
    assert back.captions == assets.captions
    assert np.array_equal(back.embeddings, assets.embeddings)
    assert validate_assets(back) == []


def test_read_assets_missing_files(tmp_path):
    root = tmp_path / "empty"
    root.mkdir()
    with pytest.raises(AssetError, match="missing embedding file"):
        read_assets(root)
    write_embeddings(root / "embeddings.faem", unit_rows(np.random.default_rng(0), 3, 2))
    with pytest.raises(AssetError, match="missing caption file"):
        read_assets(root)


def test_validate_reports_caption_gap():
    assets = make_assets(length=10, dim=4)
    assets.captions.pop(7)
    report = validate_assets(assets)
    assert any("caption gap at frame 7" in line for line in report)


def test_validate_reports_caption_outside_range():
    assets = make_assets(length=5, dim=4)
    assets.captions[9] = "beyond the end"
    report = validate_assets(assets)
    assert any("outside" in line for line in report)


def test_validate_reports_norm_violation():
    assets = make_assets(length=8, dim=4)
    assets.embeddings[3] *= 2.0
    report = validate_assets(assets)
    assert any("norm violation at frame 4" in line for line in report)


def test_validate_reports_non_finite():
    assets = make_assets(length=8, dim=4)
    assets.embeddings[0, 0] = np.nan
    report = validate_assets(assets)
    assert any("non-finite embedding at frame 1" in line for line in report)


def test_validate_accepts_tiny_norm_drift():
    assets = make_assets(length=6, dim=8)
    # nudge one row by well under the documented tolerance
    assets.embeddings[2] *= np.float32(1.0 + 5e-7)
    assert validate_assets(assets) == []


def test_load_assets_raises_on_invalid(tmp_path):
    assets = make_assets(video_id="v", length=6, dim=4)
    assets.embeddings[1] *= 3.0
    bundle_dir = write_bundle(tmp_path, assets)
    with pytest.raises(AssetError, match="norm violation"):
        load_assets(bundle_dir)


def test_accessors_check_range():
    assets = make_assets(length=6, dim=4)
    assert assets.caption(6)
    assert assets.embedding(1).shape == (4,)
    with pytest.raises(AssetError):
        assets.caption(0)
    with pytest.raises(AssetError):
        assets.embedding(7)


def test_random_corruption_never_crashes(tmp_path):
    # flipped bytes must surface as AssetError, not random numpy failures
    rng = random.Random(5)
    assets = make_assets(length=9, dim=3, seed=2)
    path = tmp_path / "good.faem"
    write_embeddings(path, assets.embeddings)
    good = bytearray(path.read_bytes())
    for i in range(200):
        blob = bytearray(good)
        for _ in range(rng.randint(1, 4)):
            blob[rng.randrange(len(blob))] ^= 1 << rng.randrange(8)
        target = tmp_path / "fuzz.faem"
        target.write_bytes(bytes(blob))
        try:
            read_embeddings(target)
        except AssetError:
            pass
