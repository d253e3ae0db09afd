"""Segment partitioning, similarity search, and plan execution."""

from __future__ import annotations

import random

import numpy as np
import pytest

from conftest import make_assets, unit_rows
from frameagent import kernels
from frameagent.errors import BackendError
from frameagent.retrieval import (
    HashEmbedder,
    RetrievalPlan,
    Segment,
    TableEmbedder,
    execute_plan,
    partition_segments,
    retrieve_in_segment,
)


def test_partition_five_uniform_frames():
    segments = partition_segments((1, 45, 90, 135, 180), 180)
    assert [s.index for s in segments] == [1, 2, 3, 4]
    assert [(s.start, s.end) for s in segments] == [
        (1, 45), (45, 90), (90, 135), (135, 180),
    ]
    assert list(segments[0].candidates) == list(range(2, 45))
    assert list(segments[3].candidates) == list(range(136, 180))


def test_partition_keeps_empty_segments():
    segments = partition_segments((1, 2, 50), 50)
    assert len(segments) == 2
    first = segments[0]
    assert (first.start, first.end) == (1, 2)
    assert len(first.candidates) == 0
    assert len(segments[1].candidates) == 47


def test_partition_errors():
    with pytest.raises(ValueError):
        partition_segments((5,), 10)
    with pytest.raises(ValueError):
        partition_segments((5, 3), 10)
    with pytest.raises(ValueError):
        partition_segments((3, 3), 10)
    with pytest.raises(ValueError):
        partition_segments((0, 5), 10)
    with pytest.raises(ValueError):
        partition_segments((1, 11), 10)


def test_partition_candidates_cover_unseen_fuzz():
    # candidate ranges must tile the unseen frames exactly, no overlap
    rng = random.Random(42)
    for _ in range(10_000):
        length = rng.randint(3, 120)
        interior = rng.sample(range(2, length), rng.randint(0, min(8, length - 2)))
        seen = tuple(sorted({1, length, *interior}))
        segments = partition_segments(seen, length)
        assert len(segments) == len(seen) - 1
        covered: list[int] = []
        for seg in segments:
            covered.extend(seg.candidates)
        assert len(covered) == len(set(covered))
        assert set(covered) == set(range(1, length + 1)) - set(seen)


def brute_force_argmax(emb: np.ndarray, query: np.ndarray, frames: list[int]) -> int:
    best_frame = frames[0]
    best_score = float("-inf")
    for frame in frames:
        score = float(np.dot(emb[frame - 1].astype(np.float64), query))
        if score > best_score:
            best_frame = frame
            best_score = score
    return best_frame


def test_retrieve_matches_brute_force():
    rng = np.random.default_rng(11)
    pick = random.Random(11)
    for _ in range(300):
        length = pick.randint(6, 80)
        dim = pick.choice([3, 8, 17])
        assets = make_assets(length=length, dim=dim, seed=pick.randint(0, 10_000))
        start = pick.randint(1, length - 2)
        end = pick.randint(start + 2, length)
        segment = Segment(index=1, start=start, end=end)
        query = rng.standard_normal(dim)
        query /= np.linalg.norm(query)
        got = retrieve_in_segment(assets, segment, query)
        want = brute_force_argmax(assets.embeddings, query, list(segment.candidates))
        assert got == want


def test_retrieve_breaks_ties_toward_lowest_frame():
    assets = make_assets(length=12, dim=4, seed=0)
    row = unit_rows(np.random.default_rng(3), 1, 4)[0]
    for frame in (5, 7, 9):
        assets.embeddings[frame - 1] = row
    segment = Segment(index=1, start=3, end=11)
    got = retrieve_in_segment(assets, segment, row.astype(np.float64))
    assert got == 5


def test_retrieve_rejects_empty_segment():
    assets = make_assets(length=10, dim=4)
    with pytest.raises(ValueError):
        retrieve_in_segment(assets, Segment(index=1, start=4, end=5), np.ones(4))


def test_kernel_paths_agree():
    rng = np.random.default_rng(21)
    emb = unit_rows(rng, 64, 9)
    for _ in range(50):
        query = rng.standard_normal(9)
        lo = int(rng.integers(0, 60))
        hi = int(rng.integers(lo + 1, 65))
        fast = kernels.argmax_dot(emb, query, lo, hi)
        slow = kernels.argmax_dot_numpy(emb, query, lo, hi)
        assert fast == slow
        assert lo <= fast < hi
    assert np.allclose(kernels.row_norms(emb), kernels.row_norms_numpy(emb))


def plan(*items: tuple[int, str]) -> RetrievalPlan:
    return RetrievalPlan(items=list(items))


def test_execute_plan_basic():
    assets = make_assets(length=30, dim=6, seed=4)
    seen = (1, 10, 20, 30)
    embedder = HashEmbedder(6)
    obs = execute_plan(assets, plan((2, "a thing"), (1, "another")), seen, embedder)
    assert len(obs.retrieved) == 2
    first_frame, first_query = obs.retrieved[0]
    assert 10 < first_frame < 20
    assert first_query == "a thing"
    second_frame, _ = obs.retrieved[1]
    assert 1 < second_frame < 10
    assert obs.frames() == [first_frame, second_frame]


def test_execute_plan_drops_duplicate_hits_keep_first():
    assets = make_assets(length=20, dim=5, seed=9)
    seen = (1, 10, 20)
    table = {
        "q one": assets.embedding(4).astype(np.float64),
        "q two": assets.embedding(4).astype(np.float64),
    }
    obs = execute_plan(assets, plan((1, "q one"), (1, "q two")), seen, TableEmbedder(table))
    assert obs.retrieved == [(4, "q one")]


def test_execute_plan_rejects_unknown_segment():
    assets = make_assets(length=20, dim=5)
    with pytest.raises(ValueError):
        execute_plan(assets, plan((7, "q")), (1, 10, 20), HashEmbedder(5))


def test_execute_plan_rejects_empty_segment_reference():
    assets = make_assets(length=20, dim=5)
    with pytest.raises(ValueError):
        execute_plan(assets, plan((1, "q")), (1, 2, 20), HashEmbedder(5))


def test_execute_plan_empty_plan():
    assets = make_assets(length=20, dim=5)
    obs = execute_plan(assets, plan(), (1, 20), HashEmbedder(5))
    assert obs.retrieved == []


def test_execute_plan_whole_range_ignores_segment_ids():
    assets = make_assets(length=40, dim=5, seed=6)
    seen = (1, 20, 40)
    target = 31
    table = {"find it": assets.embedding(target).astype(np.float64)}
    obs = execute_plan(
        assets, plan((1, "find it")), seen, TableEmbedder(table), whole_range=True
    )
    assert obs.retrieved == [(target, "find it")]


def test_execute_plan_whole_range_skips_seen_frames():
    assets = make_assets(length=10, dim=4, seed=2)
    seen = (1, 5, 10)
    # query pointing straight at an already seen frame must pick elsewhere
    table = {"q": assets.embedding(5).astype(np.float64)}
    obs = execute_plan(assets, plan((1, "q")), seen, TableEmbedder(table), whole_range=True)
    assert len(obs.retrieved) == 1
    assert obs.retrieved[0][0] not in seen


def test_embedder_dim_mismatch_raises():
    assets = make_assets(length=20, dim=5)
    with pytest.raises(BackendError, match="shape"):
        execute_plan(assets, plan((1, "q")), (1, 20), HashEmbedder(4))


def test_zero_query_vector_raises():
    assets = make_assets(length=20, dim=5)
    with pytest.raises(BackendError):
        execute_plan(assets, plan((1, "q")), (1, 20), TableEmbedder({"q": np.zeros(5)}))


def test_hash_embedder_is_deterministic_and_unit():
    a = HashEmbedder(16)
    b = HashEmbedder(16)
    va = a.embed(["the same text"])[0]
    vb = b.embed(["the same text"])[0]
    assert np.array_equal(va, vb)
    assert abs(float(np.linalg.norm(va)) - 1.0) < 1e-9
    other = a.embed(["different text"])[0]
    assert not np.array_equal(va, other)
    seeded = HashEmbedder(16, seed=3).embed(["the same text"])[0]
    assert not np.array_equal(va, seeded)


def test_table_embedder_unknown_query():
    with pytest.raises(BackendError, match="no embedding"):
        TableEmbedder({}).embed(["missing"])
