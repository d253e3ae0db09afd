"""Dataset loading, evaluation metrics, baselines, sweeps, and the cost model."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .agent import AgentRunError, Backends, LoopConfig, RunTrace, run
from .assets import AssetError, VideoAssets, load_assets


@dataclass(frozen=True)
class QAItem:
    video_id: str
    question: str
    options: tuple[str, ...]
    answer_index: int | None = None
    qtype: str | None = None


def load_dataset(path: str | Path) -> list[QAItem]:
    """Parse a line-JSON dataset; every error names the offending line."""
    items: list[QAItem] = []
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"dataset line {lineno}: invalid JSON: {exc}") from None
        if not isinstance(record, dict):
            raise ValueError(f"dataset line {lineno}: expected an object")
        for key in ("video_id", "question", "options"):
            if key not in record:
                raise ValueError(f"dataset line {lineno}: missing '{key}'")
        options = record["options"]
        if (
            not isinstance(options, list)
            or not options
            or not all(isinstance(o, str) for o in options)
        ):
            raise ValueError(f"dataset line {lineno}: 'options' must be a non-empty list of strings")
        answer = record.get("answer_index")
        if answer is not None:
            if not isinstance(answer, int) or not 0 <= answer < len(options):
                raise ValueError(f"dataset line {lineno}: 'answer_index' out of range")
        items.append(
            QAItem(
                video_id=str(record["video_id"]),
                question=str(record["question"]),
                options=tuple(options),
                answer_index=answer,
                qtype=record.get("qtype"),
            )
        )
    return items


@dataclass
class Metrics:
    n_items: int = 0
    n_scored: int = 0
    n_correct: int = 0
    mean_frames: float = 0.0
    min_frames: int = 0
    max_frames: int = 0
    mean_rounds: float = 0.0
    degraded: int = 0
    skipped: list[str] = field(default_factory=list)
    per_qtype: dict[str, dict] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_scored if self.n_scored else 0.0

    def summary_line(self) -> str:
        return (
            f"acc={self.accuracy:.3f} frames={self.mean_frames:.1f} "
            f"rounds={self.mean_rounds:.1f}"
        )

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_scored": self.n_scored,
            "n_correct": self.n_correct,
            "accuracy": self.accuracy,
            "mean_frames": self.mean_frames,
            "min_frames": self.min_frames,
            "max_frames": self.max_frames,
            "mean_rounds": self.mean_rounds,
            "degraded": self.degraded,
            "skipped": self.skipped,
            "per_qtype": self.per_qtype,
        }


def _aggregate(
    items: list[QAItem],
    outcomes: list[tuple[str, object]],
) -> Metrics:
    metrics = Metrics(n_items=len(items))
    frames: list[int] = []
    rounds: list[int] = []
    qtype_counts: dict[str, list[int]] = {}
    for item, (status, payload) in zip(items, outcomes):
        if status == "skip":
            metrics.skipped.append(str(payload))
            continue
        trace: RunTrace = payload
        frames.append(trace.frames_seen)
        rounds.append(trace.total_rounds)
        if trace.degraded:
            metrics.degraded += 1
        if item.answer_index is not None:
            metrics.n_scored += 1
            correct = int(trace.final_answer == item.answer_index)
            metrics.n_correct += correct
            bucket = qtype_counts.setdefault(item.qtype or "untyped", [0, 0])
            bucket[0] += 1
            bucket[1] += correct
    if frames:
        metrics.mean_frames = sum(frames) / len(frames)
        metrics.min_frames = min(frames)
        metrics.max_frames = max(frames)
        metrics.mean_rounds = sum(rounds) / len(rounds)
    metrics.per_qtype = {
        qtype: {"n": n, "correct": correct, "accuracy": correct / n}
        for qtype, (n, correct) in sorted(qtype_counts.items())
    }
    return metrics


def evaluate(
    items: list[QAItem],
    assets_root: str | Path,
    config: LoopConfig,
    backends: Backends,
    workers: int = 1,
    fail_fast: bool = False,
    trace_dir: str | Path | None = None,
) -> Metrics:
    """Run the agent over a dataset and aggregate the outcomes.

    Missing bundles and backend failures skip the item (recorded in the
    metrics) unless fail_fast is set. Items are processed in a thread pool
    but aggregated in dataset order, so the result is order-deterministic.
    """
    root = Path(assets_root)
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)

    asset_cache: dict[str, VideoAssets] = {}
    for item in items:
        if item.video_id in asset_cache:
            continue
        bundle_dir = root / item.video_id
        if bundle_dir.is_dir():
            asset_cache[item.video_id] = load_assets(bundle_dir)

    def eval_one(index: int, item: QAItem) -> tuple[str, object]:
        assets = asset_cache.get(item.video_id)
        if assets is None:
            if fail_fast:
                raise AssetError(f"missing asset bundle for {item.video_id}")
            return "skip", f"{item.video_id}: missing asset bundle"
        trace_path = None
        if trace_dir is not None:
            trace_path = Path(trace_dir) / f"{index:04d}_{item.video_id}.jsonl"
        try:
            return "ok", run(assets, item.question, list(item.options), config, backends, trace_path)
        except AgentRunError as exc:
            if fail_fast:
                raise
            return "skip", f"{item.video_id}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(eval_one, range(len(items)), items))
    else:
        outcomes = [eval_one(i, item) for i, item in enumerate(items)]
    return _aggregate(items, outcomes)


def uniform_baseline(
    items: list[QAItem],
    assets_root: str | Path,
    budget: int,
    backends: Backends,
    config: LoopConfig | None = None,
    workers: int = 1,
    fail_fast: bool = False,
) -> Metrics:
    """Single-shot baseline: predict once over a uniform sample of `budget` frames.

    Equivalent to a one-round run with self-evaluation off, so it shares the
    agent code path instead of duplicating it.
    """
    base = config if config is not None else LoopConfig()
    baseline_config = replace(
        base,
        init_frames=budget,
        max_rounds=1,
        self_evaluation=False,
    )
    return evaluate(
        items, assets_root, baseline_config, backends,
        workers=workers, fail_fast=fail_fast,
    )


SWEEP_AXES = ("rounds", "init_frames", "budget")


def sweep(
    items: list[QAItem],
    assets_root: str | Path,
    axis: str,
    values: list[int],
    config: LoopConfig,
    backends: Backends,
    csv_path: str | Path | None = None,
    workers: int = 1,
) -> list[tuple[int, Metrics]]:
    """Evaluate along one knob and optionally emit a plot-ready CSV."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}, expected one of {SWEEP_AXES}")
    results: list[tuple[int, Metrics]] = []
    for value in values:
        if axis == "rounds":
            metrics = evaluate(
                items, assets_root, replace(config, max_rounds=value), backends, workers=workers
            )
        elif axis == "init_frames":
            metrics = evaluate(
                items, assets_root, replace(config, init_frames=value), backends, workers=workers
            )
        else:
            metrics = uniform_baseline(
                items, assets_root, value, backends, config=config, workers=workers
            )
        results.append((value, metrics))
    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["axis", "value", "accuracy", "mean_frames", "mean_rounds",
                 "degraded", "scored", "items", "skipped"]
            )
            for value, metrics in results:
                writer.writerow(
                    [axis, value, f"{metrics.accuracy:.6f}",
                     f"{metrics.mean_frames:.4f}", f"{metrics.mean_rounds:.4f}",
                     metrics.degraded, metrics.n_scored, metrics.n_items,
                     len(metrics.skipped)]
                )
    return results


@dataclass(frozen=True)
class CostParams:
    embed_cost: float
    caption_cost: float
    llm_round_cost: float

    def fraction(self, length: int, frames_used: float, rounds: float) -> float:
        return cost_fraction(
            length, frames_used, self.embed_cost, self.caption_cost,
            self.llm_round_cost, rounds,
        )


def cost_fraction(
    length: int,
    frames_used: float,
    embed_cost: float,
    caption_cost: float,
    llm_round_cost: float,
    rounds: float,
) -> float:
    """Share of full-pipeline cost spent by selective viewing.

    Numerator: embedding every frame once plus re-encoding the frames
    actually viewed. Denominator adds captioning those frames and the
    per-round reasoning calls.
    """
    numerator = length * embed_cost + frames_used * embed_cost
    denominator = numerator + frames_used * caption_cost + rounds * llm_round_cost
    if denominator == 0:
        raise ValueError("cost denominator is zero")
    return numerator / denominator
