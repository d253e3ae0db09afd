"""The iterative answer-or-search controller.

Each round predicts an answer over the frames seen so far, self-assesses
confidence, and either commits to the answer or plans retrieval queries for
the frames it is missing. Newly retrieved frames are captioned and folded
into the state before the next round.
"""

from __future__ import annotations

import json
import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path

from .assets import VideoAssets
from .captioner import CaptionRequest, StoreCaptioner, caption_frame
from .errors import BackendError
from .llm import (
    DecodingParams,
    ModelExchange,
    ask,
    parse_answer,
    parse_confidence,
    parse_plan,
    render_predict_prompt,
    render_reflect_prompt,
    render_search_prompt,
)
from .retrieval import Observation, RetrievalPlan, execute_plan, partition_segments
from .state import AgentState, init_state, merge

FALLBACK_ANSWER = 0
FALLBACK_CONFIDENCE = 1

DEGRADED_FLAGS = {"predict_fallback", "reflect_fallback", "plan_fallback"}


@dataclass(frozen=True)
class Answer:
    index: int


@dataclass(frozen=True)
class Search:
    plan: RetrievalPlan


@dataclass
class LoopConfig:
    init_frames: int = 5
    max_rounds: int = 3
    confidence_threshold: int = 3
    max_queries: int = 5
    self_evaluation: bool = True
    segment_selection: bool = True
    reask_limit: int = 2
    net_retries: int = 3
    decoding: DecodingParams = field(default_factory=DecodingParams)

    def __post_init__(self) -> None:
        if self.init_frames < 2:
            raise ValueError(f"init_frames must be >= 2, got {self.init_frames}")
        if self.max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if not 1 <= self.confidence_threshold <= 3:
            raise ValueError(
                f"confidence_threshold must be 1..3, got {self.confidence_threshold}"
            )
        if self.max_queries < 1:
            raise ValueError(f"max_queries must be >= 1, got {self.max_queries}")
        if self.reask_limit < 0 or self.net_retries < 1:
            raise ValueError("retry budgets out of range")

    def to_dict(self) -> dict:
        return {
            "init_frames": self.init_frames,
            "max_rounds": self.max_rounds,
            "confidence_threshold": self.confidence_threshold,
            "max_queries": self.max_queries,
            "self_evaluation": self.self_evaluation,
            "segment_selection": self.segment_selection,
            "reask_limit": self.reask_limit,
            "net_retries": self.net_retries,
            "decoding": self.decoding.to_payload(),
        }


@dataclass
class Backends:
    chat: object
    embedder: object | None = None
    captioner: object | None = None


@dataclass
class StepResult:
    action: Answer | Search
    prediction: int
    rationale: str
    confidence: int
    plan: RetrievalPlan | None
    exchanges: list[ModelExchange]
    flags: list[str]


@dataclass
class RoundRecord:
    round: int
    seen: list[int]
    captions: dict[int, str]
    exchanges: list[ModelExchange]
    prediction: int
    confidence: int
    action: str
    plan: list[list]
    retrieved: list[list]
    frames_added: list[int]
    flags: list[str]
    elapsed_ms: float

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "seen": self.seen,
            "captions": {str(k): v for k, v in self.captions.items()},
            "exchanges": [e.to_dict() for e in self.exchanges],
            "prediction": self.prediction,
            "confidence": self.confidence,
            "action": self.action,
            "plan": self.plan,
            "retrieved": self.retrieved,
            "frames_added": self.frames_added,
            "flags": self.flags,
            "elapsed_ms": self.elapsed_ms,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoundRecord":
        return cls(
            round=data["round"],
            seen=list(data["seen"]),
            captions={int(k): v for k, v in data["captions"].items()},
            exchanges=[ModelExchange.from_dict(e) for e in data["exchanges"]],
            prediction=data["prediction"],
            confidence=data["confidence"],
            action=data["action"],
            plan=[list(item) for item in data["plan"]],
            retrieved=[list(item) for item in data["retrieved"]],
            frames_added=list(data["frames_added"]),
            flags=list(data["flags"]),
            elapsed_ms=data["elapsed_ms"],
        )


@dataclass
class RunTrace:
    """Complete record of one run: per-round records plus the final summary.

    Serialized as line-delimited JSON, one object per round and a trailing
    summary object. The canonical form used for hashing and byte-level
    comparisons drops per-round wall-clock timing, which is the only
    non-deterministic field.
    """

    video_id: str
    question: str
    options: list[str]
    config: dict
    rounds: list[RoundRecord]
    final_answer: int
    total_rounds: int
    frames_seen: int
    degraded: bool

    def summary(self) -> dict:
        return {
            "answer": self.final_answer,
            "rounds": self.total_rounds,
            "frames_seen": self.frames_seen,
            "degraded": self.degraded,
            "video_id": self.video_id,
            "question": self.question,
            "options": self.options,
            "config": self.config,
        }

    def to_lines(self) -> list[str]:
        lines = [json.dumps(r.to_dict(), ensure_ascii=False) for r in self.rounds]
        lines.append(json.dumps(self.summary(), ensure_ascii=False))
        return lines

    def write(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")

    @classmethod
    def from_lines(cls, lines: list[str]) -> "RunTrace":
        records = [json.loads(line) for line in lines if line.strip()]
        if not records or "answer" not in records[-1]:
            raise ValueError("trace must end with a summary object")
        summary = records[-1]
        return cls(
            video_id=summary["video_id"],
            question=summary["question"],
            options=list(summary["options"]),
            config=summary["config"],
            rounds=[RoundRecord.from_dict(r) for r in records[:-1]],
            final_answer=summary["answer"],
            total_rounds=summary["rounds"],
            frames_seen=summary["frames_seen"],
            degraded=summary["degraded"],
        )

    @classmethod
    def read(cls, path: str | Path) -> "RunTrace":
        return cls.from_lines(Path(path).read_text(encoding="utf-8").split("\n"))

    def canonical_bytes(self) -> bytes:
        # timing and retry counts vary run to run; everything else must not
        rounds = []
        for record in self.rounds:
            data = record.to_dict()
            data.pop("elapsed_ms")
            for exchange in data["exchanges"]:
                exchange.pop("attempts", None)
            rounds.append(data)
        blob = {"rounds": rounds, "summary": self.summary()}
        return json.dumps(blob, sort_keys=True, ensure_ascii=False).encode("utf-8")

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


class AgentRunError(RuntimeError):
    """Unrecoverable backend failure; carries the partial trace."""

    def __init__(self, message: str, trace: RunTrace):
        super().__init__(message)
        self.trace = trace


def step(
    state: AgentState,
    assets: VideoAssets,
    question: str,
    options: list[str],
    config: LoopConfig,
    chat,
) -> StepResult:
    """One decision round: predict, optionally reflect, then answer or plan.

    The final round always answers: retrieval there could never inform a
    later prediction, and the frame budget assumes at most T-1 fetches.
    """
    params = config.decoding
    flags: list[str] = []
    exchanges: list[ModelExchange] = []
    final_round = state.round >= config.max_rounds

    bundle = render_predict_prompt(state, question, options, assets.frame_count)
    parsed, predict_ex = ask(
        chat,
        bundle,
        params,
        state.round,
        lambda text: parse_answer(text, len(options)),
        config.reask_limit,
    )
    exchanges.extend(predict_ex)
    rationale = predict_ex[-1].response
    if parsed is None:
        prediction = FALLBACK_ANSWER
        flags.append("predict_fallback")
    else:
        prediction = parsed[0]

    if not config.self_evaluation:
        confidence = 1
    elif not rationale:
        confidence = FALLBACK_CONFIDENCE
        flags.append("reflect_fallback")
    else:
        reflect_bundle = render_reflect_prompt(
            state, question, options, assets.frame_count, prediction, rationale
        )
        conf_parsed, reflect_ex = ask(
            chat, reflect_bundle, params, state.round, parse_confidence, config.reask_limit
        )
        exchanges.extend(reflect_ex)
        if conf_parsed is None:
            confidence = FALLBACK_CONFIDENCE
            flags.append("reflect_fallback")
        else:
            confidence = conf_parsed

    plan: RetrievalPlan | None = None
    if confidence >= config.confidence_threshold or final_round:
        action: Answer | Search = Answer(prediction)
    else:
        segments = partition_segments(list(state.seen), assets.frame_count)
        if not any(segment.candidates for segment in segments):
            action = Answer(prediction)
            flags.append("no_candidates")
        else:
            search_bundle = render_search_prompt(
                state,
                question,
                options,
                assets.frame_count,
                segments,
                use_segments=config.segment_selection,
            )
            plan_parsed, search_ex = ask(
                chat,
                search_bundle,
                params,
                state.round,
                lambda text: parse_plan(
                    text,
                    segments,
                    config.max_queries,
                    whole_range=not config.segment_selection,
                ),
                config.reask_limit,
            )
            exchanges.extend(search_ex)
            if plan_parsed is None:
                plan = RetrievalPlan([])
                flags.append("plan_fallback")
            else:
                plan = plan_parsed
            action = Search(plan) if plan.items else Answer(prediction)

    return StepResult(
        action=action,
        prediction=prediction,
        rationale=rationale,
        confidence=confidence,
        plan=plan,
        exchanges=exchanges,
        flags=flags,
    )


def _round_record(
    round_no: int,
    seen: list[int],
    captions: dict[int, str],
    result: StepResult,
    observation: Observation | None,
    frames_added: list[int],
    elapsed_ms: float,
) -> RoundRecord:
    return RoundRecord(
        round=round_no,
        seen=seen,
        captions=captions,
        exchanges=result.exchanges,
        prediction=result.prediction,
        confidence=result.confidence,
        action="answer" if isinstance(result.action, Answer) else "search",
        plan=[[sid, query] for sid, query in (result.plan.items if result.plan else [])],
        retrieved=[[frame, query] for frame, query in (observation.retrieved if observation else [])],
        frames_added=frames_added,
        flags=result.flags,
        elapsed_ms=elapsed_ms,
    )


def run(
    assets: VideoAssets,
    question: str,
    options: list[str],
    config: LoopConfig,
    backends: Backends,
    trace_path: str | Path | None = None,
) -> RunTrace:
    """Run the full loop on one question and return the trace."""
    caption_backend = backends.captioner if backends.captioner is not None else StoreCaptioner()

    def caption_fn(frame: int) -> str:
        request = CaptionRequest(assets.video_id, frame)
        return caption_frame(caption_backend, assets, request)

    rounds: list[RoundRecord] = []
    degraded = False

    def build_trace(answer: int, state: AgentState) -> RunTrace:
        return RunTrace(
            video_id=assets.video_id,
            question=question,
            options=list(options),
            config=config.to_dict(),
            rounds=rounds,
            final_answer=answer,
            total_rounds=len(rounds),
            frames_seen=len(state.seen),
            degraded=degraded,
        )

    state = AgentState(seen=(), captions_seen={})
    try:
        state = init_state(assets, config.init_frames, caption_fn)
        answer: int | None = None
        no_new_streak = 0
        for round_no in range(1, config.max_rounds + 1):
            started = time.perf_counter()
            state.round = round_no
            seen_before = list(state.seen)
            captions_before = dict(state.captions_seen)
            result = step(state, assets, question, options, config, backends.chat)
            state.last_prediction = result.prediction
            state.last_rationale = result.rationale
            degraded = degraded or bool(DEGRADED_FLAGS & set(result.flags))
            if isinstance(result.action, Answer):
                elapsed = (time.perf_counter() - started) * 1000.0
                rounds.append(
                    _round_record(
                        round_no, seen_before, captions_before, result, None, [], elapsed
                    )
                )
                answer = result.action.index
                break
            if backends.embedder is None:
                raise BackendError("no embedding backend configured for retrieval")
            observation = execute_plan(
                assets,
                result.action.plan,
                state.seen,
                backends.embedder,
                whole_range=not config.segment_selection,
            )
            new_frames = observation.frames()
            if new_frames:
                no_new_streak = 0
                new_captions = {frame: caption_fn(frame) for frame in new_frames}
                state = merge(state, new_captions)
            else:
                no_new_streak += 1
            elapsed = (time.perf_counter() - started) * 1000.0
            rounds.append(
                _round_record(
                    round_no,
                    seen_before,
                    captions_before,
                    result,
                    observation,
                    new_frames,
                    elapsed,
                )
            )
            if no_new_streak >= 2:
                answer = result.prediction
                break
    except BackendError as exc:
        raise AgentRunError(str(exc), build_trace(-1, state)) from exc

    if answer is None:
        answer = state.last_prediction if state.last_prediction is not None else FALLBACK_ANSWER
    trace = build_trace(answer, state)
    if trace_path is not None:
        trace.write(trace_path)
    return trace
