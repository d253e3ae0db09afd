"""Prompt rendering, chat backends, and lenient response parsing.

The three prompt templates are load-bearing: downstream tests compare their
rendered output byte for byte, so the wording (including the duplicated
"as as", the "suffient" spelling, and the closing U+2019 quote in the
confidence schema) must not be edited.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from ._http import post_json
from .errors import BackendError, ParseFailure
from .retrieval import RetrievalPlan, Segment
from .state import AgentState, render_caption_map

REASK_MESSAGE = "Respond with only the JSON object."

_WORDS = {
    1: "one", 2: "two", 3: "three", 4: "four", 5: "five", 6: "six",
    7: "seven", 8: "eight", 9: "nine", 10: "ten", 11: "eleven", 12: "twelve",
    13: "thirteen", 14: "fourteen", 15: "fifteen", 16: "sixteen",
    17: "seventeen", 18: "eighteen", 19: "nineteen", 20: "twenty",
}
_TENS = {20: "twenty", 30: "thirty", 40: "forty", 50: "fifty", 60: "sixty",
         70: "seventy", 80: "eighty", 90: "ninety"}


def spell_count(n: int) -> str:
    """English word for a count, falling back to digits past ninety-nine."""
    if n in _WORDS:
        return _WORDS[n]
    if 20 < n < 100:
        tens, ones = divmod(n, 10)
        word = _TENS[tens * 10]
        return f"{word}-{_WORDS[ones]}" if ones else word
    return str(n)


@dataclass(frozen=True)
class PromptBundle:
    kind: str
    text: str

    def messages(self) -> list[dict[str, str]]:
        return [{"role": "user", "content": self.text}]


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    max_tokens: int | None = None
    seed: int | None = 0

    def to_payload(self) -> dict:
        payload: dict = {"temperature": self.temperature}
        if self.max_tokens is not None:
            payload["max_tokens"] = self.max_tokens
        if self.seed is not None:
            payload["seed"] = self.seed
        return payload


_PREDICT_TEMPLATE = (
    "Given a video that has {length} frames, the frames are decoded at 1 fps. "
    "Given the following descriptions of the sampled frames in the video:\n"
    "{caption_map}\n"
    "Please answer the following question:\n"
    "```\n"
    "{question_block}\n"
    "```\n"
    "Please think step-by-step and write the best answer index in Json format "
    "{{'final_answer': 'xxx'}}. Note that only one answer is returned for the question."
)

_REFLECT_TEMPLATE = (
    "Please assess the confidence level in the decision-making process.\n"
    "The provided information is as as follows,\n"
    "{provided}\n"
    "The decision making process is as follows,\n"
    "{rationale}\n"
    "Criteria for Evaluation:\n"
    "Insufficient Information (Confidence Level: 1): If information is too lacking "
    "for a reasonable conclusion.\n"
    "Partial Information (Confidence Level: 2): If information partially supports "
    "an informed guess.\n"
    "Sufficient Information (Confidence Level: 3): If information fully supports "
    "a well-informed decision.\n"
    "Assessment Focus:\n"
    "Evaluate based on the relevance, completeness, and clarity of the provided "
    "information in relation to the decision-making context.\n"
    "Please generate the confidence with JSON format {{'confidence': 'xxx’}}"
)

_SEARCH_TEMPLATE = (
    "Given a video that has {length} frames, the frames are decoded at 1 fps. "
    "Given the following descriptions of {count} uniformly sampled frames in the video:\n"
    "{caption_map}\n"
    "To answer the following question:\n"
    "```\n"
    "{question_block}\n"
    "```\n"
    "However, the information in the initial {count} frames is not suffient.\n"
    "Objective:\n"
    "Our goal is to identify additional frames that contain crucial information "
    "necessary for answering the question. These frames should not only address "
    "the query directly but should also complement the insights gleaned from the "
    "descriptions of the initial {count} frames.\n"
    "To achieve this, we will:\n"
    "{divide_step}\n"
    "2. Determine which segments are likely to contain frames that are most "
    "relevant to the question. These frames should capture key visual elements, "
    "such as objects, humans, interactions, actions, and scenes, that are "
    "supportive to answer the question.\n"
    "For each frame identified as potentially relevant, provide a concise "
    "description focusing on essential visual elements. Use a single sentence "
    "per frame. If the specifics of a segment's visual content are uncertain "
    "based on the current information, use placeholders for specific actions or "
    "objects, but ensure the description still conveys the segment's relevance "
    "to the query.\n"
    "Select multiple frames from one segment if necessary to gather "
    "comprehensive insights.\n"
    "```\n"
    "{schema}"
)

_DIVIDE_STEP = (
    "1. Divide the video into {segments} segments based on the intervals "
    "between the initial {count} frames."
)
_DIVIDE_STEP_WHOLE = "1. Consider the whole video as one segment."


def _question_block(question: str, options: Sequence[str]) -> str:
    lines = [question]
    lines.extend(f"{i}. {option}" for i, option in enumerate(options))
    return "\n".join(lines)


def render_predict_prompt(
    state: AgentState, question: str, options: Sequence[str], length: int
) -> PromptBundle:
    """The answer-this-question prompt over the current caption map."""
    if not options:
        raise ValueError("question has no options")
    text = _PREDICT_TEMPLATE.format(
        length=length,
        caption_map=render_caption_map(state.captions_seen),
        question_block=_question_block(question, options),
    )
    return PromptBundle(kind="predict", text=text)


def render_reflect_prompt(
    state: AgentState,
    question: str,
    options: Sequence[str],
    length: int,
    prediction: int | None,
    rationale: str | None,
) -> PromptBundle:
    """The confidence self-assessment over the predict prompt and its answer."""
    if prediction is None or not rationale:
        raise ValueError("reflection requires the round's prediction and rationale")
    provided = render_predict_prompt(state, question, options, length).text
    text = _REFLECT_TEMPLATE.format(provided=provided, rationale=rationale)
    return PromptBundle(kind="reflect", text=text)


def render_search_prompt(
    state: AgentState,
    question: str,
    options: Sequence[str],
    length: int,
    segments: Sequence[Segment],
    use_segments: bool = True,
) -> PromptBundle:
    """The find-missing-frames prompt listing the selectable segments.

    Empty segments are left out of both the id menu and the spelled segment
    count so the instruction text never offers an unusable target.
    """
    non_empty = [segment for segment in segments if segment.candidates]
    if not non_empty:
        raise ValueError("no non-empty segments to search")
    count = spell_count(len(state.seen))
    if use_segments:
        divide = _DIVIDE_STEP.format(
            segments=spell_count(len(non_empty)), count=count
        )
        menu = "/".join(str(segment.index) for segment in non_empty)
    else:
        divide = _DIVIDE_STEP_WHOLE
        menu = "1"
    item = (
        f"{{'segment_id': '{menu}', 'duration': 'xxx - xxx', "
        f"'description': 'frame of xxx'}}"
    )
    schema = "{'frame_descriptions': [" + ", ".join([item] * 3) + "]}"
    text = _SEARCH_TEMPLATE.format(
        length=length,
        count=count,
        caption_map=render_caption_map(state.captions_seen),
        question_block=_question_block(question, options),
        divide_step=divide,
        schema=schema,
    )
    return PromptBundle(kind="search", text=text)


@dataclass
class ModelExchange:
    """One request/response pair, recorded verbatim for replay and tracing."""

    kind: str
    round: int
    messages: list[dict[str, str]]
    params: dict
    response: str
    attempts: int

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "round": self.round,
            "messages": self.messages,
            "params": self.params,
            "response": self.response,
            "attempts": self.attempts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelExchange":
        return cls(
            kind=data["kind"],
            round=data["round"],
            messages=data["messages"],
            params=data["params"],
            response=data["response"],
            attempts=data["attempts"],
        )


class HttpChatBackend:
    """OpenAI-style chat endpoint speaking the documented request subset."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 120.0,
        retries: int = 3,
        backoff: float = 0.5,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get("FRAMEAGENT_API_KEY")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def complete(
        self,
        messages: list[dict[str, str]],
        params: DecodingParams,
        kind: str,
        round_no: int,
    ) -> tuple[str, int]:
        payload = {"model": self.model, "messages": messages}
        payload.update(params.to_payload())
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body, attempts = post_json(
            self.endpoint,
            payload,
            headers=headers,
            timeout=self.timeout,
            retries=self.retries,
            backoff=self.backoff,
        )
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BackendError(f"malformed chat response from {self.endpoint}") from None
        if not isinstance(text, str):
            raise BackendError(f"chat response content is not text: {type(text).__name__}")
        return text, attempts


class ScriptedChatBackend:
    """Deterministic backend driven by a {"kind:round": response} table."""

    def __init__(self, script: dict[str, str]):
        self.script = dict(script)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedChatBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise BackendError(f"mock script {path} must be a JSON object")
        return cls({str(k): str(v) for k, v in data.items()})

    def complete(
        self,
        messages: list[dict[str, str]],
        params: DecodingParams,
        kind: str,
        round_no: int,
    ) -> tuple[str, int]:
        key = f"{kind}:{round_no}"
        if key not in self.script:
            raise BackendError(f"scripted mock has no entry for '{key}'")
        return self.script[key], 1


class ReplayCacheBackend:
    """Content-addressed response cache wrapped around another chat backend.

    Cache hits report attempts=0 and make no network calls; misses delegate
    to the inner backend and persist the response atomically.
    """

    def __init__(self, cache_dir: str | Path, inner=None):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.inner = inner

    def _key(
        self, messages: list[dict[str, str]], params: DecodingParams, kind: str
    ) -> str:
        blob = json.dumps(
            {"kind": kind, "params": params.to_payload(), "messages": messages},
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def complete(
        self,
        messages: list[dict[str, str]],
        params: DecodingParams,
        kind: str,
        round_no: int,
    ) -> tuple[str, int]:
        path = self.cache_dir / f"{self._key(messages, params, kind)}.txt"
        if path.is_file():
            return path.read_text(encoding="utf-8"), 0
        if self.inner is None:
            raise BackendError(f"replay cache miss for {kind} and no inner backend")
        text, attempts = self.inner.complete(messages, params, kind, round_no)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
        return text, attempts


def complete(
    backend,
    messages: list[dict[str, str]],
    params: DecodingParams,
    kind: str,
    round_no: int,
) -> ModelExchange:
    """Run one chat call and record it verbatim."""
    text, attempts = backend.complete(messages, params, kind, round_no)
    return ModelExchange(
        kind=kind,
        round=round_no,
        messages=[dict(m) for m in messages],
        params=params.to_payload(),
        response=text,
        attempts=attempts,
    )


def ask(
    backend,
    bundle: PromptBundle,
    params: DecodingParams,
    round_no: int,
    parser: Callable[[str], object],
    reasks: int = 2,
) -> tuple[object | None, list[ModelExchange]]:
    """Call the model and parse, re-asking a bounded number of times.

    Returns (parsed value, exchanges); the value is None when every attempt
    failed to parse, and the caller applies its fallback policy.
    """
    messages = bundle.messages()
    exchanges: list[ModelExchange] = []
    for _ in range(reasks + 1):
        exchange = complete(backend, messages, params, bundle.kind, round_no)
        exchanges.append(exchange)
        try:
            return parser(exchange.response), exchanges
        except ParseFailure:
            messages = messages + [
                {"role": "assistant", "content": exchange.response},
                {"role": "user", "content": REASK_MESSAGE},
            ]
    return None, exchanges


def _brace_spans(text: str) -> list[tuple[int, int]]:
    """Balanced top-level {...} spans, tolerant of arbitrary surrounding bytes."""
    spans = []
    depth = 0
    start = -1
    for i, ch in enumerate(text):
        if ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                spans.append((start, i + 1))
    return spans


def _find_list_end(text: str, open_idx: int) -> int | None:
    depth = 0
    for i in range(open_idx, len(text)):
        if text[i] == "[":
            depth += 1
        elif text[i] == "]":
            depth -= 1
            if depth == 0:
                return i
    return None


_ANSWER_RE = re.compile(
    r"['\"]?final_answer['\"]?\s*:\s*(?:['\"]\s*(-?\d+)\s*['\"]|(-?\d+))"
)
_CONF_RE = re.compile(
    r"['\"]?confidence['\"]?\s*:\s*['\"‘’]?\s*(-?\d+)\s*['\"‘’]?"
)
_SEG_RE = re.compile(r"['\"]?segment_id['\"]?\s*:\s*['\"]?\s*(-?\d+)")
_DESC_RE = re.compile(
    r"['\"]?description['\"]?\s*:\s*(?:\"(?P<dq>(?:[^\"\\]|\\.)*)\"|'(?P<sq>[^']*)')"
)


def parse_answer(text: str, num_options: int) -> tuple[int, str]:
    """Extract (answer index, preceding rationale) from a model response.

    The last map literal carrying the answer key wins; its index must fall
    within the option range.
    """
    for start, end in reversed(_brace_spans(text)):
        match = _ANSWER_RE.search(text[start:end])
        if match is None:
            continue
        value = int(match.group(1) or match.group(2))
        if not 0 <= value < num_options:
            raise ParseFailure(f"answer index out of range: {value}")
        return value, text[:start]
    raise ParseFailure("no answer literal found")


def parse_confidence(text: str) -> int:
    """Extract the confidence level; only 1, 2, and 3 are legal."""
    for start, end in reversed(_brace_spans(text)):
        match = _CONF_RE.search(text[start:end])
        if match is None:
            continue
        value = int(match.group(1))
        if value not in (1, 2, 3):
            raise ParseFailure(f"confidence out of range: {value}")
        return value
    raise ParseFailure("no confidence literal found")


def parse_plan(
    text: str,
    segments: Sequence[Segment],
    max_queries: int,
    whole_range: bool = False,
) -> RetrievalPlan:
    """Extract ordered (segment id, description) pairs from a search response.

    Items naming a segment that is not live and non-empty are dropped; the
    remainder is truncated to the per-round query cap. An empty list parses
    successfully, which the controller treats as answer-now.
    """
    if whole_range:
        valid = {1}
    else:
        valid = {segment.index for segment in segments if segment.candidates}
    matches = list(re.finditer(r"['\"]?frame_descriptions['\"]?\s*:\s*\[", text))
    for match in reversed(matches):
        closing = _find_list_end(text, match.end() - 1)
        if closing is None:
            continue
        body = text[match.end(): closing]
        items: list[tuple[int, str]] = []
        for start, end in _brace_spans(body):
            chunk = body[start:end]
            seg_match = _SEG_RE.search(chunk)
            desc_match = _DESC_RE.search(chunk)
            if seg_match is None or desc_match is None:
                continue
            segment_id = int(seg_match.group(1))
            if segment_id not in valid:
                continue
            description = desc_match.group("dq")
            if description is not None:
                description = description.replace('\\"', '"').replace("\\\\", "\\")
            else:
                description = desc_match.group("sq") or ""
            items.append((segment_id, description))
        return RetrievalPlan(items[:max_queries])
    raise ParseFailure("no frame_descriptions literal found")
