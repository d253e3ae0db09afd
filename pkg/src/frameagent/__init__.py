"""Iterative frame-selection engine for long-video multiple-choice QA.

The agent starts from a sparse uniform sample of captioned frames, predicts
an answer, self-assesses its confidence, and retrieves additional frames by
similarity search until it is confident or out of rounds.
"""

from .agent import (
    AgentRunError,
    Answer,
    Backends,
    LoopConfig,
    RunTrace,
    Search,
    run,
    step,
)
from .assets import AssetError, VideoAssets, load_assets, validate_assets, write_assets
from .bench import (
    CostParams,
    Metrics,
    QAItem,
    cost_fraction,
    evaluate,
    load_dataset,
    sweep,
    uniform_baseline,
)
from .errors import BackendError, ParseFailure
from .llm import (
    DecodingParams,
    HttpChatBackend,
    ModelExchange,
    PromptBundle,
    ReplayCacheBackend,
    ScriptedChatBackend,
    parse_answer,
    parse_confidence,
    parse_plan,
    render_predict_prompt,
    render_reflect_prompt,
    render_search_prompt,
)
from .retrieval import (
    HashEmbedder,
    HttpEmbedder,
    Observation,
    RetrievalPlan,
    Segment,
    TableEmbedder,
    execute_plan,
    partition_segments,
    retrieve_in_segment,
)
from .state import AgentState, init_state, merge, render_caption_map, uniform_sample

__version__ = "0.1.0"
