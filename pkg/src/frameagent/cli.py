"""Command-line interface: answer one question, benchmark a dataset, validate
bundles, and pretty-print traces.

Exit codes: 0 on success, 2 when the answer came from a parse fallback
(degraded), 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .agent import AgentRunError, Backends, LoopConfig, RunTrace, run
from .assets import AssetError, read_assets, load_assets, validate_assets
from .bench import evaluate, load_dataset, sweep, uniform_baseline
from .captioner import HttpCaptioner
from .errors import BackendError
from .llm import (
    DecodingParams,
    HttpChatBackend,
    ReplayCacheBackend,
    ScriptedChatBackend,
)
from .retrieval import HashEmbedder, HttpEmbedder

DEFAULT_MODEL = "gpt-4-1106-preview"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGRADED = 2


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage mistakes are errors, and errors exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_ERROR)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--llm-endpoint", help="chat completion endpoint URL")
    parser.add_argument("--model", help=f"model name sent to the endpoint (default {DEFAULT_MODEL})")
    parser.add_argument("--embed-endpoint", help="text embedding endpoint URL")
    parser.add_argument("--caption-endpoint", help="frame caption endpoint URL")
    parser.add_argument("--mock-script", help="JSON file of scripted chat responses")
    parser.add_argument("--replay-cache", help="directory for cached chat responses")
    parser.add_argument("--init-frames", type=int, help="frames sampled before round 1")
    parser.add_argument("--max-rounds", type=int, help="maximum decision rounds")
    parser.add_argument("--confidence-threshold", type=int, help="confidence needed to answer")
    parser.add_argument("--max-queries", type=int, help="retrieval queries per round")
    parser.add_argument("--no-self-eval", action="store_true", help="skip the confidence check")
    parser.add_argument("--no-segments", action="store_true", help="search the whole unseen range")
    parser.add_argument("--trace-out", help="write the run trace to this file")
    parser.add_argument("--workers", type=int, help="parallel questions for bench")
    parser.add_argument("--config", help="JSON config file (flags take precedence)")


def _load_file_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    return data


def _pick(flag_value, file_cfg: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    if key in file_cfg:
        return file_cfg[key]
    return default


def build_loop_config(args, file_cfg: dict) -> LoopConfig:
    defaults = LoopConfig()
    self_evaluation = defaults.self_evaluation
    if "self_evaluation" in file_cfg:
        self_evaluation = bool(file_cfg["self_evaluation"])
    if args.no_self_eval:
        self_evaluation = False
    segment_selection = defaults.segment_selection
    if "segment_selection" in file_cfg:
        segment_selection = bool(file_cfg["segment_selection"])
    if args.no_segments:
        segment_selection = False
    decoding = DecodingParams(
        temperature=float(file_cfg.get("temperature", 0.0)),
        max_tokens=file_cfg.get("max_tokens"),
        seed=file_cfg.get("seed", 0),
    )
    try:
        return LoopConfig(
            init_frames=_pick(args.init_frames, file_cfg, "init_frames", defaults.init_frames),
            max_rounds=_pick(args.max_rounds, file_cfg, "max_rounds", defaults.max_rounds),
            confidence_threshold=_pick(
                args.confidence_threshold, file_cfg, "confidence_threshold",
                defaults.confidence_threshold,
            ),
            max_queries=_pick(args.max_queries, file_cfg, "max_queries", defaults.max_queries),
            self_evaluation=self_evaluation,
            segment_selection=segment_selection,
            reask_limit=file_cfg.get("reask_limit", defaults.reask_limit),
            net_retries=file_cfg.get("net_retries", defaults.net_retries),
            decoding=decoding,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def build_backends(args, file_cfg: dict, config: LoopConfig, embed_dim: int | None) -> Backends:
    """Wire chat, embedding, and caption backends from the merged settings.

    The API key comes from FRAMEAGENT_API_KEY; no flag carries it.
    """
    mock_script = _pick(args.mock_script, file_cfg, "mock_script", None)
    llm_endpoint = _pick(args.llm_endpoint, file_cfg, "llm_endpoint", None)
    if mock_script:
        chat = ScriptedChatBackend.from_file(mock_script)
    elif llm_endpoint:
        chat = HttpChatBackend(
            llm_endpoint,
            model=_pick(args.model, file_cfg, "model", DEFAULT_MODEL),
            retries=config.net_retries,
        )
    else:
        raise CliError("no chat backend: pass --llm-endpoint or --mock-script")
    replay_cache = _pick(args.replay_cache, file_cfg, "replay_cache", None)
    if replay_cache:
        chat = ReplayCacheBackend(replay_cache, inner=chat)

    embed_endpoint = _pick(args.embed_endpoint, file_cfg, "embed_endpoint", None)
    if embed_endpoint:
        embedder = HttpEmbedder(embed_endpoint, retries=config.net_retries)
    elif embed_dim is not None:
        embedder = HashEmbedder(embed_dim)
    else:
        embedder = None

    caption_endpoint = _pick(args.caption_endpoint, file_cfg, "caption_endpoint", None)
    captioner = HttpCaptioner(caption_endpoint, retries=config.net_retries) if caption_endpoint else None
    return Backends(chat=chat, embedder=embedder, captioner=captioner)


def cmd_answer(args) -> int:
    file_cfg = _load_file_config(args.config)
    config = build_loop_config(args, file_cfg)
    assets = load_assets(args.assets)
    use_hash_embedder = not _pick(args.embed_endpoint, file_cfg, "embed_endpoint", None)
    backends = build_backends(
        args, file_cfg, config, assets.dim if use_hash_embedder else None
    )
    if len(args.option) < 2:
        raise CliError("provide at least two --option values")
    try:
        trace = run(
            assets, args.question, list(args.option), config, backends,
            trace_path=args.trace_out,
        )
    except AgentRunError as exc:
        if args.trace_out:
            exc.trace.write(args.trace_out)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(trace.final_answer)
    print(trace.options[trace.final_answer])
    return EXIT_DEGRADED if trace.degraded else EXIT_OK


def _bundle_dims(assets_root: str, items) -> int | None:
    dims = set()
    for item in items:
        bundle = Path(assets_root) / item.video_id
        if bundle.is_dir():
            try:
                dims.add(read_assets(bundle).dim)
            except AssetError:
                continue
    if len(dims) > 1:
        raise CliError(
            "mock embedder needs a uniform embedding dimension across bundles"
        )
    return dims.pop() if dims else None


def cmd_bench(args) -> int:
    file_cfg = _load_file_config(args.config)
    config = build_loop_config(args, file_cfg)
    items = load_dataset(args.dataset)
    if not items:
        print("error: dataset is empty", file=sys.stderr)
        return EXIT_ERROR
    use_hash_embedder = not _pick(args.embed_endpoint, file_cfg, "embed_endpoint", None)
    embed_dim = _bundle_dims(args.assets, items) if use_hash_embedder else None
    backends = build_backends(args, file_cfg, config, embed_dim)
    workers = _pick(args.workers, file_cfg, "workers", 1)
    if args.axis:
        values = [int(v) for v in args.values.split(",")] if args.values else []
        if not values:
            raise CliError("--axis requires --values, e.g. --values 1,2,3")
        csv_path = f"{args.out}.csv" if args.out else None
        results = sweep(
            items, args.assets, args.axis, values, config, backends,
            csv_path=csv_path, workers=workers,
        )
        for value, metrics in results:
            print(f"{args.axis}={value}: {metrics.summary_line()}")
        if args.out:
            payload = [
                {"axis": args.axis, "value": value, **metrics.to_dict()}
                for value, metrics in results
            ]
            Path(f"{args.out}.json").write_text(
                json.dumps(payload, indent=2) + "\n", encoding="utf-8"
            )
        return EXIT_OK
    if args.baseline is not None:
        metrics = uniform_baseline(
            items, args.assets, args.baseline, backends, config=config, workers=workers
        )
    else:
        metrics = evaluate(
            items, args.assets, config, backends,
            workers=workers, trace_dir=args.trace_dir,
        )
    print(metrics.summary_line())
    if metrics.skipped:
        print(f"skipped {len(metrics.skipped)}: {', '.join(metrics.skipped)}", file=sys.stderr)
    if args.out:
        Path(f"{args.out}.json").write_text(
            json.dumps(metrics.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        assets = read_assets(args.assets)
    except AssetError as exc:
        print(f"invalid bundle: {exc}")
        return EXIT_ERROR
    report = validate_assets(assets)
    if report:
        for entry in report:
            print(entry)
        return EXIT_ERROR
    print("OK")
    return EXIT_OK


def cmd_trace(args) -> int:
    try:
        trace = RunTrace.read(args.trace_file)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"video: {trace.video_id}")
    print(f"question: {trace.question}")
    for i, option in enumerate(trace.options):
        print(f"  {i}. {option}")
    for record in trace.rounds:
        line = (
            f"round {record.round}: seen={len(record.seen)} action={record.action} "
            f"prediction={record.prediction} confidence={record.confidence}"
        )
        if record.retrieved:
            line += f" retrieved={[frame for frame, _ in record.retrieved]}"
        if record.flags:
            line += f" flags={record.flags}"
        print(line)
        if args.full:
            for exchange in record.exchanges:
                print(f"  -- {exchange.kind} (attempts={exchange.attempts})")
                for message in exchange.messages:
                    print(f"  [{message['role']}]")
                    print("  " + message["content"].replace("\n", "\n  "))
                print("  [response]")
                print("  " + exchange.response.replace("\n", "\n  "))
    print(
        f"answer={trace.final_answer} rounds={trace.total_rounds} "
        f"frames_seen={trace.frames_seen} degraded={trace.degraded}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="frameagent", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_answer = sub.add_parser("answer", help="answer one question about one video")
    p_answer.add_argument("--assets", required=True, help="asset bundle directory")
    p_answer.add_argument("--question", required=True)
    p_answer.add_argument(
        "--option", action="append", default=[], help="answer option (repeat per option)"
    )
    _add_common_flags(p_answer)

    p_bench = sub.add_parser("bench", help="evaluate a dataset")
    p_bench.add_argument("--dataset", required=True, help="line-JSON dataset file")
    p_bench.add_argument("--assets", required=True, help="root directory of bundles")
    p_bench.add_argument("--axis", choices=("rounds", "init_frames", "budget"))
    p_bench.add_argument("--values", help="comma-separated sweep values")
    p_bench.add_argument("--baseline", type=int, help="uniform baseline frame budget")
    p_bench.add_argument("--out", help="output prefix for metrics JSON/CSV")
    p_bench.add_argument("--trace-dir", help="write per-question traces here")
    _add_common_flags(p_bench)

    p_validate = sub.add_parser("validate", help="check a bundle against the format")
    p_validate.add_argument("--assets", required=True, help="asset bundle directory")

    p_trace = sub.add_parser("trace", help="pretty-print a run trace")
    p_trace.add_argument("trace_file")
    p_trace.add_argument("--full", action="store_true", help="include prompts and responses")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "answer": cmd_answer,
        "bench": cmd_bench,
        "validate": cmd_validate,
        "trace": cmd_trace,
    }
    try:
        return handlers[args.command](args)
    except (CliError, AssetError, BackendError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
