"""Command-line interface.

Subcommands: ``fit`` (corpus -> n-gram model file), ``search`` (one-shot
decode), ``experiment`` (strategy matrix -> CSV report), ``serve`` (HTTP
session service), ``oracle`` (exact enumeration baselines on a fixture).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import build_vocab, load_corpus
from .errors import ConfigurationError, EnumerationCapError, IngestionError, SearchError
from .experiment import ExperimentCell, expand_matrix, run_experiment
from .metrics import format_report, rows_to_csv
from .models import fit_ngram
from .multiturn import trace_to_dict
from .oracle import (
    OracleParams,
    oracle_conservative_argmax,
    oracle_optimistic_argmax,
    oracle_utterance_argmax,
)
from .registry import ModelRegistry, load_model_file, save_model_file
from .search import greedy_search
from .session import Engine, SessionConfig
from .types import SpeakerRole


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, help="model id (registry) or path to a model file")
    parser.add_argument("--models-dir", default=None, help="directory of additional model files")


def _resolve_registry(args) -> ModelRegistry:
    return ModelRegistry.load(args.models_dir)


def _resolve_model_id(args, registry: ModelRegistry) -> str:
    """Accept either a registry id or a filesystem path."""
    if args.model in registry:
        return args.model
    path = Path(args.model)
    if path.exists():
        registry.register(path.stem, load_model_file(path))
        return path.stem
    raise ConfigurationError(f"model {args.model!r} is neither a registry id nor a file")


def _engine_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--algorithm", choices=("greedy", "beam", "iterbeam"), default="beam")
    parser.add_argument("--width", type=int, default=10, help="beam width K")
    parser.add_argument("--steps", type=int, default=0, help="lookahead steps L")
    parser.add_argument("--max-tokens", type=int, default=20, help="token budget T per utterance")
    parser.add_argument("--iterations", type=int, default=4)
    parser.add_argument("--similarity-threshold", type=int, default=3)
    parser.add_argument(
        "--partner", choices=("mindless", "egocentric", "transparent"), default="egocentric"
    )
    parser.add_argument("--mindless-model", default=None, help="model id for the mindless partner")
    parser.add_argument("--self-context", action="append", default=[], help="self persona line (repeatable)")
    parser.add_argument("--partner-context", action="append", default=[], help="partner persona line (repeatable)")


def _session_config(args, model_id: str) -> SessionConfig:
    return SessionConfig(
        model=model_id,
        partner=args.partner,
        algorithm=args.algorithm if args.algorithm != "greedy" else "beam",
        width=args.width,
        steps=args.steps,
        max_tokens=args.max_tokens,
        iterations=args.iterations,
        similarity_threshold=args.similarity_threshold,
        self_context=tuple(args.self_context),
        partner_context=tuple(args.partner_context),
        mindless_model=args.mindless_model,
    )


def cmd_fit(args) -> int:
    vocab = build_vocab(args.corpus, eos=args.eos)
    corpus = load_corpus(args.corpus, vocab)
    model = fit_ngram(
        corpus,
        order=args.order,
        alpha=args.alpha,
        vocab=vocab,
        role=SpeakerRole(args.role),
        use_context=not args.no_context,
    )
    save_model_file(model, args.output)
    print(f"fitted order-{args.order} model on {len(corpus)} conversations "
          f"({len(vocab)} tokens) -> {args.output}")
    return 0


def cmd_search(args) -> int:
    registry = _resolve_registry(args)
    model_id = _resolve_model_id(args, registry)
    config = _session_config(args, model_id)
    engine = Engine(config, registry)
    vocab = engine.vocab
    conversation = engine.empty_conversation()

    if args.algorithm == "greedy":
        if args.steps > 0:
            raise ConfigurationError("greedy search returns one candidate; lookahead needs beam or iterbeam")
        result = greedy_search(engine.model, conversation, SpeakerRole.SELF, engine.self_context, args.max_tokens)
        print(f"{result.logprob:+.6f}  {result.utterance.text(vocab)}")
        return 0

    chosen, trace = engine.reply(conversation)
    print("candidates (utterance level):")
    for entry in trace.h0.entries:
        marker = "*" if entry.root_index == trace.selected_root_index else " "
        print(f"  {marker} [{entry.root_index}] {entry.score:+.6f}  {entry.utterances[0].text(vocab)}")
    print(f"chosen: {chosen.utterance.text(vocab)}  (rank {trace.selected_rank_in_h0} in H0, "
          f"logprob {chosen.logprob:+.6f})")
    if args.trace_out:
        Path(args.trace_out).write_text(json.dumps(trace_to_dict(trace, vocab), indent=2) + "\n")
        print(f"trace written to {args.trace_out}")
    return 0


def cmd_experiment(args) -> int:
    registry = _resolve_registry(args)
    model_id = _resolve_model_id(args, registry)
    model = registry.get(model_id)
    vocab = model.vocab
    corpus = load_corpus(args.corpus, vocab)
    if args.matrix:
        matrix = json.loads(Path(args.matrix).read_text(encoding="utf-8"))
    else:
        matrix = {}
    cells = expand_matrix(matrix)
    mindless = registry.get(args.mindless_model) if args.mindless_model else None
    rows = run_experiment(model, corpus, cells, mindless_model=mindless, seed=args.seed, limit=args.limit)
    csv_text = rows_to_csv(rows)
    if args.output:
        Path(args.output).write_text(csv_text, encoding="utf-8")
        print(f"wrote {len(rows)} strategy rows to {args.output}")
    else:
        sys.stdout.write(csv_text)
    sys.stdout.write(format_report(rows))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir, models_dir=args.models_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_oracle(args) -> int:
    registry = _resolve_registry(args)
    model_id = _resolve_model_id(args, registry)
    config = _session_config(args, model_id)
    engine = Engine(config, registry)
    vocab = engine.vocab
    conversation = engine.empty_conversation()
    params = OracleParams(max_tokens=args.max_tokens, steps=args.steps, cap=args.cap)

    utt = oracle_utterance_argmax(engine.model, conversation, SpeakerRole.SELF, engine.self_context, params)
    print(f"utterance-level argmax:    {utt.logprob:+.6f}  {utt.utterance.text(vocab)}")
    opt = oracle_optimistic_argmax(engine.model, engine.partner, conversation, engine.self_context, params)
    print(f"optimistic argmax (L={args.steps}):   {opt.logprob:+.6f}  {opt.utterance.text(vocab)}")
    cons = oracle_conservative_argmax(engine.model, engine.partner, conversation, engine.self_context, params)
    print(f"conservative argmax (L={args.steps}): {cons.logprob:+.6f}  {cons.utterance.text(vocab)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convsearch", description=__doc__)
    parser.add_argument("--version", action="version", version=f"convsearch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit an n-gram model from a JSONL corpus")
    p_fit.add_argument("corpus", help="corpus file (JSONL, one conversation per line)")
    p_fit.add_argument("-o", "--output", required=True, help="output model file (JSON)")
    p_fit.add_argument("--order", type=int, default=1, help="conditioning window length")
    p_fit.add_argument("--alpha", type=float, default=1.0, help="additive smoothing constant")
    p_fit.add_argument("--role", choices=("self", "partner"), default="self")
    p_fit.add_argument("--no-context", action="store_true", help="ignore persona context (mindless)")
    p_fit.add_argument("--eos", default="</s>")
    p_fit.set_defaults(func=cmd_fit)

    p_search = sub.add_parser("search", help="one-shot decode; prints candidates")
    _add_model_args(p_search)
    _engine_args(p_search)
    p_search.add_argument("--trace-out", default=None, help="write the search trace JSON here")
    p_search.set_defaults(func=cmd_search)

    p_exp = sub.add_parser("experiment", help="run a strategy matrix over a corpus")
    _add_model_args(p_exp)
    p_exp.add_argument("--corpus", required=True)
    p_exp.add_argument("--matrix", default=None, help="matrix JSON (default: full grid)")
    p_exp.add_argument("--mindless-model", default=None)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--limit", type=int, default=None, help="subsample this many conversations")
    p_exp.add_argument("-o", "--output", default=None, help="CSV output path (default: stdout)")
    p_exp.set_defaults(func=cmd_experiment)

    p_serve = sub.add_parser("serve", help="run the HTTP session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--models-dir", default=None)
    p_serve.add_argument("--data-dir", default=".convsearch")
    p_serve.add_argument("--ui-dir", default=None, help="serve a built web UI at /ui")
    p_serve.set_defaults(func=cmd_serve)

    p_oracle = sub.add_parser("oracle", help="run the exact oracles on a model")
    _add_model_args(p_oracle)
    _engine_args(p_oracle)
    p_oracle.add_argument("--cap", type=int, default=200_000, help="enumeration safety cap")
    p_oracle.set_defaults(func=cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, IngestionError, SearchError, EnumerationCapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
