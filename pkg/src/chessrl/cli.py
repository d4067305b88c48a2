"""chessrl command line: one entry point wiring every pipeline stage.

Machine-readable output (JSONL records or a single JSON document) goes to
stdout or --out; progress and human summaries go to stderr.  Exit codes:
0 success, 1 runtime failure (with a one-line `Category: message` on
stderr), 2 usage errors.  Flags can come from a JSON config file (--config
or CHESSRL_CONFIG) and CHESSRL_* environment variables; precedence is
flags > environment > file > defaults.
"""

from __future__ import annotations

import json
import logging
import random
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .core import parse_fen, perft as run_perft, start_position, to_fen
from .critics import HeuristicCritic, OracleCritic, UciEngineCritic
from .errors import ChessrlError
from .evaluation import (
    EvalConfig,
    GreedyCriticAgent,
    OracleAgent,
    PolicyAgent,
    RandomAgent,
    corpus_fens,
    eval_puzzles,
    gen_tasks,
    grade_transcripts,
)
from .grpo import TrainConfig, load_checkpoint, train
from .prompts import PROMPT_CONFIGS, render_prompt
from .puzzles import (
    IngestReport,
    build_dataset,
    decompose as decompose_puzzle,
    ingest_csv,
    read_samples,
    sample_to_record,
)
from .service import Backends, ScoreItem, ScoreRequest, ServiceConfig, score_batch, serve as run_service


def _out_stream(out: str | None):
    return open(out, "w", encoding="utf-8") if out else sys.stdout


def _emit(fh, record: dict) -> None:
    fh.write(json.dumps(record, sort_keys=True) + "\n")


def _read_jsonl(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def _load_default_map(ctx: click.Context, param, value):
    if value is None:
        import os

        value = os.environ.get("CHESSRL_CONFIG")
    if value:
        ctx.default_map = json.loads(Path(value).read_text())
    return value


@click.group(context_settings={"auto_envvar_prefix": "CHESSRL"})
@click.version_option(__version__)
@click.option("--config", callback=_load_default_map, expose_value=True, is_eager=True,
              default=None, help="JSON config file supplying flag defaults.")
@click.option("--log-level", default="WARNING", show_default=True,
              help="Root log level for stderr logging.")
@click.option("--threads", default=2, show_default=True,
              help="Upper bound for worker pools (service engine pool).")
@click.pass_context
def main(ctx, config, log_level, threads):
    """Verifiable-reward chess RL pipeline."""
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.WARNING),
                        stream=sys.stderr)
    ctx.obj = {"threads": threads}


def _fail(exc: Exception) -> None:
    category = type(exc).__name__ if isinstance(exc, ChessrlError) else (
        "IoError" if isinstance(exc, OSError) else type(exc).__name__)
    click.echo(f"{category}: {exc}", err=True)
    sys.exit(1)


@main.command()
@click.option("--in", "csv_path", required=True, type=click.Path(exists=True),
              help="Lichess puzzle CSV.")
@click.option("--rating-min", type=int, default=None, help="Inclusive rating lower bound.")
@click.option("--rating-max", type=int, default=None, help="Inclusive rating upper bound.")
@click.option("--out", default=None, help="Write puzzle JSONL here instead of stdout.")
@click.option("--report", "report_path", default=None, help="Write the ingest report JSON here.")
def ingest(csv_path, rating_min, rating_max, out, report_path):
    """Validate a puzzle CSV and emit puzzles as JSONL."""
    try:
        report = IngestReport()
        fh = _out_stream(out)
        for puzzle in ingest_csv(csv_path, rating_min=rating_min, rating_max=rating_max,
                                 report=report):
            _emit(fh, {"id": puzzle.id, "fen": puzzle.initial_fen,
                       "moves": list(puzzle.moves), "rating": puzzle.rating,
                       "themes": list(puzzle.themes)})
        if out:
            fh.close()
        summary = {"total_rows": report.total_rows, "accepted": report.accepted,
                   "skipped_rating": report.skipped_rating, "errors": report.errors}
        if report_path:
            Path(report_path).write_text(json.dumps(summary, indent=2, sort_keys=True))
        click.echo(f"accepted {report.accepted}/{report.total_rows} rows "
                   f"({len(report.errors)} invalid)", err=True)
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--in", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["all-moves", "solver-only"]), default="all-moves",
              show_default=True)
@click.option("--out", required=True, help="Sample store JSONL path.")
@click.option("--seed", default=0, show_default=True, help="Shuffle seed.")
@click.option("--rating-min", type=int, default=None)
@click.option("--rating-max", type=int, default=None)
@click.option("--include-legal", is_flag=True, help="Precompute legal SAN lists per sample.")
@click.option("--manifest", "manifest_path", default=None, help="Manifest JSON path.")
def decompose(csv_path, mode, out, seed, rating_min, rating_max, include_legal, manifest_path):
    """Cut puzzle trajectories into position-action samples."""
    try:
        puzzles = ingest_csv(csv_path, rating_min=rating_min, rating_max=rating_max)
        manifest = build_dataset(
            puzzles, out, mode=mode.replace("-", "_"), seed=seed,
            include_legal=include_legal, manifest_path=manifest_path)
        click.echo(json.dumps(manifest, sort_keys=True), err=True)
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--samples", required=True, type=click.Path(exists=True))
@click.option("--prompt-cfg", default="default", show_default=True,
              type=click.Choice(sorted(PROMPT_CONFIGS)))
@click.option("--out", default=None)
@click.option("--limit", type=int, default=None, help="Render at most N samples.")
def render(samples, prompt_cfg, out, limit):
    """Render prompts for stored samples."""
    try:
        cfg = PROMPT_CONFIGS[prompt_cfg]
        fh = _out_stream(out)
        for sample in read_samples(samples)[:limit]:
            _emit(fh, {"sample_ref": f"{sample.puzzle_id}:{sample.ply_index}",
                       "fen": sample.fen, "prompt": render_prompt(sample, cfg)})
        if out:
            fh.close()
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--items", "items_path", default=None, type=click.Path(exists=True),
              help="JSONL of {fen, raw_output, optimal_san?, prompt_cfg_id?}.")
@click.option("--samples", "samples_path", default=None, type=click.Path(exists=True),
              help="Sample store (use with --outputs).")
@click.option("--outputs", "outputs_path", default=None, type=click.Path(exists=True),
              help="JSONL of {sample_ref, raw_output} resolved against --samples.")
@click.option("--preset", default="sparse", show_default=True,
              type=click.Choice(["sparse", "dense", "rank"]))
@click.option("--backend", default="heuristic-d1", show_default=True,
              help="oracle | heuristic-dN | uci (with --uci-engine).")
@click.option("--uci-engine", default=None, help="UCI engine command for the uci backend.")
@click.option("--out", default=None)
def score(items_path, samples_path, outputs_path, preset, backend, uci_engine, out):
    """Score model outputs; one reward breakdown per line.

    Two input modes: --items with inline {fen, raw_output, optimal_san?}
    records, or --samples plus --outputs where outputs carry
    {sample_ref, raw_output} and sample_ref is "<puzzle_id>:<ply_index>".
    """
    try:
        if items_path is None and (samples_path is None or outputs_path is None):
            raise click.UsageError("provide --items, or --samples with --outputs")
        refs: list[str | None] = []
        if items_path is not None:
            raw_items = [ScoreItem(**record) for record in _read_jsonl(items_path)]
            refs = [None] * len(raw_items)
        else:
            store = {f"{s.puzzle_id}:{s.ply_index}": s for s in read_samples(samples_path)}
            raw_items = []
            for record in _read_jsonl(outputs_path):
                ref = record["sample_ref"]
                sample = store.get(ref)
                if sample is None:
                    raise ChessrlError(f"sample_ref {ref!r} not in {samples_path}")
                raw_items.append(ScoreItem(fen=sample.fen,
                                           optimal_san=sample.optimal_move.san,
                                           raw_output=record["raw_output"]))
                refs.append(ref)
        config = ServiceConfig(default_backend=backend, uci_engine_cmd=uci_engine,
                               max_batch=1_000_000)
        backends = Backends(config)
        results = score_batch(
            ScoreRequest(items=raw_items, weights_preset=preset, backend_id=backend),
            backends)
        fh = _out_stream(out)
        for ref, record, result in zip(refs, raw_items, results):
            line = {"fen": record.fen, **result}
            if ref is not None:
                line["sample_ref"] = ref
            _emit(fh, line)
        if out:
            fh.close()
        backends.close()
    except click.UsageError:
        raise
    except Exception as exc:
        _fail(exc)


@main.command(name="train")
@click.option("--samples", required=True, type=click.Path(exists=True))
@click.option("--preset", default="dense", show_default=True,
              type=click.Choice(["sparse", "dense", "rank"]))
@click.option("--backend", default="oracle", show_default=True,
              help="oracle (answers from the sample store) or heuristic-dN.")
@click.option("--steps", default=150, show_default=True)
@click.option("--batch-size", default=128, show_default=True)
@click.option("--group-size", default=8, show_default=True)
@click.option("--temperature", default=1.0, show_default=True)
@click.option("--lr", default=1e-2, show_default=True)
@click.option("--clip-ratio", default=0.2, show_default=True)
@click.option("--kl-coef", default=1e-3, show_default=True)
@click.option("--entropy-coef", default=1e-3, show_default=True)
@click.option("--grad-clip", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--optimizer", default="sgd", show_default=True,
              type=click.Choice(["sgd", "adamw"]))
@click.option("--eval-every", default=0, show_default=True)
@click.option("--metrics", "metrics_path", default=None, help="Metrics JSONL path.")
@click.option("--checkpoint", "checkpoint_path", default=None, help="Checkpoint JSON path.")
@click.option("--resume", "resume_path", default=None, help="Resume from this checkpoint.")
def train_cmd(samples, preset, backend, steps, batch_size, group_size, temperature, lr,
              clip_ratio, kl_coef, entropy_coef, grad_clip, seed, optimizer, eval_every,
              metrics_path, checkpoint_path, resume_path):
    """Run the desk-scale trainer over a sample store."""
    try:
        dataset = read_samples(samples)
        if backend == "oracle":
            critic = OracleCritic({s.fen: s.optimal_move.san for s in dataset})
        elif backend.startswith("heuristic-d"):
            critic = HeuristicCritic(int(backend.rsplit("d", 1)[1]))
        else:
            raise ChessrlError(f"unknown train backend {backend!r}")
        cfg = TrainConfig(steps=steps, batch_size=batch_size, group_size=group_size,
                          temperature=temperature, lr=lr, clip_ratio=clip_ratio,
                          kl_coef=kl_coef, entropy_coef=entropy_coef, grad_clip=grad_clip,
                          seed=seed, optimizer=optimizer, eval_every=eval_every)
        result = train(dataset, preset, critic, cfg, metrics_path=metrics_path,
                       checkpoint_path=checkpoint_path, resume_from=resume_path)
        last = result.metrics[-1] if result.metrics else {}
        click.echo(json.dumps({"final_theta": result.theta.tolist(),
                               "halted_early": result.halted_early,
                               "last_metrics": last}, sort_keys=True))
    except Exception as exc:
        _fail(exc)


@main.command(name="eval")
@click.option("--puzzles", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--agent", default="greedy-heuristic", show_default=True,
              type=click.Choice(["oracle", "random", "greedy-heuristic", "policy"]))
@click.option("--depth", default=1, show_default=True, help="Heuristic agent search depth.")
@click.option("--checkpoint", "checkpoint_path", default=None,
              help="Trained policy checkpoint (for --agent policy).")
@click.option("--seed", default=0, show_default=True)
@click.option("--prompt-cfg", default="default", show_default=True,
              type=click.Choice(sorted(PROMPT_CONFIGS)))
@click.option("--rating-min", type=int, default=None)
@click.option("--rating-max", type=int, default=None)
@click.option("--out", default=None, help="Write the full report JSON here.")
def eval_cmd(csv_path, agent, depth, checkpoint_path, seed, prompt_cfg, rating_min,
             rating_max, out):
    """Evaluate an agent with the strict sequential puzzle protocol."""
    try:
        puzzles = list(ingest_csv(csv_path, rating_min=rating_min, rating_max=rating_max))
        if agent == "oracle":
            answers = {}
            for puzzle in puzzles:
                for sample in decompose_puzzle(puzzle, "all_moves"):
                    if sample.is_solver_move:
                        answers[sample.fen] = sample.optimal_move.san
            chosen = OracleAgent(answers)
        elif agent == "random":
            chosen = RandomAgent(seed)
        elif agent == "policy":
            if not checkpoint_path:
                raise ChessrlError("--agent policy requires --checkpoint")
            chosen = PolicyAgent(load_checkpoint(checkpoint_path)["theta"])
        else:
            chosen = GreedyCriticAgent(HeuristicCritic(depth))
        report = eval_puzzles(chosen, puzzles,
                              EvalConfig(prompt_cfg=PROMPT_CONFIGS[prompt_cfg]))
        payload = report.to_dict()
        if out:
            Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True))
        click.echo(json.dumps({k: payload[k] for k in
                               ("puzzle_accuracy", "per_position_accuracy",
                                "puzzles_total", "positions_total")}, sort_keys=True))
        click.echo(f"puzzle accuracy {report.puzzle_accuracy:.3f} "
                   f"({report.puzzles_solved}/{report.puzzles_total}); "
                   f"per-position {report.per_position_accuracy:.3f}", err=True)
    except Exception as exc:
        _fail(exc)


@main.group()
def diag():
    """Generate and grade rule-knowledge diagnostic tasks."""


def _diag_fens(corpus, puzzles_csv):
    if corpus:
        return [line.strip() for line in Path(corpus).read_text().splitlines() if line.strip()]
    if puzzles_csv:
        return corpus_fens(ingest_csv(puzzles_csv))
    raise ChessrlError("provide --corpus or --puzzles")


@diag.command(name="gen-board-state")
@click.option("--count", default=10, show_default=True)
@click.option("--k", default=3, show_default=True, help="Moves to apply (1..5).")
@click.option("--seed", default=0, show_default=True)
@click.option("--corpus", default=None, help="FEN-per-line corpus file.")
@click.option("--puzzles", "puzzles_csv", default=None, help="Puzzle CSV to derive FENs from.")
@click.option("--out", default=None)
def gen_board_state_cmd(count, k, seed, corpus, puzzles_csv, out):
    """Emit state-tracking tasks (apply k moves, name the FEN)."""
    try:
        fens = _diag_fens(corpus, puzzles_csv)
        fh = _out_stream(out)
        for task in gen_tasks("board_state", count, seed, fens, k=k):
            _emit(fh, task)
        if out:
            fh.close()
    except Exception as exc:
        _fail(exc)


@diag.command(name="gen-two-candidate")
@click.option("--count", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--margin", default=0.2, show_default=True)
@click.option("--depth", default=1, show_default=True, help="Heuristic critic depth.")
@click.option("--corpus", default=None)
@click.option("--puzzles", "puzzles_csv", default=None)
@click.option("--out", default=None)
def gen_two_candidate_cmd(count, seed, margin, depth, corpus, puzzles_csv, out):
    """Emit better-move discrimination tasks."""
    try:
        fens = _diag_fens(corpus, puzzles_csv)
        backend = HeuristicCritic(depth)
        fh = _out_stream(out)
        for task in gen_tasks("two_candidate", count, seed, fens, backend=backend,
                              margin=margin):
            _emit(fh, task)
        if out:
            fh.close()
    except Exception as exc:
        _fail(exc)


@diag.command(name="grade")
@click.option("--tasks", "tasks_path", required=True, type=click.Path(exists=True))
@click.option("--transcripts", "transcripts_path", required=True, type=click.Path(exists=True))
def grade_cmd(tasks_path, transcripts_path):
    """Grade external transcripts against stored task answer keys."""
    try:
        click.echo(json.dumps(grade_transcripts(transcripts_path, tasks_path), sort_keys=True))
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--backend", default="heuristic-d1", show_default=True)
@click.option("--uci-engine", default=None, help="Command for an external UCI engine backend.")
@click.option("--max-batch", default=512, show_default=True)
@click.option("--service-config", default=None, type=click.Path(exists=True),
              help="ServiceConfig JSON (flags override it).")
@click.pass_context
def serve(ctx, host, port, backend, uci_engine, max_batch, service_config):
    """Run the reward-scoring HTTP service."""
    try:
        config = ServiceConfig.load(service_config)
        config.host, config.port = host, port
        config.default_backend = backend
        config.max_batch = max_batch
        config.pool_size = ctx.obj.get("threads", config.pool_size) if ctx.obj else config.pool_size
        if uci_engine:
            config.uci_engine_cmd = uci_engine
        run_service(config)
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--fen", default="start", show_default=True,
              help='Position FEN, or "start" for the initial position.')
@click.option("--depth", default=4, show_default=True)
@click.option("--divide", is_flag=True, help="Print per-move subtree counts.")
def perft(fen, depth, divide):
    """Count legal game-tree leaves at an exact depth."""
    try:
        pos = start_position() if fen == "start" else parse_fen(fen)
        if divide:
            from .core import apply_move, legal_moves

            total = 0
            for mv in legal_moves(pos):
                count = run_perft(apply_move(pos, mv), depth - 1)
                total += count
                click.echo(f"{mv.uci} {count}", err=True)
            click.echo(str(total))
        else:
            click.echo(str(run_perft(pos, depth)))
    except Exception as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
