"""Main CLI entry point for the topic segmentation toolkit."""

from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from .checkpoint import load_checkpoint, save_checkpoint
from .config import CorpusConfig, RunConfig, load_config, load_grid, settings
from .corpus import (
    SynthConfig,
    build_documents,
    corpus_stats,
    read_chat_corpus,
    read_documents,
    read_wiki_corpus,
    split_corpus,
    synth_generate,
    write_chat_corpus,
    write_documents,
)
from .corpus.documents import CHAT_SPLIT, WIKI_SPLIT
from .errors import SegmentationError
from .evaluation import EvalReport, evaluate_corpus
from .harness import default_loss_candidates, load_corpus, run_grid, sweep_segments, tune_loss
from .losses import LossSpec
from .models.registry import PRESETS, ModelRegistry
from .training import TrainConfig, finetune as finetune_model, train as train_model

app = typer.Typer(
    help="Topic segmentation toolkit - build labeled documents, train boundary classifiers, "
         "and run pre-train / fine-tune / test experiment grids"
)
console = Console()

FORMATS = "chat, wiki or docs"


@contextmanager
def _errors():
    """Turn toolkit and I/O failures into a one-line red error and exit status 1."""
    try:
        yield
    except (SegmentationError, OSError) as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        raise typer.Exit(1)


def _logger(verbose: bool):
    # Log callback for verbose mode
    def log_callback(msg: str):
        console.print(f"[dim]{msg}[/dim]")

    return log_callback if verbose else None


def _read_documents(path: str, fmt: str, segments: int, seed: int):
    if fmt == "docs":
        return read_documents(path)
    if fmt == "wiki":
        return read_wiki_corpus(path)
    if fmt == "chat":
        return build_documents(read_chat_corpus(path), segments, seed)
    raise SegmentationError(f"unknown format {fmt!r} (expected {FORMATS})")


def _loss(kind: Optional[str], w0: Optional[float], w1: Optional[float],
          alpha: Optional[float], gamma: Optional[float]) -> Optional[LossSpec]:
    if kind is None:
        return None
    values = {"w0": w0, "w1": w1, "alpha": alpha, "gamma": gamma}
    return LossSpec.from_dict({"kind": kind, **{k: v for k, v in values.items() if v is not None}})


def _report_table(title: str, report: EvalReport) -> Table:
    table = Table(title=title)
    for column in ("TP", "FP", "FN", "Precision", "Recall", "F1"):
        table.add_column(column, justify="right")
    table.add_row(str(report.tp), str(report.fp), str(report.fn), f"{report.precision:.4f}",
                  f"{report.recall:.4f}", f"{report.f1:.4f}")
    return table


# Shared option declarations
LOSS = typer.Option(None, "--loss", help="Loss: ce, weighted_ce or focal")
W0 = typer.Option(None, "--w0", help="Weight of non-boundary examples (weighted_ce)")
W1 = typer.Option(None, "--w1", help="Weight of boundary examples (weighted_ce)")
ALPHA = typer.Option(None, "--alpha", help="Class balance factor (focal)")
GAMMA = typer.Option(None, "--gamma", help="Focusing parameter (focal)")
VERBOSE = typer.Option(True, "--verbose/--quiet", "-v/-q", help="Show progress logs (default: verbose)")


@app.command()
def ingest(
    input: str = typer.Option(..., "--input", "-i", help="Corpus file or directory"),
    format: str = typer.Option("wiki", "--format", "-f", help="Input format: wiki or chat"),
    output: str = typer.Option(..., "--output", "-o", help="Output JSONL path"),
):
    """
    Parse a raw corpus and write it in normalized JSONL.

    Wiki-style files become labeled documents; chat JSONL is validated and rewritten.
    """
    with _errors():
        if format == "wiki":
            count = write_documents(read_wiki_corpus(input), output)
            console.print(f"Wrote [green]{count}[/green] documents to {output}")
        elif format == "chat":
            count = write_chat_corpus(read_chat_corpus(input), output)
            console.print(f"Wrote [green]{count}[/green] conversations to {output}")
        else:
            raise SegmentationError(f"unknown ingest format {format!r} (expected wiki or chat)")


@app.command("build-docs")
def build_docs(
    input: str = typer.Option(..., "--input", "-i", help="Chat JSONL corpus"),
    segments: int = typer.Option(5, "--segments", "-k", help="Conversations per document"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Shuffle seed (default: TOPICSEG_SEED)"),
    output: str = typer.Option(..., "--output", "-o", help="Labeled-document JSONL path"),
):
    """Group conversations into K-segment labeled documents."""
    with _errors():
        seed = settings().seed if seed is None else seed
        documents = build_documents(read_chat_corpus(input), segments, seed)
        count = write_documents(documents, output)
        console.print(f"Wrote [green]{count}[/green] documents of {segments} segments to {output}")


@app.command()
def synth(
    topics: int = typer.Option(6, "--topics", help="Number of topics"),
    conversations: int = typer.Option(300, "--conversations", help="Number of conversations"),
    shared_fraction: float = typer.Option(0.2, "--shared-fraction", help="Shared-word probability"),
    min_sentences: Optional[int] = typer.Option(None, "--min-sentences",
                                                help="Minimum sentences per conversation"),
    max_sentences: Optional[int] = typer.Option(None, "--max-sentences",
                                                help="Maximum sentences per conversation"),
    style: str = typer.Option("chat", "--style", help="chat or structured"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Generator seed (default: TOPICSEG_SEED)"),
    output: str = typer.Option(..., "--output", "-o", help="Chat JSONL path"),
):
    """Generate a synthetic conversational (or structured) corpus."""
    with _errors():
        overrides = {"topics": topics, "conversations": conversations,
                     "shared_fraction": shared_fraction,
                     "seed": settings().seed if seed is None else seed}
        if min_sentences is not None:
            overrides["min_sentences"] = min_sentences
        if max_sentences is not None:
            overrides["max_sentences"] = max_sentences
        if style == "structured":
            config = SynthConfig.structured(**overrides)
        else:
            config = SynthConfig(style=style, **overrides)
        count = write_chat_corpus(synth_generate(config), output)
        console.print(f"Wrote [green]{count}[/green] conversations to {output}")


@app.command()
def stats(
    input: str = typer.Option(..., "--input", "-i", help="Corpus path"),
    format: str = typer.Option("docs", "--format", "-f", help=f"Input format: {FORMATS}"),
    segments: int = typer.Option(5, "--segments", "-k", help="Segments per document (chat input)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Grouping seed (chat input)"),
):
    """Print the dataset profile of a corpus."""
    with _errors():
        seed = settings().seed if seed is None else seed
        profile = corpus_stats(_read_documents(input, format, segments, seed))
        table = Table(title=f"Dataset profile: {input}")
        table.add_column("Statistic")
        table.add_column("Value", justify="right")
        for key, value in profile.to_dict().items():
            table.add_row(key, f"{value:.4f}" if isinstance(value, float) else str(value))
        console.print(table)


def _run_config(config: Optional[str], input: Optional[str], format: str, model: str,
                segments: int) -> RunConfig:
    if config is not None:
        return load_config(config)
    if input is None:
        raise SegmentationError("either --config or --input is required")
    env = settings()
    return RunConfig(
        corpus=CorpusConfig(path=Path(input), format=format),
        segments=segments,
        model=ModelRegistry.config_from(model),
        train=TrainConfig(seed=env.seed, threshold=env.threshold),
        seed=env.seed,
        threshold=env.threshold,
    )


def _override(train: TrainConfig, epochs: Optional[int], lr: Optional[float],
              loss: Optional[LossSpec]) -> TrainConfig:
    values = train.to_dict()
    values["loss"] = loss or train.loss
    if epochs is not None:
        values["epochs"] = epochs
    if lr is not None:
        values["learning_rate"] = lr
    return TrainConfig.from_dict(values)


@app.command()
def train(
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Run config JSON"),
    input: Optional[str] = typer.Option(None, "--input", "-i", help="Corpus path (without --config)"),
    format: str = typer.Option("docs", "--format", "-f", help=f"Input format: {FORMATS}"),
    model: str = typer.Option("bilstm", "--model", "-m",
                              help=f"Model preset: {', '.join(PRESETS)}"),
    segments: int = typer.Option(5, "--segments", "-k", help="Segments per document (chat input)"),
    epochs: Optional[int] = typer.Option(None, "--epochs", help="Override epochs"),
    lr: Optional[float] = typer.Option(None, "--lr", help="Override learning rate"),
    loss: Optional[str] = LOSS,
    w0: Optional[float] = W0,
    w1: Optional[float] = W1,
    alpha: Optional[float] = ALPHA,
    gamma: Optional[float] = GAMMA,
    output: str = typer.Option(..., "--output", "-o", help="Checkpoint path"),
    verbose: bool = VERBOSE,
):
    """
    Train a model from scratch on a corpus's train split.

    Dev metrics are logged per epoch; the test split is scored at the end.
    """
    with _errors():
        run = _run_config(config, input, format, model, segments)
        cfg = _override(run.train, epochs, lr, _loss(loss, w0, w1, alpha, gamma))
        splits = load_corpus(run.corpus, run.segments, run.seed)
        result = train_model(run.model, splits.train, splits.dev, cfg, verbose=verbose,
                             log_callback=_logger(verbose))
        save_checkpoint(result.checkpoint, output)
        console.print(_report_table("Test split", evaluate_corpus(result.model, splits.test,
                                                                  cfg.threshold)))
        console.print(f"Saved checkpoint to [green]{output}[/green]")


@app.command()
def finetune(
    checkpoint: str = typer.Option(..., "--checkpoint", help="Pre-trained checkpoint"),
    input: str = typer.Option(..., "--input", "-i", help="Fine-tuning corpus"),
    format: str = typer.Option("docs", "--format", "-f", help=f"Input format: {FORMATS}"),
    segments: int = typer.Option(5, "--segments", "-k", help="Segments per document (chat input)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Shuffle seed (default: TOPICSEG_SEED)"),
    epochs: int = typer.Option(10, "--epochs", help="Fine-tuning epochs"),
    lr: Optional[float] = typer.Option(None, "--lr", help="Learning rate"),
    loss: Optional[str] = LOSS,
    w0: Optional[float] = W0,
    w1: Optional[float] = W1,
    alpha: Optional[float] = ALPHA,
    gamma: Optional[float] = GAMMA,
    output: str = typer.Option(..., "--output", "-o", help="Fine-tuned checkpoint path"),
    verbose: bool = VERBOSE,
):
    """Continue training a checkpoint on every document of a new corpus."""
    with _errors():
        env = settings()
        seed = env.seed if seed is None else seed
        documents = _read_documents(input, format, segments, seed)
        cfg = TrainConfig(epochs=epochs, learning_rate=lr, seed=seed, threshold=env.threshold,
                          loss=_loss(loss, w0, w1, alpha, gamma) or LossSpec.ce())
        result = finetune_model(load_checkpoint(checkpoint), documents, cfg, verbose=verbose,
                                log_callback=_logger(verbose))
        save_checkpoint(result.checkpoint, output)
        console.print(f"Saved checkpoint to [green]{output}[/green]")


@app.command("eval")
def evaluate(
    checkpoint: str = typer.Option(..., "--checkpoint", help="Checkpoint to evaluate"),
    input: str = typer.Option(..., "--input", "-i", help="Evaluation corpus"),
    format: str = typer.Option("docs", "--format", "-f", help=f"Input format: {FORMATS}"),
    segments: int = typer.Option(5, "--segments", "-k", help="Segments per document (chat input)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Grouping seed (chat input)"),
    threshold: Optional[float] = typer.Option(None, "--threshold", help="Decision threshold"),
):
    """Score every candidate break of a corpus and print micro P/R/F1."""
    with _errors():
        env = settings()
        seed = env.seed if seed is None else seed
        documents = _read_documents(input, format, segments, seed)
        model = load_checkpoint(checkpoint).to_model()
        report = evaluate_corpus(model, documents, env.threshold if threshold is None else threshold)
        console.print(_report_table(f"Evaluation: {input}", report))


@app.command()
def grid(
    config: str = typer.Option(..., "--config", "-c", help="Grid config JSON"),
    out: str = typer.Option(..., "--out", "-o", help="Results CSV path"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Parallel grid cells"),
    verbose: bool = VERBOSE,
):
    """Run every task x model x loss cell and write one CSV row per cell."""
    with _errors():
        spec = load_grid(config)
        if workers is not None:
            if workers < 1:
                raise SegmentationError(f"--workers must be >= 1, got {workers}")
            spec.workers = workers
        frame = run_grid(spec, out, verbose=verbose, log_callback=_logger(verbose))
        console.print(f"Wrote [green]{len(frame)}[/green] rows to {out}")


@app.command("sweep-segments")
def sweep(
    input: str = typer.Option(..., "--input", "-i", help="Chat JSONL corpus"),
    min_segments: int = typer.Option(2, "--min", help="Smallest K"),
    max_segments: int = typer.Option(10, "--max", help="Largest K"),
    model: str = typer.Option("bilstm", "--model", "-m", help="Model preset"),
    epochs: int = typer.Option(10, "--epochs", help="Epochs per K"),
    lr: Optional[float] = typer.Option(None, "--lr", help="Learning rate"),
    loss: Optional[str] = LOSS,
    w0: Optional[float] = W0,
    w1: Optional[float] = W1,
    alpha: Optional[float] = ALPHA,
    gamma: Optional[float] = GAMMA,
    seed: Optional[int] = typer.Option(None, "--seed", help="Base seed (default: TOPICSEG_SEED)"),
    out: str = typer.Option(..., "--out", "-o", help="Results CSV path"),
    verbose: bool = VERBOSE,
):
    """Train and test once per segments-per-document value K."""
    with _errors():
        env = settings()
        seed = env.seed if seed is None else seed
        cfg = TrainConfig(epochs=epochs, learning_rate=lr, seed=seed, threshold=env.threshold,
                          loss=_loss(loss, w0, w1, alpha, gamma) or LossSpec.ce())
        frame = sweep_segments(read_chat_corpus(input), range(min_segments, max_segments + 1),
                               ModelRegistry.config_from(model), cfg, seed, out,
                               threshold=env.threshold, log_callback=_logger(verbose))
        console.print(f"Wrote [green]{len(frame)}[/green] rows to {out}")


@app.command("tune-loss")
def tune(
    input: str = typer.Option(..., "--input", "-i", help="Corpus path"),
    format: str = typer.Option("docs", "--format", "-f", help=f"Input format: {FORMATS}"),
    segments: int = typer.Option(5, "--segments", "-k", help="Segments per document (chat input)"),
    model: str = typer.Option("bilstm", "--model", "-m", help="Model preset"),
    epochs: int = typer.Option(10, "--epochs", help="Epochs per candidate"),
    lr: Optional[float] = typer.Option(None, "--lr", help="Learning rate"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Base seed (default: TOPICSEG_SEED)"),
    out: str = typer.Option(..., "--out", "-o", help="Results CSV path"),
    verbose: bool = VERBOSE,
):
    """Search re-weighted CE and focal loss parameters on the dev split."""
    with _errors():
        env = settings()
        seed = env.seed if seed is None else seed
        documents = _read_documents(input, format, segments, seed)
        splits = split_corpus(documents, WIKI_SPLIT if format == "wiki" else CHAT_SPLIT, seed)
        cfg = TrainConfig(epochs=epochs, learning_rate=lr, seed=seed, threshold=env.threshold)
        frame, best = tune_loss(splits.train, splits.dev, ModelRegistry.config_from(model),
                                default_loss_candidates(), cfg, out,
                                log_callback=_logger(verbose))
        console.print(f"Wrote [green]{len(frame)}[/green] rows to {out}")
        console.print(f"Best loss: [bold cyan]{best.name}[/bold cyan]")


def main():
    """Entry point for the CLI."""
    app()


if __name__ == "__main__":
    main()
