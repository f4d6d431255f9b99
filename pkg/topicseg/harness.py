"""
Experiment drivers: the pre-train / fine-tune / test grid, the segments-per-document
sweep, and loss hyper-parameter tuning. Every driver writes a CSV via pandas.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from .config import MAX_SEGMENTS, MIN_SEGMENTS, CorpusConfig, GridSpec, Task
from .corpus.documents import CHAT_SPLIT, build_documents, split_corpus
from .corpus.readers import read_chat_corpus, read_documents, read_wiki_corpus
from .corpus.types import Conversation, CorpusSplits, SegDocument
from .errors import ConfigError, CorpusError, NumericalError
from .evaluation import EvalReport, evaluate_corpus
from .losses import LossSpec
from .models.registry import ModelConfig
from .training import TrainConfig, finetune, train
from .utils import ensure_parent, stable_seed

GRID_COLUMNS = ["task_id", "model", "loss", "pretrain", "finetune", "test",
                "precision", "recall", "f1", "epochs", "seed"]
SWEEP_COLUMNS = ["segments", "precision", "recall", "f1"]
TUNE_COLUMNS = ["loss", "w0", "w1", "alpha", "gamma", "precision", "recall", "f1"]
FAILED = "failed"

LogCallback = Optional[Callable[[str], None]]


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    """UTF-8, one header line, LF line endings."""
    path = ensure_parent(path)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def load_corpus(config: CorpusConfig, segments: int, seed: int) -> CorpusSplits:
    """
    Read a corpus and split it.

    Chat corpora are first grouped into documents of `segments` conversations.
    """
    if config.format == "chat":
        documents = build_documents(read_chat_corpus(config.path), segments, seed)
    elif config.format == "wiki":
        documents = read_wiki_corpus(config.path)
    else:
        documents = read_documents(config.path)
    if not documents:
        raise CorpusError(f"no usable documents in {config.path}")
    return split_corpus(documents, config.ratios, seed)


@dataclass
class CellResult:
    row: Dict[str, Any]
    failed: bool = False


def run_cell(task: Task, model_name: str, model_config: ModelConfig, loss: LossSpec,
             train_config: TrainConfig, splits: Mapping[str, CorpusSplits], seed: int,
             threshold: float, log_callback: LogCallback = None) -> CellResult:
    """
    One grid cell: train from scratch, optionally fine-tune, then test.

    Training starts from the pre-train corpus's train split (the test corpus's
    when there is no pre-train corpus), fine-tuning uses the fine-tune corpus's
    dev split, and testing uses the test corpus's test split.
    """
    cfg = replace(train_config, seed=seed, loss=loss)
    verbose = log_callback is not None
    source = splits[task.pretrain or task.test]
    row = {
        "task_id": task.id, "model": model_name, "loss": loss.name,
        "pretrain": task.pretrain or "-", "finetune": task.finetune or "-", "test": task.test,
    }
    try:
        result = train(model_config, source.train, source.dev if verbose else None, cfg,
                       verbose=verbose, log_callback=log_callback)
        if task.finetune:
            target = splits[task.finetune]
            result = finetune(result.checkpoint, target.dev, cfg,
                              dev_documents=target.train if verbose else None,
                              verbose=verbose, log_callback=log_callback)
        report = evaluate_corpus(result.model, splits[task.test].test, threshold)
    except NumericalError as e:
        if log_callback:
            log_callback(f"⚠️  {task.id}/{model_name}/{loss.name} failed: {e}")
        row.update(precision=FAILED, recall=FAILED, f1=FAILED, epochs=cfg.epochs, seed=seed)
        return CellResult(row=row, failed=True)
    row.update(precision=_fmt(report.precision), recall=_fmt(report.recall), f1=_fmt(report.f1),
               epochs=cfg.epochs, seed=seed)
    return CellResult(row=row)


def _run_cell_job(args: Tuple) -> CellResult:
    # Worker processes cannot reach the parent's console, so they run silently
    return run_cell(*args)


class GridRunner:
    """
    Runs every (task, model, loss) cell of a GridSpec.

    All referenced corpora are loaded and split before any training starts, so
    a bad corpus aborts the run early. Each cell derives its own seed from
    (base seed, task id, model name, loss name), which makes any subset of
    cells reproducible on its own.
    """

    def __init__(self, spec: GridSpec, verbose: bool = False, log_callback: LogCallback = None):
        """
        Args:
            spec: Parsed grid configuration
            verbose: Enable progress logging (default: False)
            log_callback: Optional callback function for logging (receives message string)
        """
        self.spec = spec
        self.verbose = verbose
        self.log_callback = log_callback

    def _log(self, message: str):
        """Log a message if verbose mode is enabled."""
        if self.verbose and self.log_callback:
            self.log_callback(message)

    def referenced_corpora(self) -> List[str]:
        names: List[str] = []
        for task in self.spec.tasks:
            for name in (task.pretrain, task.finetune, task.test):
                if name is not None and name not in names:
                    names.append(name)
        return names

    def load_corpora(self) -> Dict[str, CorpusSplits]:
        splits = {}
        for name in self.referenced_corpora():
            corpus_seed = stable_seed(self.spec.seed, "corpus", name)
            splits[name] = load_corpus(self.spec.corpora[name], self.spec.segments, corpus_seed)
            train_n, dev_n, test_n = splits[name].sizes()
            self._log(f"📚 {name}: {train_n} train / {dev_n} fine-tune / {test_n} test documents")
        return splits

    def cell_seed(self, task: Task, model_name: str, loss: LossSpec) -> int:
        return stable_seed(self.spec.seed, task.id, model_name, loss.name)

    def run(self, output: Optional[str | Path] = None) -> pd.DataFrame:
        """Run all cells; rows come back in declared order regardless of worker count."""
        splits = self.load_corpora()
        cells = self.spec.cells()
        jobs = []
        for task, model_name, loss in cells:
            needed = {name: splits[name] for name in (task.pretrain, task.finetune, task.test)
                      if name is not None}
            jobs.append((task, model_name, self.spec.models[model_name], loss, self.spec.train,
                         needed, self.cell_seed(task, model_name, loss), self.spec.threshold))

        self._log(f"🔧 Running {len(jobs)} grid cell(s) with {self.spec.workers} worker(s)")
        if self.spec.workers > 1:
            with ProcessPoolExecutor(max_workers=self.spec.workers) as pool:
                results = list(pool.map(_run_cell_job, jobs))
        else:
            callback = self.log_callback if self.verbose else None
            results = [run_cell(*job, log_callback=callback) for job in jobs]

        for result in results:
            row = result.row
            self._log(f"  ├─ {row['task_id']} {row['model']} {row['loss']}: F1 {row['f1']}")
        frame = pd.DataFrame([r.row for r in results], columns=GRID_COLUMNS)
        if output is not None:
            write_csv(frame, output)
        return frame


def run_grid(spec: GridSpec, output: str | Path, verbose: bool = False,
             log_callback: LogCallback = None) -> pd.DataFrame:
    """Run a grid and write its results CSV."""
    return GridRunner(spec, verbose=verbose, log_callback=log_callback).run(output)


def sweep_segments(conversations: Sequence[Conversation], segments: Iterable[int],
                   model_config: ModelConfig, train_config: TrainConfig, seed: int,
                   output: Optional[str | Path] = None,
                   ratios: Tuple[float, float, float] = CHAT_SPLIT, threshold: float = 0.5,
                   log_callback: LogCallback = None) -> pd.DataFrame:
    """
    For each K: build K-segment documents, split, train from scratch, test.

    Every K is validated (range and enough conversations) before any training.

    Raises:
        ConfigError: K outside [2, 10]
        CorpusError: Too few conversations for some K
    """
    segments = list(segments)
    if not segments:
        raise ConfigError("empty segments range", key="segments")
    prepared = []
    for k in segments:
        if not MIN_SEGMENTS <= k <= MAX_SEGMENTS:
            raise ConfigError(f"{k} outside [{MIN_SEGMENTS}, {MAX_SEGMENTS}]", key="segments")
        k_seed = stable_seed(seed, "segments", k)
        try:
            documents = build_documents(conversations, k, k_seed)
            prepared.append((k, k_seed, split_corpus(documents, ratios, k_seed)))
        except CorpusError as e:
            raise CorpusError(f"segments={k}: {e}") from None

    rows = []
    for k, k_seed, splits in prepared:
        result = train(model_config, splits.train, None, replace(train_config, seed=k_seed))
        report = evaluate_corpus(result.model, splits.test, threshold)
        if log_callback:
            log_callback(f"  ├─ K={k}: P {report.precision:.3f} R {report.recall:.3f} "
                         f"F1 {report.f1:.3f}")
        rows.append({"segments": k, "precision": _fmt(report.precision),
                     "recall": _fmt(report.recall), "f1": _fmt(report.f1)})
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    if output is not None:
        write_csv(frame, output)
    return frame


def default_loss_candidates() -> List[LossSpec]:
    """Re-weighted CE over w1 in {0.5..0.9} (w0 = 1 - w1), focal over alpha x gamma."""
    candidates = [LossSpec.weighted_ce(w0=round(1.0 - w1, 10), w1=w1)
                  for w1 in (0.5, 0.6, 0.7, 0.8, 0.9)]
    candidates += [LossSpec.focal(alpha=alpha, gamma=gamma)
                   for alpha in (0.25, 0.5, 0.8) for gamma in (0.0, 1.0, 2.0, 5.0)]
    return candidates


def tune_loss(train_documents: Sequence[SegDocument], dev_documents: Sequence[SegDocument],
              model_config: ModelConfig, candidates: Sequence[LossSpec],
              train_config: TrainConfig, output: Optional[str | Path] = None,
              log_callback: LogCallback = None) -> Tuple[pd.DataFrame, LossSpec]:
    """
    Train once per candidate loss and score each on the dev documents.

    Returns:
        The results frame and the best candidate by dev F1 (earliest wins ties)
    """
    if not candidates:
        raise ConfigError("no loss candidates", key="losses")
    rows = []
    reports: List[EvalReport] = []
    for loss in candidates:
        cfg = replace(train_config, loss=loss)
        result = train(model_config, train_documents, None, cfg)
        report = evaluate_corpus(result.model, dev_documents, cfg.threshold)
        reports.append(report)
        if log_callback:
            log_callback(f"  ├─ {loss.name}: dev F1 {report.f1:.3f}")
        rows.append({
            "loss": loss.kind,
            "w0": "" if loss.w0 is None else f"{loss.w0:g}",
            "w1": "" if loss.w1 is None else f"{loss.w1:g}",
            "alpha": "" if loss.alpha is None else f"{loss.alpha:g}",
            "gamma": "" if loss.gamma is None else f"{loss.gamma:g}",
            "precision": _fmt(report.precision),
            "recall": _fmt(report.recall),
            "f1": _fmt(report.f1),
        })
    best = max(range(len(reports)), key=lambda i: (reports[i].f1, -i))
    frame = pd.DataFrame(rows, columns=TUNE_COLUMNS)
    if output is not None:
        write_csv(frame, output)
    return frame, candidates[best]
