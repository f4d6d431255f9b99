"""Run and grid configuration: JSON files parsed strictly, environment defaults via .env."""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import load_dotenv

from .corpus.documents import CHAT_SPLIT, WIKI_SPLIT
from .errors import ConfigError
from .losses import LossSpec
from .models.registry import ModelConfig, ModelRegistry
from .training import TrainConfig
from .utils import resolve_path

# Load environment variables
load_dotenv()

CORPUS_FORMATS = ("chat", "wiki", "docs")
MIN_SEGMENTS, MAX_SEGMENTS = 2, 10


@dataclass(frozen=True)
class Settings:
    """Environment-level defaults; explicit config values and CLI flags win."""

    seed: int = 13
    workers: int = 1
    threshold: float = 0.5


def _env(name: str, cast, default):
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"invalid value {raw!r}", key=name) from None


def settings() -> Settings:
    """Read TOPICSEG_SEED, TOPICSEG_WORKERS and TOPICSEG_THRESHOLD."""
    return Settings(
        seed=_env("TOPICSEG_SEED", int, 13),
        workers=_env("TOPICSEG_WORKERS", int, 1),
        threshold=_env("TOPICSEG_THRESHOLD", float, 0.5),
    )


def _check_keys(data: Mapping[str, Any], allowed: Tuple[str, ...], where: str) -> None:
    for key in data:
        if key not in allowed:
            name = f"{where}.{key}" if where else key
            raise ConfigError("unknown key", key=name)


def _object(value: Any, key: str) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError("must be a JSON object", key=key)
    return value


def _read_json(path: str | Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON at line {e.lineno} ({e.msg})", key=str(path)) from None
    return _object(data, str(path))


@dataclass
class CorpusConfig:
    """A corpus file or directory plus its format and split ratios."""

    path: Path
    format: str = "chat"
    split: Optional[Tuple[float, float, float]] = None

    @property
    def ratios(self) -> Tuple[float, float, float]:
        if self.split is not None:
            return self.split
        return WIKI_SPLIT if self.format == "wiki" else CHAT_SPLIT


def parse_corpus(data: Any, root: Path, key: str) -> CorpusConfig:
    if isinstance(data, str):
        data = {"path": data}
    data = _object(data, key)
    _check_keys(data, ("path", "format", "split"), key)
    if "path" not in data:
        raise ConfigError("missing field 'path'", key=key)
    path = resolve_path(root, data["path"])
    if not path.exists():
        raise ConfigError(f"corpus path does not exist: {path}", key=f"{key}.path")
    fmt = data.get("format", "chat")
    if fmt not in CORPUS_FORMATS:
        raise ConfigError(f"unknown format {fmt!r} (expected chat, wiki or docs)",
                          key=f"{key}.format")
    split = data.get("split")
    if split is not None:
        if not isinstance(split, list) or len(split) != 3:
            raise ConfigError("must be a list of three ratios", key=f"{key}.split")
        split = tuple(float(r) for r in split)
        if any(r <= 0 for r in split) or abs(sum(split) - 1.0) > 1e-9:
            raise ConfigError("ratios must be positive and sum to 1", key=f"{key}.split")
    return CorpusConfig(path=path, format=fmt, split=split)


def check_segments(segments: Any, key: str = "segments") -> int:
    if not isinstance(segments, int) or isinstance(segments, bool):
        raise ConfigError("must be an integer", key=key)
    if not MIN_SEGMENTS <= segments <= MAX_SEGMENTS:
        raise ConfigError(f"must lie in [{MIN_SEGMENTS}, {MAX_SEGMENTS}], got {segments}", key=key)
    return segments


def parse_train(data: Mapping[str, Any], loss: Any, seed: int, threshold: float) -> TrainConfig:
    data = _object(dict(data), "train")
    if loss is not None and "loss" in data:
        raise ConfigError("loss given both at top level and in train", key="train.loss")
    defaults: Dict[str, Any] = {"seed": seed, "threshold": threshold}
    if loss is not None:
        defaults["loss"] = LossSpec.from_dict(loss)
    return TrainConfig.from_dict(data, **defaults)


@dataclass
class RunConfig:
    corpus: CorpusConfig
    segments: int = 5
    model: ModelConfig = field(default_factory=lambda: ModelRegistry.config_from("bilstm"))
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 13
    threshold: float = 0.5

    @property
    def loss(self) -> LossSpec:
        return self.train.loss


def load_config(path: str | Path) -> RunConfig:
    """
    Parse a run config. Only "corpus" is required.

    Raises:
        ConfigError: Unknown key, missing corpus path, or a violated constraint
    """
    path = Path(path)
    data = _read_json(path)
    _check_keys(data, ("corpus", "segments", "model", "train", "loss", "threshold", "seed"), "")
    if "corpus" not in data:
        raise ConfigError("missing required field", key="corpus")
    env = settings()
    root = path.parent
    seed = data.get("seed", env.seed)
    threshold = data.get("threshold", env.threshold)
    return RunConfig(
        corpus=parse_corpus(data["corpus"], root, "corpus"),
        segments=check_segments(data.get("segments", 5)),
        model=ModelRegistry.config_from(data.get("model", "bilstm")),
        train=parse_train(data.get("train", {}), data.get("loss"), seed, threshold),
        seed=seed,
        threshold=threshold,
    )


@dataclass
class Task:
    """One grid row group: optional pre-train and fine-tune corpora, then a test corpus."""

    id: str
    test: str
    pretrain: Optional[str] = None
    finetune: Optional[str] = None


@dataclass
class GridSpec:
    corpora: Dict[str, CorpusConfig]
    tasks: List[Task]
    models: Dict[str, ModelConfig]
    losses: List[LossSpec]
    train: TrainConfig
    seed: int = 13
    segments: int = 5
    workers: int = 1
    threshold: float = 0.5

    def cells(self) -> List[Tuple[Task, str, LossSpec]]:
        """Every (task, model name, loss) combination in declared order."""
        return [(task, model, loss) for task in self.tasks for model in self.models
                for loss in self.losses]


def _parse_task(data: Any, index: int, corpora: Mapping[str, CorpusConfig]) -> Task:
    key = f"tasks[{index}]"
    data = _object(data, key)
    _check_keys(data, ("id", "pretrain", "finetune", "test"), key)
    for required in ("id", "test"):
        if required not in data:
            raise ConfigError(f"missing field '{required}'", key=key)
    task = Task(id=str(data["id"]), test=data["test"], pretrain=data.get("pretrain"),
                finetune=data.get("finetune"))
    for role in ("test", "pretrain", "finetune"):
        name = getattr(task, role)
        if name is not None and name not in corpora:
            raise ConfigError(f"references undefined corpus {name!r}", key=f"{key}.{role}")
    return task


def load_grid(path: str | Path) -> GridSpec:
    """
    Parse a grid config: corpora, tasks, models, losses, and shared training settings.

    "models" is a list of preset names or an object of name -> preset/config.

    Raises:
        ConfigError: Unknown key, duplicate task id, undefined corpus, or empty list
    """
    path = Path(path)
    data = _read_json(path)
    _check_keys(data, ("corpora", "tasks", "models", "losses", "train", "seed", "segments",
                       "workers", "threshold"), "")
    env = settings()
    root = path.parent

    raw_corpora = _object(data.get("corpora", {}), "corpora")
    if not raw_corpora:
        raise ConfigError("at least one corpus is required", key="corpora")
    corpora = {name: parse_corpus(spec, root, f"corpora.{name}") for name, spec in raw_corpora.items()}

    raw_tasks = data.get("tasks", [])
    if not isinstance(raw_tasks, list) or not raw_tasks:
        raise ConfigError("must be a nonempty list", key="tasks")
    tasks = [_parse_task(t, i, corpora) for i, t in enumerate(raw_tasks)]
    seen = set()
    for task in tasks:
        if task.id in seen:
            raise ConfigError(f"duplicate task id {task.id!r}", key="tasks")
        seen.add(task.id)

    raw_models = data.get("models", ["bilstm"])
    if isinstance(raw_models, list):
        raw_models = {name: name for name in raw_models}
    raw_models = _object(raw_models, "models")
    if not raw_models:
        raise ConfigError("at least one model is required", key="models")
    models = {name: ModelRegistry.config_from(spec) for name, spec in raw_models.items()}

    raw_losses = data.get("losses", ["ce"])
    if not isinstance(raw_losses, list) or not raw_losses:
        raise ConfigError("must be a nonempty list", key="losses")
    losses = [LossSpec.from_dict(spec) for spec in raw_losses]
    names = [loss.name for loss in losses]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate loss entries", key="losses")

    seed = data.get("seed", env.seed)
    threshold = data.get("threshold", env.threshold)
    workers = data.get("workers", env.workers)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError(f"must be a positive integer, got {workers!r}", key="workers")
    return GridSpec(
        corpora=corpora,
        tasks=tasks,
        models=models,
        losses=losses,
        train=parse_train(data.get("train", {}), None, seed, threshold),
        seed=seed,
        segments=check_segments(data.get("segments", 5)),
        workers=workers,
        threshold=threshold,
    )
