"""Training loops, the pre-train -> fine-tune workflow, and per-epoch history."""

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from .checkpoint import Checkpoint
from .corpus.types import SegDocument
from .errors import ConfigError, CorpusError
from .evaluation import check_threshold, evaluate_corpus
from .losses import LossSpec, batch_loss
from .models.base import SegmentationModel
from .models.registry import ModelConfig, ModelRegistry
from .numerics import kernels as K
from .numerics.optim import Adam
from .numerics.tensor import Graph, backward


@dataclass
class TrainConfig:
    """Optimization settings. learning_rate=None uses the model family's default."""

    epochs: int = 10
    batch_size: int = 8
    learning_rate: Optional[float] = None
    clip_norm: float = 5.0
    seed: int = 0
    loss: LossSpec = field(default_factory=LossSpec.ce)
    threshold: float = 0.5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"must be >= 0, got {self.epochs}", key="epochs")
        if self.batch_size < 1:
            raise ConfigError(f"must be >= 1, got {self.batch_size}", key="batch_size")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ConfigError(f"must be positive, got {self.learning_rate}", key="learning_rate")
        if self.clip_norm <= 0:
            raise ConfigError(f"must be positive, got {self.clip_norm}", key="clip_norm")
        for key in ("beta1", "beta2"):
            if not 0.0 <= getattr(self, key) < 1.0:
                raise ConfigError(f"must lie in [0, 1), got {getattr(self, key)}", key=key)
        check_threshold(self.threshold)

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["loss"] = self.loss.to_dict()
        return record

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], **defaults) -> "TrainConfig":
        """Strict parse: unknown keys are rejected. defaults fill keys absent from data."""
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError("unknown training field", key=key)
        values = {**defaults, **data}
        if "loss" in values and not isinstance(values["loss"], LossSpec):
            values["loss"] = LossSpec.from_dict(values["loss"])
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(str(e)) from None


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TrainResult:
    model: SegmentationModel
    checkpoint: Checkpoint
    history: List[EpochRecord]
    skipped: List[str] = field(default_factory=list)


class Trainer:
    """
    Mini-batch trainer shared by both model families.

    Each document is its own graph; per-document gradients are weighted by the
    document's share of the batch's candidate breaks and summed, so one step
    minimizes the mean loss over every break in the batch.
    """

    def __init__(self, config: TrainConfig, verbose: bool = False,
                 log_callback: Optional[Callable[[str], None]] = None):
        """
        Args:
            config: Optimization settings
            verbose: Enable progress logging (default: False)
            log_callback: Optional callback function for logging (receives message string)
        """
        self.config = config
        self.verbose = verbose
        self.log_callback = log_callback

    def _log(self, message: str):
        """Log a message if verbose mode is enabled."""
        if self.verbose and self.log_callback:
            self.log_callback(message)

    def usable(self, documents: Sequence[SegDocument]) -> List[SegDocument]:
        """
        Drop documents without a candidate break.

        Raises:
            CorpusError: If no document is left
        """
        kept = []
        for doc in documents:
            if len(doc) < 2:
                self._log(f"⚠️  Skipping document {doc.doc_id!r}: fewer than 2 sentences")
                continue
            kept.append(doc)
        if not kept:
            raise CorpusError("no trainable documents: every document has fewer than 2 sentences")
        return kept

    def fit(self, model: SegmentationModel, documents: Sequence[SegDocument],
            dev_documents: Optional[Sequence[SegDocument]] = None) -> List[EpochRecord]:
        """Train a model in place; returns one record per epoch."""
        cfg = self.config
        documents = self.usable(documents)
        lr = cfg.learning_rate if cfg.learning_rate is not None else model.default_learning_rate
        optimizer = Adam(lr=lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
                         clip_norm=cfg.clip_norm)
        examples = [(model.encode(doc), np.asarray(doc.gap_labels)) for doc in documents]
        rng = np.random.default_rng(cfg.seed)

        history: List[EpochRecord] = []
        for epoch in range(1, cfg.epochs + 1):
            order = rng.permutation(len(examples))
            total, count = 0.0, 0
            for start in range(0, len(order), cfg.batch_size):
                batch = [examples[i] for i in order[start:start + cfg.batch_size]]
                breaks = sum(len(labels) for _, labels in batch)
                grads: Dict[str, np.ndarray] = {}
                for encoded, labels in batch:
                    graph = Graph()
                    probs = model.forward(graph.bind(model.params), encoded)
                    loss = batch_loss(probs, labels, cfg.loss)
                    doc_grads = backward(graph, K.mul(loss, len(labels) / breaks))
                    for name, grad in doc_grads.items():
                        grads[name] = grads[name] + grad if name in grads else grad
                    total += loss.item() * len(labels)
                    count += len(labels)
                optimizer.step(model.params, grads)

            record = EpochRecord(epoch=epoch, train_loss=total / count)
            message = f"  ├─ epoch {epoch}/{cfg.epochs}: loss {record.train_loss:.4f}"
            if dev_documents:
                report = evaluate_corpus(model, dev_documents, cfg.threshold)
                record.precision, record.recall, record.f1 = (report.precision, report.recall,
                                                              report.f1)
                message += (f", dev P {report.precision:.3f} R {report.recall:.3f} "
                            f"F1 {report.f1:.3f}")
            self._log(message)
            history.append(record)
        return history

    def predict(self, model: SegmentationModel, document: SegDocument) -> np.ndarray:
        """Gap probabilities (n-1 values) for one document."""
        return model.gap_probabilities(document)


def train(model_config: ModelConfig, train_documents: Sequence[SegDocument],
          dev_documents: Optional[Sequence[SegDocument]], config: TrainConfig,
          verbose: bool = False,
          log_callback: Optional[Callable[[str], None]] = None) -> TrainResult:
    """
    Train a fresh model from scratch.

    The vocabulary is built from the usable training documents and parameters
    are initialized from config.seed. With epochs=0 the checkpoint holds the
    initialization.
    """
    trainer = Trainer(config, verbose=verbose, log_callback=log_callback)
    documents = trainer.usable(train_documents)
    skipped = [d.doc_id for d in train_documents if len(d) < 2]
    model = ModelRegistry.create(model_config, documents, config.seed)
    trainer._log(f"🚀 Training {model.family} model ({model.parameter_count()} parameters, "
                 f"vocabulary {len(model.vocabulary)}) on {len(documents)} documents")
    history = trainer.fit(model, documents, dev_documents)
    checkpoint = Checkpoint.from_model(model, history=[r.to_dict() for r in history],
                                       train=config.to_dict())
    return TrainResult(model=model, checkpoint=checkpoint, history=history, skipped=skipped)


def finetune(checkpoint: Checkpoint, train_documents: Sequence[SegDocument], config: TrainConfig,
             dev_documents: Optional[Sequence[SegDocument]] = None,
             family: Optional[str] = None, verbose: bool = False,
             log_callback: Optional[Callable[[str], None]] = None) -> TrainResult:
    """
    Continue training a checkpointed model on new documents.

    The checkpoint's vocabulary is kept; unseen tokens map to [UNK].

    Raises:
        ConfigError: If family is given and differs from the checkpoint's
    """
    if family is not None and family != checkpoint.family:
        raise ConfigError(
            f"checkpoint holds a {checkpoint.family} model, configuration expects {family}",
            key="family",
        )
    trainer = Trainer(config, verbose=verbose, log_callback=log_callback)
    model = checkpoint.to_model()
    trainer._log(f"🔁 Fine-tuning {model.family} model on {len(train_documents)} documents")
    history = trainer.fit(model, train_documents, dev_documents)
    skipped = [d.doc_id for d in train_documents if len(d) < 2]
    result = Checkpoint.from_model(model, history=[r.to_dict() for r in history],
                                   train=config.to_dict())
    return TrainResult(model=model, checkpoint=result, history=history, skipped=skipped)
