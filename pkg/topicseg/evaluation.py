"""Boundary thresholding and micro-averaged precision / recall / F1 over candidate breaks."""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from .errors import ConfigError, CorpusError, ShapeError


@dataclass(frozen=True)
class EvalReport:
    """True-positive, false-positive and false-negative boundary counts."""

    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def merge(self, other: "EvalReport") -> "EvalReport":
        return EvalReport(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def check_threshold(threshold: float) -> float:
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"must lie in (0, 1), got {threshold}", key="threshold")
    return threshold


def predict_boundaries(probabilities: Sequence[float], threshold: float = 0.5,
                       includes_final: bool = True) -> List[int]:
    """
    Threshold probabilities into 0/1 predictions (1 iff p >= threshold).

    With includes_final, the input holds one probability per sentence and the
    final sentence is dropped, leaving the n-1 candidate breaks.
    """
    check_threshold(threshold)
    probs = np.asarray(probabilities, dtype=np.float64)
    if includes_final:
        probs = probs[:-1]
    return [int(p >= threshold) for p in probs]


def prf1(predictions: Sequence[int], gold: Sequence[int]) -> EvalReport:
    """
    Count boundary agreement between predictions and gold labels.

    Raises:
        ShapeError: If the sequences differ in length
    """
    if len(predictions) != len(gold):
        raise ShapeError(f"prf1: {len(predictions)} predictions but {len(gold)} gold labels")
    pred = np.asarray(predictions, dtype=bool)
    true = np.asarray(gold, dtype=bool)
    return EvalReport(
        tp=int(np.sum(pred & true)),
        fp=int(np.sum(pred & ~true)),
        fn=int(np.sum(~pred & true)),
    )


def document_counts(gap_probabilities: Sequence[float], gap_labels: Sequence[int],
                    threshold: float = 0.5) -> EvalReport:
    """Counts for one document given its n-1 gap probabilities and labels."""
    return prf1(predict_boundaries(gap_probabilities, threshold, includes_final=False), gap_labels)


def merge_reports(reports: Iterable[EvalReport]) -> EvalReport:
    total = EvalReport()
    for report in reports:
        total = total.merge(report)
    return total


def evaluate_corpus(model, documents: Sequence, threshold: float = 0.5) -> EvalReport:
    """
    Micro-averaged report: counts pooled over every candidate break of every document.

    Documents with fewer than 2 sentences have no candidate breaks and are skipped.

    Raises:
        CorpusError: For an empty corpus
    """
    if not documents:
        raise CorpusError("cannot evaluate an empty corpus")
    check_threshold(threshold)
    reports = [
        document_counts(model.gap_probabilities(doc), doc.gap_labels, threshold)
        for doc in documents
        if len(doc) >= 2
    ]
    return merge_reports(reports)
