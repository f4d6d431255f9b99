"""
Training objectives over end-of-segment probabilities.

All three losses consume p, the class-1 probability from a model's 2-way
softmax head:

    ce:          -log p                  (y = 1)    -log(1 - p)              (y = 0)
    weighted_ce: -w1 log p               (y = 1)    -w0 log(1 - p)           (y = 0)
    focal:       -a (1 - p)^g log p      (y = 1)    -(1 - a) p^g log(1 - p)  (y = 0)

p is clamped into [1e-7, 1 - 1e-7] before any log.
"""

from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, ShapeError
from .numerics import kernels as K
from .numerics.tensor import Tensor

CLAMP = 1e-7
KINDS = ("ce", "weighted_ce", "focal")

_PARAMS = {
    "ce": (),
    "weighted_ce": ("w0", "w1"),
    "focal": ("alpha", "gamma"),
}


@dataclass(frozen=True)
class LossSpec:
    """Loss kind plus exactly the parameters that kind needs."""

    kind: str = "ce"
    w0: Optional[float] = None
    w1: Optional[float] = None
    alpha: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown loss {self.kind!r} (expected one of {', '.join(KINDS)})",
                              key="loss")
        required = _PARAMS[self.kind]
        for key in ("w0", "w1", "alpha", "gamma"):
            value = getattr(self, key)
            if key in required and value is None:
                raise ConfigError(f"required by {self.kind} loss", key=key)
            if key not in required and value is not None:
                raise ConfigError(f"not used by {self.kind} loss", key=key)
        for key in ("w0", "w1", "alpha"):
            value = getattr(self, key)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ConfigError(f"must lie in [0, 1], got {value}", key=key)
        if self.gamma is not None and self.gamma < 0:
            raise ConfigError(f"must be >= 0, got {self.gamma}", key="gamma")

    @classmethod
    def ce(cls) -> "LossSpec":
        return cls("ce")

    @classmethod
    def weighted_ce(cls, w0: float = 0.2, w1: float = 0.8) -> "LossSpec":
        return cls("weighted_ce", w0=w0, w1=w1)

    @classmethod
    def focal(cls, alpha: float = 0.8, gamma: float = 2.0) -> "LossSpec":
        return cls("focal", alpha=alpha, gamma=gamma)

    @property
    def name(self) -> str:
        """Stable display name, also used to derive per-run seeds."""
        if self.kind == "weighted_ce":
            return f"weighted_ce(w0={self.w0:g},w1={self.w1:g})"
        if self.kind == "focal":
            return f"focal(alpha={self.alpha:g},gamma={self.gamma:g})"
        return "ce"

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {"kind": self.kind}
        for key in _PARAMS[self.kind]:
            record[key] = getattr(self, key)
        return record

    @classmethod
    def from_dict(cls, data: Union[str, Mapping[str, Any]]) -> "LossSpec":
        """Parse {"kind": ..., params} strictly; a bare kind string is also accepted."""
        if isinstance(data, str):
            data = {"kind": data}
        if not isinstance(data, Mapping):
            raise ConfigError("loss must be a string or an object", key="loss")
        values = dict(data)
        kind = values.pop("kind", "ce")
        for key in values:
            if key not in ("w0", "w1", "alpha", "gamma"):
                raise ConfigError("unknown loss field", key=key)
        # Kind defaults fill in omitted parameters
        if kind == "weighted_ce":
            values = {"w0": 0.2, "w1": 0.8, **values}
        elif kind == "focal":
            values = {"alpha": 0.8, "gamma": 2.0, **values}
        return cls(kind, **{k: float(v) for k, v in values.items()})


def example_losses(p: Tensor, labels: Union[Sequence[int], np.ndarray], spec: LossSpec) -> Tensor:
    """Per-example losses for a vector of probabilities and 0/1 labels."""
    p = p if isinstance(p, Tensor) else Tensor(np.asarray(p, dtype=np.float64))
    dtype = p.data.dtype
    y = np.asarray(labels, dtype=dtype)
    if y.shape != p.shape:
        raise ShapeError(f"loss: {p.shape} probabilities but {y.shape} labels")
    not_y = (1.0 - y).astype(dtype)
    p = K.clip(p, CLAMP, 1.0 - CLAMP)
    q = K.sub(1.0, p)
    pos = K.mul(K.log(p), -1.0)
    neg = K.mul(K.log(q), -1.0)
    if spec.kind == "ce":
        return K.add(K.mul(pos, y), K.mul(neg, not_y))
    if spec.kind == "weighted_ce":
        return K.add(K.mul(K.mul(pos, spec.w1), y), K.mul(K.mul(neg, spec.w0), not_y))
    pos_scale = K.mul(K.pow_(q, spec.gamma), spec.alpha)
    neg_scale = K.mul(K.pow_(p, spec.gamma), 1.0 - spec.alpha)
    return K.add(K.mul(K.mul(pos, pos_scale), y), K.mul(K.mul(neg, neg_scale), not_y))


def batch_loss(probabilities: Union[Tensor, np.ndarray, Sequence[float]],
               labels: Union[Sequence[int], np.ndarray], spec: LossSpec) -> Tensor:
    """
    Mean per-example loss.

    Raises:
        ShapeError: For an empty batch or mismatched lengths
    """
    p = probabilities if isinstance(probabilities, Tensor) else Tensor(
        np.asarray(probabilities, dtype=np.float64))
    if p.data.size == 0:
        raise ShapeError("loss: empty batch")
    return K.mean(example_losses(p, labels, spec))


def _scalar(p: float, y: int, spec: LossSpec) -> float:
    return example_losses(Tensor(np.array([p], dtype=np.float64)), [y], spec).item()


def ce_loss(p: float, y: int) -> float:
    return _scalar(p, y, LossSpec.ce())


def weighted_ce_loss(p: float, y: int, w0: float, w1: float) -> float:
    return _scalar(p, y, LossSpec.weighted_ce(w0, w1))


def focal_loss(p: float, y: int, alpha: float, gamma: float) -> float:
    return _scalar(p, y, LossSpec.focal(alpha, gamma))
