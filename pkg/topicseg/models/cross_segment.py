"""
Cross-segment transformer boundary classifier.

Every candidate break is scored independently from a local window:
[CLS] + k word-piece tokens left of the break + [SEP] + k tokens right of it
+ [SEP]. The windows of one document are padded into a single batch and run
through a pre-norm transformer encoder; the CLS state feeds a 2-way softmax.
"""

from dataclasses import dataclass
from typing import ClassVar, List, Mapping, Sequence, Tuple

import numpy as np

from ..corpus.types import SegDocument
from ..corpus.vocab import CLS, PAD, SEP
from ..errors import ConfigError, SegmentationError, ShapeError
from ..numerics import kernels as K
from ..numerics.tensor import Tensor
from .base import SegmentationModel
from .layers import (
    ParamSpec,
    bias,
    boundary_probability,
    embedding,
    layer_norm_specs,
    linear,
    weight,
)

FAMILY = "cross_segment"


@dataclass
class CrossSegmentConfig:
    vocab_size: int = 0
    model_dim: int = 128
    num_layers: int = 4
    num_heads: int = 4
    ff_dim: int = 512
    max_seq: int = 128
    context_size: int = 62
    wordpiece_vocab: int = 2000

    family: ClassVar[str] = FAMILY

    def validate(self, require_vocab: bool = True) -> None:
        if require_vocab and self.vocab_size < 5:
            raise ConfigError(f"must be at least 5 (4 specials + 1 token), got {self.vocab_size}",
                              key="vocab_size")
        for key in ("model_dim", "num_layers", "num_heads", "ff_dim", "max_seq",
                    "context_size", "wordpiece_vocab"):
            if getattr(self, key) < 1:
                raise ConfigError(f"must be positive, got {getattr(self, key)}", key=key)
        if self.model_dim % self.num_heads:
            raise ConfigError(
                f"{self.num_heads} heads do not divide model_dim {self.model_dim}", key="num_heads"
            )
        if 2 * self.context_size + 3 > self.max_seq:
            raise ConfigError(
                f"2 * context_size + 3 = {2 * self.context_size + 3} exceeds max_seq {self.max_seq}",
                key="context_size",
            )


def param_specs(config: CrossSegmentConfig) -> List[ParamSpec]:
    d, ff = config.model_dim, config.ff_dim
    specs = [
        embedding("token_embedding", config.vocab_size, d),
        embedding("position_embedding", config.max_seq, d),
    ]
    for layer in range(config.num_layers):
        prefix = f"layers.{layer}"
        specs.extend(layer_norm_specs(f"{prefix}.ln1", d))
        for proj in ("q", "k", "v", "o"):
            specs.append(weight(f"{prefix}.attn.w{proj}", d, d))
            specs.append(bias(f"{prefix}.attn.b{proj}", d))
        specs.extend(layer_norm_specs(f"{prefix}.ln2", d))
        specs.extend([
            weight(f"{prefix}.ff.w1", d, ff),
            bias(f"{prefix}.ff.b1", ff),
            weight(f"{prefix}.ff.w2", ff, d),
            bias(f"{prefix}.ff.b2", d),
        ])
    specs.extend(layer_norm_specs("final_ln", d))
    specs.extend([weight("classifier.weight", d, 2), bias("classifier.bias", 2)])
    return specs


def extract_context(sentence_ids: Sequence[Sequence[int]], gap: int, k: int) -> List[int]:
    """
    Build the input window around the break after sentence `gap`.

    Windows cross sentence boundaries but never the document's edges.

    Examples:
        >>> extract_context([[10, 11], [12, 13, 14], [15]], gap=1, k=3)
        [2, 12, 13, 14, 3, 15, 3]
    """
    n = len(sentence_ids)
    if not 0 <= gap < n - 1:
        raise SegmentationError(f"gap index {gap} out of range for {n} sentences")
    if k < 1:
        raise SegmentationError(f"context size must be >= 1, got {k}")
    left: List[int] = []
    for sentence in reversed(sentence_ids[:gap + 1]):
        left[:0] = sentence[-(k - len(left)):]
        if len(left) >= k:
            break
    right: List[int] = []
    for sentence in sentence_ids[gap + 1:]:
        right.extend(sentence[:k - len(right)])
        if len(right) >= k:
            break
    return [CLS, *left, SEP, *right, SEP]


def batch_contexts(windows: Sequence[Sequence[int]]) -> Tuple[np.ndarray, np.ndarray]:
    """Right-pad windows with PAD; the mask is True at PAD positions."""
    if not windows:
        raise SegmentationError("no candidate breaks: a document needs at least 2 sentences")
    width = max(len(w) for w in windows)
    ids = np.full((len(windows), width), PAD, dtype=np.int64)
    for row, window in enumerate(windows):
        ids[row, :len(window)] = window
    return ids, ids == PAD


def _split_heads(x: Tensor, heads: int) -> Tensor:
    batch, seq, dim = x.shape
    return K.transpose(K.reshape(x, (batch, seq, heads, dim // heads)), (0, 2, 1, 3))


def _merge_heads(x: Tensor) -> Tensor:
    batch, heads, seq, head_dim = x.shape
    return K.reshape(K.transpose(x, (0, 2, 1, 3)), (batch, seq, heads * head_dim))


def encoder_layer(p: Mapping[str, Tensor], prefix: str, x: Tensor, keep: np.ndarray,
                  heads: int) -> Tensor:
    h = K.layer_norm(x, p[f"{prefix}.ln1.gamma"], p[f"{prefix}.ln1.beta"])
    q = _split_heads(linear(h, p[f"{prefix}.attn.wq"], p[f"{prefix}.attn.bq"]), heads)
    k = _split_heads(linear(h, p[f"{prefix}.attn.wk"], p[f"{prefix}.attn.bk"]), heads)
    v = _split_heads(linear(h, p[f"{prefix}.attn.wv"], p[f"{prefix}.attn.bv"]), heads)
    attended = _merge_heads(K.attention(q, k, v, keep_mask=keep))
    x = K.add(x, linear(attended, p[f"{prefix}.attn.wo"], p[f"{prefix}.attn.bo"]))
    h = K.layer_norm(x, p[f"{prefix}.ln2.gamma"], p[f"{prefix}.ln2.beta"])
    h = K.gelu(linear(h, p[f"{prefix}.ff.w1"], p[f"{prefix}.ff.b1"]))
    return K.add(x, linear(h, p[f"{prefix}.ff.w2"], p[f"{prefix}.ff.b2"]))


def cross_segment_forward(p: Mapping[str, Tensor], config: CrossSegmentConfig,
                          ids: np.ndarray, pad_mask: np.ndarray) -> Tensor:
    """
    Score a batch of windows.

    Args:
        p: Parameter tensors
        config: Architecture (layers, heads, max_seq)
        ids: (B, S) or (S,) token ids
        pad_mask: Same shape as ids, True at PAD positions

    Returns:
        (B,) end-of-segment probabilities, or a scalar-shaped (1,) tensor for 1-D input

    Raises:
        ShapeError: If S exceeds max_seq or the mask shape differs from ids
    """
    ids = np.atleast_2d(np.asarray(ids, dtype=np.int64))
    pad_mask = np.atleast_2d(np.asarray(pad_mask, dtype=bool))
    if ids.shape != pad_mask.shape:
        raise ShapeError(f"cross_segment_forward: ids {ids.shape} and mask {pad_mask.shape} differ")
    seq = ids.shape[1]
    if seq > config.max_seq:
        raise ShapeError(f"cross_segment_forward: sequence length {seq} exceeds max_seq "
                         f"{config.max_seq}")
    x = K.add(K.gather(p["token_embedding"], ids),
              K.gather(p["position_embedding"], np.arange(seq)))
    # (B, 1, 1, S): every query may attend to every non-PAD key
    keep = ~pad_mask[:, None, None, :]
    for layer in range(config.num_layers):
        x = encoder_layer(p, f"layers.{layer}", x, keep, config.num_heads)
    x = K.layer_norm(x, p["final_ln.gamma"], p["final_ln.beta"])
    logits = linear(x[:, 0, :], p["classifier.weight"], p["classifier.bias"])
    return boundary_probability(logits)


class CrossSegmentClassifier(SegmentationModel):
    family = FAMILY
    default_learning_rate = 3e-4

    def encode(self, document: SegDocument) -> Tuple[np.ndarray, np.ndarray]:
        sentence_ids = [self.vocabulary.encode_words(s.word_tokens) for s in document.sentences]
        k = self.config.context_size
        windows = [extract_context(sentence_ids, g, k) for g in range(len(sentence_ids) - 1)]
        return batch_contexts(windows)

    def forward(self, tensors: Mapping[str, Tensor], encoded: Tuple[np.ndarray, np.ndarray]) -> Tensor:
        ids, pad_mask = encoded
        return cross_segment_forward(tensors, self.config, ids, pad_mask)
