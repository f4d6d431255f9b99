"""
Hierarchical Bi-LSTM segmenter.

A sentence encoder (word embeddings -> 2-layer BiLSTM -> max-pool over time)
produces one embedding per sentence; a document-level 2-layer BiLSTM runs
over those embeddings and an affine map + softmax scores every sentence as
end-of-segment or not.
"""

from dataclasses import dataclass
from typing import ClassVar, List, Mapping, Sequence

import numpy as np

from ..corpus.types import SegDocument
from ..errors import ConfigError, ShapeError
from ..numerics import kernels as K
from ..numerics.tensor import Tensor
from .base import SegmentationModel
from .layers import (
    ParamSpec,
    bias,
    bilstm,
    bilstm_specs,
    boundary_probability,
    embedding,
    linear,
    masked_max_pool,
    weight,
)

FAMILY = "hierarchical"


@dataclass
class HierarchicalConfig:
    vocab_size: int = 0
    emb_dim: int = 64
    hidden_dim: int = 128
    doc_hidden_dim: int = 128
    min_count: int = 1

    family: ClassVar[str] = FAMILY

    def validate(self, require_vocab: bool = True) -> None:
        if require_vocab and self.vocab_size < 5:
            raise ConfigError(f"must be at least 5 (4 specials + 1 token), got {self.vocab_size}",
                              key="vocab_size")
        for key in ("emb_dim", "hidden_dim", "doc_hidden_dim", "min_count"):
            if getattr(self, key) < 1:
                raise ConfigError(f"must be positive, got {getattr(self, key)}", key=key)


def param_specs(config: HierarchicalConfig) -> List[ParamSpec]:
    return [
        embedding("word_embedding", config.vocab_size, config.emb_dim),
        *bilstm_specs("sentence", config.emb_dim, config.hidden_dim),
        *bilstm_specs("document", 2 * config.hidden_dim, config.doc_hidden_dim),
        weight("output.weight", 2 * config.doc_hidden_dim, 2),
        bias("output.bias", 2),
    ]


def _pad(id_lists: Sequence[Sequence[int]]):
    lengths = [len(ids) for ids in id_lists]
    if not lengths or min(lengths) == 0:
        raise ShapeError("encode_sentence: sentences must contain at least one token")
    width = max(lengths)
    ids = np.zeros((len(id_lists), width), dtype=np.int64)
    mask = np.zeros((len(id_lists), width), dtype=np.float32)
    for row, sentence in enumerate(id_lists):
        ids[row, :len(sentence)] = sentence
        mask[row, :len(sentence)] = 1.0
    return ids, mask


def encode_sentences(p: Mapping[str, Tensor], id_lists: Sequence[Sequence[int]]) -> Tensor:
    """Embed a batch of sentences; returns (n, 2 * hidden_dim)."""
    ids, mask = _pad(id_lists)
    states = bilstm(p, "sentence", K.gather(p["word_embedding"], ids), mask)
    return masked_max_pool(states, mask)


def encode_sentence(p: Mapping[str, Tensor], ids: Sequence[int]) -> Tensor:
    """One sentence embedding of width 2 * hidden_dim."""
    return encode_sentences(p, [ids])[0]


def hier_forward(p: Mapping[str, Tensor], id_lists: Sequence[Sequence[int]]) -> Tensor:
    """End-of-segment probability for every sentence of a document: shape (n,)."""
    embeddings = encode_sentences(p, id_lists)
    n = embeddings.shape[0]
    sequence = K.reshape(embeddings, (1, n, embeddings.shape[1]))
    states = bilstm(p, "document", sequence, np.ones((1, n), dtype=np.float32))
    logits = linear(K.reshape(states, (n, states.shape[2])), p["output.weight"], p["output.bias"])
    return boundary_probability(logits)


class HierarchicalSegmenter(SegmentationModel):
    family = FAMILY
    default_learning_rate = 1e-3

    def encode(self, document: SegDocument) -> List[List[int]]:
        return [self.vocabulary.encode_words(s.word_tokens) for s in document.sentences]

    def forward(self, tensors: Mapping[str, Tensor], encoded: List[List[int]]) -> Tensor:
        # The final sentence is always a boundary, so only the n-1 gaps are returned
        probs = hier_forward(tensors, encoded)
        return probs[:len(encoded) - 1]
