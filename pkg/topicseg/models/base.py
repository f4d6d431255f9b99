"""Common interface of the segmentation model families."""

from abc import ABC, abstractmethod
from dataclasses import asdict
from typing import Any, ClassVar, Dict, Mapping

import numpy as np

from ..corpus.types import SegDocument
from ..corpus.vocab import Vocabulary
from ..numerics.tensor import Tensor, constants


class SegmentationModel(ABC):
    """
    A boundary classifier: config, vocabulary, and named float32 parameters.

    Subclasses turn a document into model inputs once (encode) and map those
    inputs to the probabilities of the n-1 candidate breaks (forward). forward
    takes the parameters as tensors so the same code serves inference (constant
    tensors) and training (leaves on a Graph).
    """

    family: ClassVar[str]
    default_learning_rate: ClassVar[float]

    def __init__(self, config: Any, vocabulary: Vocabulary, params: Dict[str, np.ndarray]):
        self.config = config
        self.vocabulary = vocabulary
        self.params = params

    @abstractmethod
    def encode(self, document: SegDocument) -> Any:
        """Document -> family-specific id structure."""

    @abstractmethod
    def forward(self, tensors: Mapping[str, Tensor], encoded: Any) -> Tensor:
        """Encoded document -> (n-1,) tensor of end-of-segment probabilities."""

    def gap_probabilities(self, document: SegDocument) -> np.ndarray:
        """Inference on one document; returns n-1 probabilities."""
        return self.forward(constants(self.params), self.encode(document)).data

    def parameter_count(self) -> int:
        return int(sum(array.size for array in self.params.values()))

    def config_dict(self) -> Dict[str, Any]:
        return asdict(self.config)
