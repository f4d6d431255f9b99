"""Model Registry - central name -> implementation table for both model families."""

from dataclasses import asdict, fields, replace
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Sequence, Type, Union

import numpy as np

from ..corpus.types import SegDocument
from ..corpus.vocab import Vocabulary, build_word_vocabulary
from ..corpus.wordpiece import train_wordpiece
from ..errors import ConfigError
from . import cross_segment, hierarchical
from .base import SegmentationModel
from .cross_segment import CrossSegmentClassifier, CrossSegmentConfig
from .hierarchical import HierarchicalConfig, HierarchicalSegmenter
from .layers import ParamSpec, initialize

ModelConfig = Union[HierarchicalConfig, CrossSegmentConfig]


class Family(NamedTuple):
    config_class: Type
    model_class: Type[SegmentationModel]
    param_specs: Callable[[Any], List[ParamSpec]]


FAMILIES: Dict[str, Family] = {
    hierarchical.FAMILY: Family(HierarchicalConfig, HierarchicalSegmenter,
                                hierarchical.param_specs),
    cross_segment.FAMILY: Family(CrossSegmentConfig, CrossSegmentClassifier,
                                 cross_segment.param_specs),
}

# Named architectures; any field can be overridden in a config file
PRESETS: Dict[str, Dict[str, Any]] = {
    "bilstm": {"family": "hierarchical", "emb_dim": 64, "hidden_dim": 128,
               "doc_hidden_dim": 128},
    "csbert": {"family": "cross_segment", "num_layers": 4, "model_dim": 128, "num_heads": 4,
               "ff_dim": 512, "max_seq": 128, "context_size": 62, "wordpiece_vocab": 2000},
    "csroberta": {"family": "cross_segment", "num_layers": 3, "model_dim": 96, "num_heads": 3,
                  "ff_dim": 384, "max_seq": 128, "context_size": 62, "wordpiece_vocab": 3000},
    "csbert-large": {"family": "cross_segment", "num_layers": 24, "model_dim": 1024,
                     "num_heads": 16, "ff_dim": 4096, "max_seq": 512, "context_size": 250,
                     "wordpiece_vocab": 30000},
    "csroberta-base": {"family": "cross_segment", "num_layers": 12, "model_dim": 768,
                       "num_heads": 12, "ff_dim": 3072, "max_seq": 512, "context_size": 250,
                       "wordpiece_vocab": 30000},
}


def family_of(config: ModelConfig) -> Family:
    try:
        return FAMILIES[config.family]
    except (AttributeError, KeyError):
        raise ConfigError(f"unknown model config type {type(config).__name__}") from None


def init_model(config: ModelConfig, seed: int) -> Dict[str, np.ndarray]:
    """
    Deterministically initialize every parameter of a model config.

    Weight matrices are uniform in +-1/sqrt(fan_in), biases zero, layer-norm
    gains one, and embeddings uniform in +-1/sqrt(dim).

    Raises:
        ConfigError: Naming the violated constraint
    """
    config.validate()
    return initialize(family_of(config).param_specs(config), seed)


def parameter_count(config: ModelConfig) -> int:
    """Closed-form parameter count from the component shapes."""
    config.validate()
    return sum(spec.size for spec in family_of(config).param_specs(config))


class ModelRegistry:
    """
    Central registry for the segmentation model families.
    Handles config parsing, vocabulary construction, and model creation.
    """

    families = FAMILIES
    presets = PRESETS

    @classmethod
    def config_from(cls, spec: Union[str, Mapping[str, Any], ModelConfig]) -> ModelConfig:
        """
        Resolve a preset name, a mapping, or an existing config object.

        Mappings name either {"preset": ...} or {"family": ...} plus field overrides.

        Raises:
            ConfigError: Unknown preset/family or unknown field
        """
        if isinstance(spec, (HierarchicalConfig, CrossSegmentConfig)):
            return spec
        if isinstance(spec, str):
            spec = {"preset": spec}
        values = dict(spec)
        preset = values.pop("preset", None)
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(
                    f"unknown preset {preset!r} (expected one of {', '.join(PRESETS)})", key="preset"
                )
            values = {**PRESETS[preset], **values}
        family_name = values.pop("family", None)
        if family_name not in FAMILIES:
            raise ConfigError(
                f"unknown model family {family_name!r} (expected one of {', '.join(FAMILIES)})",
                key="family",
            )
        config_class = FAMILIES[family_name].config_class
        known = {f.name for f in fields(config_class)}
        for key in values:
            if key not in known:
                raise ConfigError(f"unknown field for {family_name} models", key=key)
        config = config_class(**values)
        config.validate(require_vocab=False)
        return config

    @staticmethod
    def config_to_dict(config: ModelConfig) -> Dict[str, Any]:
        return {"family": config.family, **asdict(config)}

    @classmethod
    def build_vocabulary(cls, config: ModelConfig, documents: Sequence[SegDocument]) -> Vocabulary:
        """Word vocabulary for the hierarchical family, trained word pieces for cross-segment."""
        if isinstance(config, CrossSegmentConfig):
            sentences = [s for d in documents for s in d.sentences]
            return train_wordpiece(sentences, config.wordpiece_vocab)
        return build_word_vocabulary(documents, config.min_count)

    @classmethod
    def create(cls, config: ModelConfig, documents: Sequence[SegDocument],
               seed: int) -> SegmentationModel:
        """Build the vocabulary from training documents and initialize a fresh model."""
        vocabulary = cls.build_vocabulary(config, documents)
        config = replace(config, vocab_size=len(vocabulary))
        params = init_model(config, seed)
        return family_of(config).model_class(config, vocabulary, params)

    @classmethod
    def assemble(cls, family: str, config: Mapping[str, Any], vocabulary: Vocabulary,
                 params: Dict[str, np.ndarray]) -> SegmentationModel:
        """Rebuild a model from stored parts (used when loading checkpoints)."""
        model_config = cls.config_from({"family": family, **config})
        model_config.validate()
        return FAMILIES[family].model_class(model_config, vocabulary, params)
