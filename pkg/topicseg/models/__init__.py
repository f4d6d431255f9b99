"""Hierarchical Bi-LSTM and cross-segment transformer boundary classifiers."""

from .base import SegmentationModel
from .cross_segment import (
    CrossSegmentClassifier,
    CrossSegmentConfig,
    cross_segment_forward,
    extract_context,
)
from .hierarchical import HierarchicalConfig, HierarchicalSegmenter, encode_sentence, hier_forward
from .registry import PRESETS, ModelRegistry, init_model, parameter_count

__all__ = [
    "CrossSegmentClassifier",
    "CrossSegmentConfig",
    "HierarchicalConfig",
    "HierarchicalSegmenter",
    "ModelRegistry",
    "PRESETS",
    "SegmentationModel",
    "cross_segment_forward",
    "encode_sentence",
    "extract_context",
    "hier_forward",
    "init_model",
    "parameter_count",
]
