"""Topic Segmentation Toolkit - boundary classifiers for structured and conversational text."""

__version__ = "0.1.0"
