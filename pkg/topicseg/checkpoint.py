"""
Checkpoint persistence.

File layout: one line of compact JSON (the manifest) terminated by LF, then
the raw parameter payload as little-endian float32 values. The manifest
records the format version, model family and config, the vocabulary, and a
parameter table of name / shape / byte offset into the payload.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict

import numpy as np

from .corpus.vocab import Vocabulary
from .errors import CheckpointError, CorpusError
from .utils import ensure_parent

FORMAT = "topicseg-checkpoint"
VERSION = 1
_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    family: str
    config: Dict[str, Any]
    vocabulary: Vocabulary
    params: Dict[str, np.ndarray]
    version: int = VERSION
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_model(cls, model, **metadata) -> "Checkpoint":
        """Snapshot a model; parameters are copied."""
        return cls(
            family=model.family,
            config=model.config_dict(),
            vocabulary=model.vocabulary,
            params={name: array.astype(np.float32, copy=True) for name, array in model.params.items()},
            metadata=dict(metadata),
        )

    def to_model(self):
        """Rebuild the model this checkpoint was taken from (parameters are copied)."""
        from .models.registry import ModelRegistry

        params = {name: array.copy() for name, array in self.params.items()}
        return ModelRegistry.assemble(self.family, self.config, self.vocabulary, params)


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> Path:
    """Write manifest + payload; returns the path written."""
    table = []
    offset = 0
    for name, array in checkpoint.params.items():
        table.append({"name": name, "shape": list(array.shape), "offset": offset})
        offset += int(array.size) * _DTYPE.itemsize
    manifest = {
        "format": FORMAT,
        "version": checkpoint.version,
        "family": checkpoint.family,
        "config": checkpoint.config,
        "vocabulary": checkpoint.vocabulary.to_dict(),
        "metadata": checkpoint.metadata,
        "params": table,
        "payload_bytes": offset,
    }
    path = ensure_parent(path)
    with open(path, "wb") as f:
        f.write(json.dumps(manifest, separators=(",", ":")).encode("utf-8"))
        f.write(b"\n")
        for array in checkpoint.params.values():
            f.write(np.ascontiguousarray(array, dtype=_DTYPE).tobytes())
    return path


def _field(manifest: Dict[str, Any], name: str, kind: type):
    if name not in manifest:
        raise CheckpointError(f"corrupt manifest: missing field '{name}'")
    value = manifest[name]
    if not isinstance(value, kind):
        raise CheckpointError(f"corrupt manifest: field '{name}' must be a {kind.__name__}")
    return value


def load_checkpoint(path: str | Path) -> Checkpoint:
    """
    Read and strictly validate a checkpoint.

    Raises:
        CheckpointError: Corrupt manifest, unsupported version, inconsistent
            parameter table, or a payload that is truncated or too long
    """
    data = Path(path).read_bytes()
    newline = data.find(b"\n")
    if newline < 0:
        raise CheckpointError(f"{path}: corrupt checkpoint (no manifest line)")
    try:
        manifest = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt manifest ({e})") from None
    if not isinstance(manifest, dict) or manifest.get("format") != FORMAT:
        raise CheckpointError(f"{path}: not a {FORMAT} file")
    version = _field(manifest, "version", int)
    if version != VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {version} (this build reads version {VERSION})"
        )

    family = _field(manifest, "family", str)
    config = _field(manifest, "config", dict)
    table = _field(manifest, "params", list)
    declared = _field(manifest, "payload_bytes", int)
    try:
        vocabulary = Vocabulary.from_dict(_field(manifest, "vocabulary", dict))
    except CorpusError as e:
        raise CheckpointError(f"{path}: corrupt vocabulary ({e})") from None

    payload = data[newline + 1:]
    if len(payload) != declared:
        raise CheckpointError(
            f"{path}: payload is {len(payload)} bytes, manifest declares {declared}"
        )
    params: Dict[str, np.ndarray] = {}
    expected_offset = 0
    for entry in table:
        if not isinstance(entry, dict) or not {"name", "shape", "offset"} <= entry.keys():
            raise CheckpointError(f"{path}: corrupt parameter table entry {entry!r}")
        name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
        if offset != expected_offset:
            raise CheckpointError(
                f"{path}: parameter {name} at offset {offset}, expected {expected_offset}"
            )
        if any(not isinstance(d, int) or d <= 0 for d in shape):
            raise CheckpointError(f"{path}: parameter {name} has invalid shape {list(shape)}")
        count = int(np.prod(shape))
        expected_offset += count * _DTYPE.itemsize
        if expected_offset > len(payload):
            raise CheckpointError(f"{path}: payload truncated inside parameter {name}")
        array = np.frombuffer(payload, dtype=_DTYPE, count=count, offset=offset)
        params[name] = array.astype(np.float32).reshape(shape)
    if expected_offset != len(payload):
        raise CheckpointError(
            f"{path}: parameter table covers {expected_offset} bytes, payload has {len(payload)}"
        )
    return Checkpoint(family=family, config=config, vocabulary=vocabulary, params=params,
                      version=version, metadata=manifest.get("metadata", {}))
