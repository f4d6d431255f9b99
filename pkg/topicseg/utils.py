"""Utility functions for file handling and deterministic seeding."""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Tuple

from .errors import CorpusError

# The toolkit's own outputs and the archives corpora ship in
SKIPPED_EXTENSIONS = {'.ckpt', '.csv', '.json', '.jsonl', '.tar', '.gz', '.bz2', '.zip'}


def resolve_path(root: str | Path, rel_path: str | Path) -> Path:
    """
    Resolve a path written in a config file against the config's directory.

    Absolute paths are returned unchanged (resolved); relative paths are
    joined onto the root.

    Args:
        root: Directory the relative path is anchored to
        rel_path: The path as written in the config

    Returns:
        The resolved absolute path
    """
    candidate = Path(rel_path)
    if candidate.is_absolute():
        return candidate.resolve()
    return (Path(root) / candidate).resolve()


def ensure_parent(path: str | Path) -> Path:
    """
    Create the parent directory of an output path if it does not exist.

    Args:
        path: Output file path

    Returns:
        The path as a Path object
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def is_text_file(file_path: Path) -> bool:
    """Check whether a path looks like a readable text file."""
    if not file_path.exists() or file_path.is_dir():
        return False
    if file_path.name.startswith("."):
        return False
    return file_path.suffix.lower() not in SKIPPED_EXTENSIONS


def iter_text_files(path: str | Path) -> List[Path]:
    """
    List the text files under a path in a stable order.

    Args:
        path: A single file or a directory (searched recursively)

    Returns:
        Sorted list of file paths

    Raises:
        FileNotFoundError: If the path does not exist
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Corpus path does not exist: {path}")
    if path.is_file():
        return [path]
    return sorted(p for p in path.rglob("*") if is_text_file(p))


def read_jsonl(path: str | Path) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """
    Stream JSON objects from a JSONL file.

    Blank lines are skipped. Each yielded item carries its 1-based line number
    so callers can report precise errors.

    Raises:
        CorpusError: If a line is not a JSON object
    """
    with open(path, "r", encoding="utf-8") as f:
        for line_num, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"malformed JSON ({e.msg})", line=line_num, path=str(path)) from e
            if not isinstance(record, dict):
                raise CorpusError("expected a JSON object", line=line_num, path=str(path))
            yield line_num, record


def write_jsonl(path: str | Path, records: Iterable[Dict[str, Any]]) -> int:
    """
    Write records as UTF-8 JSONL with LF line endings.

    Returns:
        Number of records written
    """
    path = ensure_parent(path)
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=False))
            f.write("\n")
            count += 1
    return count


def stable_seed(*parts: Any) -> int:
    """
    Derive a 64-bit seed from arbitrary parts, stable across processes and runs.

    Python's built-in hash() is salted per process, so a keyed digest is used
    instead.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
