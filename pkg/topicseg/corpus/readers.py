"""Corpus file formats: Wiki-style sectioned text, chat JSONL, labeled-document JSONL."""

import json
from pathlib import Path
from typing import IO, Iterable, List, Optional

from ..errors import CorpusError
from ..utils import iter_text_files, read_jsonl, write_jsonl
from .types import Conversation, SegDocument, Sentence, Turn, document_from_segments

# Lines starting with this prefix open a new section in Wiki-style files
WIKI_DELIMITER = "========"


def parse_wiki(stream: IO[str]) -> List[List[Sentence]]:
    """
    Parse one Wiki-style file: one sentence per line, delimiter lines start sections.

    Sentences before the first delimiter form their own section. Empty
    sections (e.g. two consecutive delimiters) are dropped.

    Args:
        stream: Text stream positioned at the start of the file

    Returns:
        Ordered sections, each a nonempty list of sentences
    """
    segments: List[List[Sentence]] = []
    current: List[Sentence] = []
    for line in stream:
        line = line.strip()
        if line.startswith(WIKI_DELIMITER):
            if current:
                segments.append(current)
            current = []
            continue
        if not line:
            continue
        sentence = Sentence.from_text(line)
        if sentence.word_tokens:
            current.append(sentence)
    if current:
        segments.append(current)
    return segments


def wiki_document(segments: List[List[Sentence]], doc_id: str) -> SegDocument:
    """Turn parsed Wiki sections into one labeled document."""
    if sum(len(s) for s in segments) < 2:
        raise CorpusError(f"document {doc_id!r} needs at least 2 sentences")
    source_ids = [f"{doc_id}#{i}" for i in range(len(segments))]
    return document_from_segments(doc_id, segments, source_ids)


def read_wiki_corpus(path: str | Path) -> List[SegDocument]:
    """
    Read a Wiki-style corpus: a single file or a directory tree of files.

    Each file becomes one document (doc id = path relative to the corpus root).
    Files with fewer than 2 sentences are skipped.
    """
    root = Path(path)
    documents = []
    for file_path in iter_text_files(root):
        with open(file_path, "r", encoding="utf-8") as f:
            segments = parse_wiki(f)
        if sum(len(s) for s in segments) < 2:
            continue
        doc_id = file_path.name if root.is_file() else file_path.relative_to(root).as_posix()
        documents.append(wiki_document(segments, doc_id))
    return documents


def _require(record: dict, name: str, kind: type, line: Optional[int]):
    if name not in record:
        raise CorpusError(f"missing field '{name}'", line=line)
    value = record[name]
    if not isinstance(value, kind):
        raise CorpusError(f"field '{name}' must be a {kind.__name__}", line=line)
    return value


def parse_chat_jsonl(line: str, line_num: Optional[int] = None) -> Conversation:
    """
    Parse one chat JSONL line: {"id": str, "turns": [{"speaker": str, "text": str}, ...]}.

    Args:
        line: The raw line
        line_num: 1-based line number used in error messages

    Returns:
        The parsed Conversation

    Raises:
        CorpusError: Malformed JSON, a missing or mistyped field, or empty turns
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusError(f"malformed JSON ({e.msg})", line=line_num) from e
    if not isinstance(record, dict):
        raise CorpusError("expected a JSON object", line=line_num)
    conv_id = _require(record, "id", str, line_num)
    raw_turns = _require(record, "turns", list, line_num)
    if not raw_turns:
        raise CorpusError(f"conversation {conv_id!r} has no turns", line=line_num)
    turns = []
    for raw in raw_turns:
        if not isinstance(raw, dict):
            raise CorpusError("each turn must be a JSON object", line=line_num)
        speaker = _require(raw, "speaker", str, line_num)
        text = _require(raw, "text", str, line_num)
        if not text.strip():
            raise CorpusError(f"conversation {conv_id!r} has an empty turn", line=line_num)
        turns.append(Turn(speaker=speaker, text=text))
    return Conversation(id=conv_id, turns=turns)


def read_chat_corpus(path: str | Path) -> List[Conversation]:
    """Read a chat JSONL corpus, one conversation per nonblank line."""
    conversations = []
    with open(path, "r", encoding="utf-8") as f:
        for line_num, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                conversations.append(parse_chat_jsonl(line, line_num))
            except CorpusError as e:
                raise CorpusError(e.message, line=e.line, path=str(path)) from e
    return conversations


def write_chat_corpus(conversations: Iterable[Conversation], path: str | Path) -> int:
    return write_jsonl(path, (c.to_dict() for c in conversations))


def read_documents(path: str | Path) -> List[SegDocument]:
    """
    Read labeled-document JSONL: {"doc_id": str, "sentences": [str...], "labels": [0|1...]}.

    Raises:
        CorpusError: On missing fields, label/sentence mismatch, or a final label other than 1
    """
    documents = []
    for line_num, record in read_jsonl(path):
        try:
            doc_id = _require(record, "doc_id", str, line_num)
            texts = _require(record, "sentences", list, line_num)
            labels = _require(record, "labels", list, line_num)
            if any(type(label) is not int for label in labels):
                raise CorpusError(f"document {doc_id!r}: labels must be the integers 0 or 1",
                                  line=line_num)
            sentences = []
            for text in texts:
                if not isinstance(text, str):
                    raise CorpusError("sentences must be strings", line=line_num)
                sentence = Sentence.from_text(text)
                if not sentence.word_tokens:
                    raise CorpusError(f"document {doc_id!r} has an empty sentence", line=line_num)
                sentences.append(sentence)
            documents.append(SegDocument(doc_id=doc_id, sentences=sentences, labels=labels))
        except CorpusError as e:
            raise CorpusError(e.message, line=e.line or line_num, path=str(path)) from e
    return documents


def write_documents(documents: Iterable[SegDocument], path: str | Path) -> int:
    return write_jsonl(path, (d.to_dict() for d in documents))
