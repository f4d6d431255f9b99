"""Core corpus data types: sentences, conversations, labeled documents, splits."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from ..errors import CorpusError
from .tokenize import split_sentences, word_tokenize


@dataclass(frozen=True)
class Sentence:
    """Raw sentence text plus its lowercased word/punctuation tokens."""

    text: str
    word_tokens: tuple

    @classmethod
    def from_text(cls, text: str) -> "Sentence":
        return cls(text=text, word_tokens=tuple(word_tokenize(text)))


@dataclass(frozen=True)
class Turn:
    speaker: str
    text: str


@dataclass
class Conversation:
    """Ordered speaker turns from a chat corpus."""

    id: str
    turns: List[Turn]

    def __post_init__(self):
        if not self.turns:
            raise CorpusError(f"conversation {self.id!r} has no turns")
        for i, turn in enumerate(self.turns):
            if not turn.text.strip():
                raise CorpusError(f"conversation {self.id!r} turn {i} has empty text")

    def sentences(self) -> List[Sentence]:
        """All sentences of all turns in order; sentences without tokens are dropped."""
        result = []
        for turn in self.turns:
            for text in split_sentences(turn.text):
                sentence = Sentence.from_text(text)
                if sentence.word_tokens:
                    result.append(sentence)
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "turns": [{"speaker": t.speaker, "text": t.text} for t in self.turns],
        }


@dataclass
class SegDocument:
    """
    A sentence sequence with end-of-segment labels.

    labels[i] == 1 marks sentence i as the last sentence of a segment; the
    final label is always 1.
    """

    doc_id: str
    sentences: List[Sentence]
    labels: List[int]
    source_ids: List[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.labels) != len(self.sentences):
            raise CorpusError(
                f"document {self.doc_id!r}: {len(self.sentences)} sentences but "
                f"{len(self.labels)} labels"
            )
        if not self.sentences:
            raise CorpusError(f"document {self.doc_id!r} has no sentences")
        if any(label not in (0, 1) for label in self.labels):
            raise CorpusError(f"document {self.doc_id!r}: labels must be 0 or 1")
        if self.labels[-1] != 1:
            raise CorpusError(f"document {self.doc_id!r}: final label must be 1")
        if self.source_ids and len(self.source_ids) != self.num_segments:
            raise CorpusError(
                f"document {self.doc_id!r}: {len(self.source_ids)} source ids for "
                f"{self.num_segments} segments"
            )

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def num_segments(self) -> int:
        return sum(self.labels)

    @property
    def gap_labels(self) -> List[int]:
        """Labels of the n-1 candidate breaks (gap g follows sentence g)."""
        return self.labels[:-1]

    def segment_lengths(self) -> List[int]:
        lengths, current = [], 0
        for label in self.labels:
            current += 1
            if label == 1:
                lengths.append(current)
                current = 0
        return lengths

    def to_dict(self) -> Dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "sentences": [s.text for s in self.sentences],
            "labels": list(self.labels),
        }


def document_from_segments(doc_id: str, segments: List[List[Sentence]],
                           source_ids: Optional[List[str]] = None) -> SegDocument:
    """Concatenate segments into a document, labeling each segment's last sentence."""
    sentences: List[Sentence] = []
    labels: List[int] = []
    for segment in segments:
        if not segment:
            raise CorpusError(f"document {doc_id!r} has an empty segment")
        sentences.extend(segment)
        labels.extend([0] * (len(segment) - 1) + [1])
    return SegDocument(doc_id=doc_id, sentences=sentences, labels=labels,
                       source_ids=list(source_ids or []))


@dataclass
class CorpusSplits:
    """Disjoint train / dev (fine-tuning) / test document lists."""

    train: List[SegDocument]
    dev: List[SegDocument]
    test: List[SegDocument]

    def sizes(self) -> tuple:
        return len(self.train), len(self.dev), len(self.test)


@dataclass(frozen=True)
class DatasetProfile:
    """Population statistics of a document corpus."""

    documents: int
    segments: int
    sentences: int
    sentence_length_mean: float
    sentence_length_std: float
    segment_length_mean: float
    segment_length_std: float
    boundary_rate: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)
