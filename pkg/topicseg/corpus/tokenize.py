"""Word tokenization and sentence splitting."""

import re
import unicodedata
from typing import List

# Sentence-final punctuation followed by whitespace ends a sentence
_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+")


def _is_punctuation(ch: str) -> bool:
    # Unicode punctuation (P*) and symbols (S*) are split off one character at a time
    return unicodedata.category(ch)[0] in ("P", "S")


def word_tokenize(text: str) -> List[str]:
    """
    Lowercase, split on Unicode whitespace, and split off every punctuation character.

    Examples:
        >>> word_tokenize("Hello, world!")
        ['hello', ',', 'world', '!']
        >>> word_tokenize("don't stop")
        ['don', "'", 't', 'stop']
    """
    tokens: List[str] = []
    for chunk in text.lower().split():
        word = []
        for ch in chunk:
            if _is_punctuation(ch):
                if word:
                    tokens.append("".join(word))
                    word = []
                tokens.append(ch)
            else:
                word.append(ch)
        if word:
            tokens.append("".join(word))
    return tokens


def split_sentences(text: str) -> List[str]:
    """
    Split a chat turn into sentences.

    Splits on '.', '!' or '?' followed by whitespace. Text without such a
    break (common in chat) is a single sentence.
    """
    text = text.strip()
    if not text:
        return []
    return [part for part in _SENTENCE_BREAK.split(text) if part.strip()]
