"""Whitespace tokenizer shared by vega-zero queries and augmented source text.

Joining the returned tokens with single spaces yields the normalized form of
the input. Identifiers are lowercased; quoted literals keep their exact bytes;
section markers and slot tokens keep their canonical casing.
"""

from __future__ import annotations

import re

from ..errors import LexError
from .ast import COMPARISON_OPS

# Section markers and template slot tokens, canonical spelling.
MARKERS = (
    "<N>", "</N>", "<C>", "</C>", "<D>", "</D>",
    "<COL>", "</COL>", "<VAL>", "</VAL>",
    "[T]", "[X]", "[Y]", "[Z]", "[F]", "[G]", "[B]", "[S]", "[K]",
    "[AggFunction]",
)
_MARKER_CANON = {m.lower(): m for m in MARKERS}

OPERATOR_TOKENS = frozenset(COMPARISON_OPS)

# NL punctuation split off as standalone tokens when it clings to a word edge.
_EDGE_PUNCT = ",.?!;:"
_DECIMAL = re.compile(r"\d+\.\d+")


def _finish_word(word: str) -> list[str]:
    """Lowercase/canonicalize one whitespace-delimited chunk, peeling edge punctuation."""
    if word in OPERATOR_TOKENS:
        return [word]
    lead: list[str] = []
    trail: list[str] = []
    while len(word) > 1 and word[0] in _EDGE_PUNCT:
        lead.append(word[0])
        word = word[1:]
    while len(word) > 1 and word[-1] in _EDGE_PUNCT and not _DECIMAL.fullmatch(word):
        trail.append(word[-1])
        word = word[:-1]
    if word in OPERATOR_TOKENS:
        core = word
    else:
        core = _MARKER_CANON.get(word.lower(), word.lower())
    return lead + [core] + trail[::-1]


def tokenize(text: str) -> list[str]:
    """Split raw text into tokens.

    Chunks opening with a quote character become single quoted tokens (spaces
    allowed inside); an unterminated quote is a LexError carrying the byte
    offset of the opening quote. Mid-word apostrophes are left alone so
    natural-language contractions survive.
    """
    tokens: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "\"'":
            end = text.find(ch, i + 1)
            if end < 0:
                raise LexError("unterminated quote", offset=i)
            tokens.append(text[i : end + 1])
            i = end + 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        tokens.extend(_finish_word(text[i:j]))
        i = j
    return tokens


def normalize(text: str) -> str:
    """Single-space normalized form of the input."""
    return " ".join(tokenize(text))


def is_quoted(token: str) -> bool:
    return len(token) >= 2 and token[0] in "\"'" and token[-1] == token[0]


def is_marker(token: str) -> bool:
    return token in _MARKER_CANON.values()
