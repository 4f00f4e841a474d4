"""Tokenization shared by corpus word counts and sentiment ratios."""

from __future__ import annotations

import re

# A token is a maximal run of alphabetic characters; digits and
# punctuation act as separators.  Tokens are case-folded so that
# dictionary lookups are case-insensitive.
_WORD_RE = re.compile(r"[A-Za-z]+")


def tokenize(text: str) -> list[str]:
    return [m.group(0).casefold() for m in _WORD_RE.finditer(text)]


def count_words(text: str) -> int:
    return sum(1 for _ in _WORD_RE.finditer(text))
