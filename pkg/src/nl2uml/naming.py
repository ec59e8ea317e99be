"""Identifier normalization: singular lemmas joined in camelCase."""
from __future__ import annotations

import enum
import functools
import re
from typing import Iterable, Union

import inflect


class NameKind(enum.Enum):
    CLASS_NAME = "class"
    ATTRIBUTE_NAME = "attribute"
    RELATIONSHIP_NAME = "relationship"


# inflect strips the final "s" of many singular words (address -> addres),
# so words with these endings are never singularized.
_SINGULAR_SUFFIXES = ("ss", "us", "is", "ics", "ous", "sis", "xis")
_INVARIANT = {
    "news", "data", "media", "series", "species", "status", "canvas", "alias",
    "atlas", "bias", "gas", "has", "was", "is", "its", "this", "thus", "windows",
    "chassis", "corps", "means", "metadata", "criteria", "always", "less",
}

_engine = inflect.engine()
_WORD_SPLIT = re.compile(r"[^0-9A-Za-z]+")
# camelCase pieces: "MSProject" -> MS, Project; "boldTitle" -> bold, Title
_CAMEL = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+\d*|[A-Z]+\d*|\d+")

Phrase = Union[str, Iterable[str]]


@functools.lru_cache(maxsize=4096)
def singularize(word: str) -> str:
    """Return the singular form of a plural noun, or ``word`` unchanged.

    Iterated to a fixpoint so that ``singularize`` is idempotent.
    """
    for _ in range(4):
        low = word.lower()
        if len(word) < 3 or low in _INVARIANT or low.endswith(_SINGULAR_SUFFIXES):
            return word
        if not word[-1:].isalpha() or word.isupper():
            return word
        result = _engine.singular_noun(word)
        if not result or result == word:
            return word
        word = result
    return word


def split_words(phrase: Phrase) -> list[str]:
    if isinstance(phrase, str):
        phrase = [phrase]
    words: list[str] = []
    for chunk in phrase:
        for w in _WORD_SPLIT.split(chunk):
            words.extend(_CAMEL.findall(w))
    return words


def _lower_head(word: str) -> str:
    # "URL" -> "url", "MSProject" -> "msProject", "Title" -> "title"
    if word.isupper():
        return word.lower()
    run = 0
    while run < len(word) and word[run].isupper():
        run += 1
    if run <= 1:
        return word[:1].lower() + word[1:]
    return word[: run - 1].lower() + word[run - 1:]


def normalize_identifier(phrase: Phrase, kind: NameKind, lemmatize: bool = True) -> str:
    """Turn a word sequence into a UML identifier.

    Each word is singularized (unless ``lemmatize`` is false, for callers that
    already hold lemmas), words are joined in camelCase, and the first letter is
    upper-cased for class names and lower-cased otherwise. Non-alphanumeric
    characters act as word separators and never survive.

    >>> normalize_identifier("bold titles", NameKind.ATTRIBUTE_NAME)
    'boldTitle'
    """
    words = split_words(phrase)
    if not any(any(ch.isalpha() for ch in w) for w in words):
        raise ValueError(f"cannot build an identifier from {phrase!r}: no alphabetic word")
    if lemmatize:
        words = [singularize(w) for w in words]
    head, rest = words[0], words[1:]
    if kind is NameKind.CLASS_NAME:
        head = head[:1].upper() + head[1:]
    else:
        head = _lower_head(head)
    return head + "".join(w[:1].upper() + w[1:] for w in rest)


@functools.lru_cache(maxsize=16384)
def name_key(name: str, kind: NameKind) -> str:
    """Case-insensitive comparison key for an identifier."""
    return normalize_identifier(name, kind).casefold()
