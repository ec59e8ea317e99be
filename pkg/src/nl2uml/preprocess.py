"""Pronoun substitution and sentence splitting."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

from .naming import singularize

log = logging.getLogger(__name__)

ABBREVIATIONS = frozenset({
    "i.e.", "e.g.", "etc.", "vs.", "cf.", "al.", "approx.", "resp.", "incl.",
    "mr.", "mrs.", "ms.", "dr.", "prof.", "fig.", "no.", "st.", "jr.", "sr.",
})

_BOUNDARY = re.compile(r"[.!?]+(?=\s|$)")


@dataclass(frozen=True)
class SentenceSpan:
    start: int
    end: int
    text: str


def sentence_spans(text: str) -> list[SentenceSpan]:
    """Sentence spans over ``text``; only inter-sentence whitespace is left out."""
    spans = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        end = m.end()
        word_start = text.rfind(" ", start, m.start()) + 1
        word = text[max(word_start, start):end].lstrip("\"'(").lower()
        if word in ABBREVIATIONS:
            continue
        _append(spans, text, start, end)
        start = end
    _append(spans, text, start, len(text))
    return spans


def _append(spans: list[SentenceSpan], text: str, start: int, end: int) -> None:
    chunk = text[start:end]
    stripped = chunk.strip()
    if stripped:
        lead = len(chunk) - len(chunk.lstrip())
        spans.append(SentenceSpan(start + lead, start + lead + len(stripped), stripped))


class SentenceSplitter(Protocol):
    def __call__(self, text: str) -> list[str]: ...


def rule_split(text: str) -> list[str]:
    return [s.text for s in sentence_spans(text)]


class SpacySentenceSplitter:
    """Sentence boundaries from a loaded spaCy pipeline."""

    def __init__(self, nlp):
        self.nlp = nlp

    def __call__(self, text: str) -> list[str]:
        return [s.text.strip() for s in self.nlp(text).sents if s.text.strip()]


def split_sentences(text: str, splitter: Optional[SentenceSplitter] = None) -> list[str]:
    if not text.strip():
        raise ValueError("specification text is empty")
    return (splitter or rule_split)(text)


# Pronouns ---------------------------------------------------------------------

SINGULAR = {"it": "either", "he": "subj", "she": "subj", "him": "obj", "its": "poss", "his": "poss"}
PLURAL = {"they": "subj", "them": "obj", "their": "poss"}
_PRONOUN = re.compile(r"\b(" + "|".join(sorted(SINGULAR.keys() | PLURAL.keys())) + r")\b", re.IGNORECASE)

_CLAUSE_OPENERS = {"and", "but", "so", "because", "while", "since", "where", "when", "if", ",", ";"}
_DETERMINERS = {"a", "an", "the", "each", "every", "this", "that", "these", "those", "some", "any", "all"}
_EXISTENTIAL = re.compile(r"^\s*there\s+(?:is|are|exists?|was|were)\s+", re.IGNORECASE)
# words that end a leading subject noun phrase
_NP_STOP = {
    "is", "are", "was", "were", "be", "been", "has", "have", "had", "may", "can", "must",
    "should", "will", "would", "shall", "might", "could", "does", "do", "did", "of", "in",
    "on", "to", "with", "by", "for", "from", "at", "and", "or", "which", "that", "who",
    "not", "also", "always", "only", "never", "exactly",
}
_VERB_STEMS = {
    "contain", "include", "consist", "belong", "refer", "represent", "map", "own", "use",
    "exist", "describe", "define", "hold", "store", "keep", "reference", "compose", "require",
    "need", "provide", "know", "identify", "associate", "relate", "extend", "specify", "link",
    "connect", "comprise", "possess", "manage", "create", "produce", "send", "receive",
}


def _ends_phrase(word: str, seen_content: bool) -> bool:
    low = word.lower()
    if low in _NP_STOP:
        return True
    if not seen_content:
        return False
    if low in _VERB_STEMS or low.rstrip("s") in _VERB_STEMS or low[:-2] in _VERB_STEMS:
        return True
    return word.islower() and (low.endswith("ed") or low.endswith("ing"))


def subject_phrase(sentence: str) -> Optional[str]:
    """Leading noun phrase of a sentence, with its determiner.

    For existential sentences ("There is a place.") the phrase after the verb
    is taken.
    """
    m = _EXISTENTIAL.match(sentence)
    body = sentence[m.end():] if m else sentence
    words = re.findall(r"[A-Za-z0-9'-]+|[^\sA-Za-z0-9]", body)
    phrase: list[str] = []
    for w in words:
        seen_content = any(p.lower() not in _DETERMINERS for p in phrase)
        if not re.match(r"[A-Za-z0-9]", w) or _ends_phrase(w, seen_content):
            break
        if w.lower() in SINGULAR or w.lower() in PLURAL:
            return None
        phrase.append(w)
    content = [w for w in phrase if w.lower() not in _DETERMINERS]
    if not content:
        return None
    return " ".join(phrase)


def _is_plural(phrase: str) -> bool:
    head = phrase.split()[-1]
    return singularize(head) != head


class CoreferenceResolver(Protocol):
    def __call__(self, text: str) -> str: ...


def rule_resolve(text: str) -> str:
    """Replace third-person pronouns with the most recent matching subject phrase.

    Candidates are the subjects of earlier sentences. A nominative pronoun that
    is not sentence-initial may also refer to its own sentence's subject
    (possessives too), since "A point refers to its mesh" is about the point.
    Pronouns without a number-compatible candidate are left as they are.
    """
    spans = sentence_spans(text)
    out = []
    last = 0
    subjects: list[str] = []
    for span in spans:
        out.append(text[last:span.start])
        own = subject_phrase(span.text)
        pieces = []
        pos = 0
        for m in _PRONOUN.finditer(span.text):
            word = m.group(1)
            low = word.lower()
            plural = low in PLURAL
            role = PLURAL.get(low) or SINGULAR[low]
            if role == "either":
                before = re.findall(r"[A-Za-z]+|[,;]", span.text[:m.start()])
                role = "subj" if not before or before[-1].lower() in _CLAUSE_OPENERS else "obj"
            pool = list(subjects)
            if role in ("subj", "poss") and m.start() > 0 and own:
                pool.append(own)
            referent = next((s for s in reversed(pool) if _is_plural(s) == plural), None)
            if referent is None:
                continue
            replacement = _decapitalize(referent)
            if role == "poss":
                replacement += "'s"
            if m.start() == 0:
                replacement = replacement[:1].upper() + replacement[1:]
            pieces.append(span.text[pos:m.start()])
            pieces.append(replacement)
            pos = m.end()
        pieces.append(span.text[pos:])
        rewritten = "".join(pieces)
        out.append(rewritten)
        resolved_subject = subject_phrase(rewritten)
        if resolved_subject:
            subjects.append(resolved_subject)
        last = span.end
    out.append(text[last:])
    return "".join(out)


def _decapitalize(phrase: str) -> str:
    first, _, rest = phrase.partition(" ")
    if first.lower() in _DETERMINERS:
        return first.lower() + (" " + rest if rest else "")
    return phrase


class CorefereeResolver:
    """Pronoun substitution through spaCy + coreferee.

    Falls back to :func:`rule_resolve` with a warning when the backend cannot
    be loaded or fails on a document.
    """

    def __init__(self, model: str = "en_core_web_sm", loader: Optional[Callable] = None):
        self.nlp = None
        try:
            if loader is not None:
                self.nlp = loader()
            else:
                import spacy  # noqa: F401
                import coreferee  # noqa: F401

                self.nlp = spacy.load(model)
                self.nlp.add_pipe("coreferee")
        except Exception as exc:  # backend is optional
            log.warning("coreference backend unavailable (%s); using rule-based resolver", exc)

    def __call__(self, text: str) -> str:
        if self.nlp is None:
            return rule_resolve(text)
        try:
            doc = self.nlp(text)
            out = []
            for tok in doc:
                referents = doc._.coref_chains.resolve(tok) if tok.pos_ == "PRON" else None
                if referents:
                    phrase = " ".join(_with_determiner(r) for r in referents)
                    if tok.i == tok.sent.start:
                        phrase = phrase[:1].upper() + phrase[1:]
                    out.append(phrase + tok.whitespace_)
                else:
                    out.append(tok.text_with_ws)
            return "".join(out)
        except Exception as exc:
            log.warning("coreference backend failed (%s); using rule-based resolver", exc)
            return rule_resolve(text)


def _with_determiner(token) -> str:
    dets = [c.text.lower() for c in token.children if c.dep_ == "det"]
    return " ".join(dets + [token.text])


def resolve_pronouns(text: str, resolver: Optional[CoreferenceResolver] = None) -> str:
    if not text.strip():
        raise ValueError("specification text is empty")
    if resolver is None:
        return rule_resolve(text)
    try:
        return resolver(text)
    except Exception as exc:
        log.warning("pronoun resolution failed (%s); text left unchanged", exc)
        return text
