"""Dependency parses behind one contract.

Everything downstream works on :class:`ParsedSentence`; spaCy is only touched
by :class:`SpacyParser`. Parses can be recorded to JSON lines and replayed with
:class:`FixtureParser`, which keeps the pattern engine usable without any NLP
model installed.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Optional, Protocol, Union

log = logging.getLogger(__name__)

NOUN_POS = ("NOUN", "PROPN")
# dependency labels whose noun heads start a noun chunk (spaCy English rule)
_NP_DEPS = {"nsubj", "dobj", "nsubjpass", "pcomp", "pobj", "dative", "appos", "attr", "ROOT"}


class ParseError(RuntimeError):
    def __init__(self, sentence: str, reason: str):
        super().__init__(f"cannot parse {sentence!r}: {reason}")
        self.sentence = sentence


@dataclass(frozen=True)
class Token:
    text: str
    lemma: str
    pos: str
    dep: str
    head: int
    tag: str = ""

    @property
    def is_noun(self) -> bool:
        return self.pos in NOUN_POS

    @property
    def is_plural(self) -> bool:
        if self.tag:
            return self.tag in ("NNS", "NNPS")
        return self.is_noun and self.lemma.lower() != self.text.lower()


@dataclass(frozen=True)
class ParsedSentence:
    tokens: tuple[Token, ...]
    source_text: str

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        n = len(self.tokens)
        if n == 0:
            raise ValueError("a parsed sentence needs at least one token")
        roots = [i for i, t in enumerate(self.tokens) if t.head == i]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        for i, t in enumerate(self.tokens):
            if not 0 <= t.head < n:
                raise ValueError(f"token {i} has head {t.head} outside the sentence")
        # every token must reach the root without cycles
        for i in range(n):
            seen = set()
            j = i
            while self.tokens[j].head != j:
                if j in seen:
                    raise ValueError("dependency arcs contain a cycle")
                seen.add(j)
                j = self.tokens[j].head

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i: int) -> Token:
        return self.tokens[i]

    @property
    def root(self) -> int:
        return next(i for i, t in enumerate(self.tokens) if t.head == i)

    @cached_property
    def _children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.tokens]
        for i, t in enumerate(self.tokens):
            if t.head != i:
                kids[t.head].append(i)
        return tuple(tuple(k) for k in kids)

    def children(self, i: int) -> tuple[int, ...]:
        return self._children[i]

    def subtree(self, i: int) -> list[int]:
        out = [i]
        stack = list(self.children(i))
        while stack:
            j = stack.pop()
            out.append(j)
            stack.extend(self.children(j))
        return sorted(out)

    def ancestors(self, i: int) -> Iterator[int]:
        while self.tokens[i].head != i:
            i = self.tokens[i].head
            yield i

    def left_edge(self, i: int) -> int:
        return self.subtree(i)[0]

    def to_json(self) -> dict:
        return {
            "text": self.source_text,
            "tokens": [
                {"text": t.text, "lemma": t.lemma, "pos": t.pos, "tag": t.tag, "dep": t.dep, "head": t.head}
                for t in self.tokens
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ParsedSentence":
        tokens = tuple(
            Token(t["text"], t["lemma"], t["pos"], t["dep"], int(t["head"]), t.get("tag", ""))
            for t in data["tokens"]
        )
        return cls(tokens, data["text"])


@dataclass(frozen=True)
class NounPhrase:
    token_indices: tuple[int, ...]
    head_index: int

    def words(self, parsed: ParsedSentence) -> list[str]:
        return [parsed[i].text for i in self.token_indices]

    def text(self, parsed: ParsedSentence) -> str:
        return " ".join(self.words(parsed))


def noun_phrases(parsed: ParsedSentence) -> list[NounPhrase]:
    """Base noun phrases, following spaCy's English noun-chunk rule.

    A phrase runs from the left edge of a noun's subtree to the noun itself,
    for nouns in argument positions (and their conjuncts). Pronoun-headed
    chunks are dropped.
    """
    out = []
    prev_end = -1
    for i, tok in enumerate(parsed.tokens):
        if tok.pos not in NOUN_POS:
            continue
        left = parsed.left_edge(i)
        if left <= prev_end:
            continue
        if tok.dep in _NP_DEPS:
            ok = True
        elif tok.dep == "conj":
            head = tok.head
            while parsed[head].dep == "conj" and parsed[head].head < head:
                head = parsed[head].head
            ok = parsed[head].dep in _NP_DEPS
        else:
            ok = False
        if ok:
            prev_end = i
            out.append(NounPhrase(tuple(range(left, i + 1)), i))
    return out


def phrase_of(parsed: ParsedSentence, head: int) -> list[int]:
    """Token indices of the noun phrase headed by ``head``.

    Uses the detected noun phrase when ``head`` heads one, otherwise the
    head's compound/adjectival/determiner dependents to its left.
    """
    for np in noun_phrases(parsed):
        if np.head_index == head:
            return list(np.token_indices)
    left = [c for c in parsed.children(head) if c < head and parsed[c].dep in ("compound", "amod", "det", "nummod", "poss")]
    idx = set([head])
    for c in left:
        idx.update(parsed.subtree(c))
    return sorted(idx)


# Backends -------------------------------------------------------------------

class Parser(Protocol):
    def parse(self, sentence: str) -> ParsedSentence: ...


def from_spacy(doc, text: Optional[str] = None) -> ParsedSentence:
    """Convert a spaCy ``Doc`` (or span) into a single-rooted parse.

    When the backend splits the text into several sentences, later roots are
    attached to the first one with the label ``dep``.
    """
    base = doc[0].i if len(doc) else 0
    toks = list(doc)
    first_root = None
    out = []
    for t in toks:
        head = t.head.i - base
        dep = t.dep_
        if t.head.i == t.i:
            if first_root is None:
                first_root = t.i - base
                dep = "ROOT"
            else:
                head, dep = first_root, "dep"
        lemma = t.lemma_
        if lemma == "-PRON-":
            lemma = t.text.lower()
        out.append(Token(t.text, lemma, t.pos_, dep, head, t.tag_))
    return ParsedSentence(tuple(out), text if text is not None else doc.text)


class SpacyParser:
    """Live parser backed by a spaCy English pipeline."""

    def __init__(self, nlp=None, model: str = "en_core_web_sm"):
        if nlp is None:
            nlp = load_spacy(model)
        self.nlp = nlp

    @property
    def version(self) -> str:
        import spacy

        meta = getattr(self.nlp, "meta", {}) or {}
        return f"spacy={spacy.__version__} model={meta.get('name', '?')}-{meta.get('version', '?')}"

    def parse(self, sentence: str) -> ParsedSentence:
        if not sentence.strip():
            raise ParseError(sentence, "empty sentence")
        try:
            return from_spacy(self.nlp(sentence), sentence)
        except Exception as exc:
            raise ParseError(sentence, str(exc)) from exc


def load_spacy(model: str = "en_core_web_sm"):
    import spacy

    try:
        return spacy.load(model)
    except OSError:
        # model shipped as an importable package without a registered link
        import importlib

        return importlib.import_module(model).load()


class FixtureParser:
    """Replays recorded parses; the sentence text is the lookup key."""

    def __init__(self, records: Iterable[ParsedSentence] = ()):
        self.table: dict[str, ParsedSentence] = {}
        for p in records:
            self.add(p)

    def add(self, parsed: ParsedSentence) -> None:
        self.table[parsed.source_text.strip()] = parsed

    def __contains__(self, sentence: str) -> bool:
        return sentence.strip() in self.table

    def __len__(self) -> int:
        return len(self.table)

    def parse(self, sentence: str) -> ParsedSentence:
        if not sentence.strip():
            raise ParseError(sentence, "empty sentence")
        try:
            return self.table[sentence.strip()]
        except KeyError:
            raise ParseError(sentence, "no recorded parse for this sentence") from None

    @classmethod
    def load(cls, *paths: Union[str, Path]) -> "FixtureParser":
        fp = cls()
        for path in paths:
            for p in read_parses(path):
                fp.add(p)
        return fp

    @classmethod
    def bundled(cls) -> "FixtureParser":
        ref = resources.files("nl2uml") / "data" / "parses.jsonl"
        with resources.as_file(ref) as path:
            return cls.load(path)


class ChainParser:
    """Try parsers in order; the first that succeeds wins."""

    def __init__(self, *parsers: Parser):
        self.parsers = parsers

    def parse(self, sentence: str) -> ParsedSentence:
        last: Optional[ParseError] = None
        for p in self.parsers:
            try:
                return p.parse(sentence)
            except ParseError as exc:
                last = exc
        raise last or ParseError(sentence, "no parser configured")


def read_parses(path: Union[str, Path]) -> list[ParsedSentence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(ParsedSentence.from_json(json.loads(line)))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: bad parse record ({exc})") from exc
    return out


def write_parses(parses: Iterable[ParsedSentence], path: Union[str, Path]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for p in parses:
            fh.write(json.dumps(p.to_json(), ensure_ascii=False) + "\n")
            n += 1
    return n


def default_parser(extra_fixtures: Iterable[Union[str, Path]] = ()) -> Parser:
    """Recorded fixtures first, then a live spaCy model if one can be loaded."""
    fixtures = FixtureParser.bundled()
    for path in extra_fixtures:
        for p in read_parses(path):
            fixtures.add(p)
    try:
        live = SpacyParser()
    except Exception as exc:
        log.info("spaCy unavailable (%s); only recorded parses can be used", exc)
        return fixtures
    return ChainParser(fixtures, live)
