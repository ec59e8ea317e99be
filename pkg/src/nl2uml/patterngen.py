"""Grammar patterns over dependency parses, and the fragment templates they feed.

Pattern constraints live in ``data/patterns.json`` (node lists in the
DependencyMatcher vocabulary plus a priority); this module turns a chosen
match into a class or relationship fragment.
"""
from __future__ import annotations

import enum
import functools
import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from . import depmatch
from .naming import NameKind, normalize_identifier, singularize
from .parsing import ParsedSentence, ParseError, Parser, Token, noun_phrases, phrase_of
from .uml import UNBOUNDED, Fragment, Kind, Multiplicity, UmlAttribute, UmlClass, UmlRelationship

log = logging.getLogger(__name__)


class PatternId(enum.Enum):
    CP1_COPULA = "CP1_COPULA"
    CP2_THERE_IS = "CP2_THERE_IS"
    CP3_COMPOUND_NOUN = "CP3_COMPOUND_NOUN"
    CP4_COMPOUND_EXPLICIT = "CP4_COMPOUND_EXPLICIT"
    CP5_TO_HAVE = "CP5_TO_HAVE"
    CP6_CLASS_NAMED = "CP6_CLASS_NAMED"
    CP7_OF_PACKAGE = "CP7_OF_PACKAGE"
    CP8_AND_CLAUSES = "CP8_AND_CLAUSES"
    RP1_TO_HAVE = "RP1_TO_HAVE"
    RP2_PASSIVE = "RP2_PASSIVE"
    RP3_COMPOSED = "RP3_COMPOSED"
    RP4_ACTIVE = "RP4_ACTIVE"
    RP5_NOUN_WITH = "RP5_NOUN_WITH"
    RP6_COPULA = "RP6_COPULA"

    @property
    def family(self) -> Kind:
        return Kind.CLASS if self.value.startswith("CP") else Kind.RELATIONSHIP


class GenerationError(ValueError):
    def __init__(self, sentence: str, reason: str):
        super().__init__(f"{reason}: {sentence!r}")
        self.sentence = sentence
        self.reason = reason


# Pattern table -----------------------------------------------------------------

@dataclass(frozen=True)
class PatternSpec:
    id: PatternId
    priority: int
    template: str
    alternatives: tuple
    example: str = ""


@dataclass(frozen=True)
class PatternTable:
    patterns: tuple[PatternSpec, ...]
    have_verbs: frozenset
    quantity_nouns: frozenset
    type_names: dict  # casefolded -> canonical spelling
    hedges: frozenset

    def family(self, label: Kind) -> list[PatternSpec]:
        return [p for p in self.patterns if p.id.family is label]


def load_patterns(path: Union[str, Path, None] = None) -> PatternTable:
    if path is None:
        return _bundled_patterns()
    with open(path, encoding="utf-8") as fh:
        return _table_from_json(json.load(fh), str(path))


@functools.lru_cache(maxsize=1)
def _bundled_patterns() -> PatternTable:
    text = (resources.files("nl2uml") / "data" / "patterns.json").read_text(encoding="utf-8")
    return _table_from_json(json.loads(text), "bundled patterns")


def _table_from_json(data: dict, where: str) -> PatternTable:
    specs = []
    seen = set()
    for entry in data["patterns"]:
        try:
            pid = PatternId(entry["id"])
        except ValueError:
            raise ValueError(f"{where}: unknown pattern id {entry['id']!r}") from None
        family = Kind.parse(entry["family"])
        if family is not pid.family:
            raise ValueError(f"{where}: {pid.value} declared in the wrong family")
        if pid in seen:
            raise ValueError(f"{where}: {pid.value} defined twice")
        seen.add(pid)
        alts = entry["alternatives"]
        if not alts:
            raise ValueError(f"{where}: {pid.value} has no alternatives")
        for nodes in alts:
            depmatch.validate_pattern(nodes)
        specs.append(PatternSpec(pid, int(entry["priority"]), entry.get("template", ""),
                                 tuple(alts), entry.get("example", "")))
    words = data.get("words", {})
    return PatternTable(
        patterns=tuple(specs),
        have_verbs=frozenset(w.lower() for w in words.get("have_verbs", ["have"])),
        quantity_nouns=frozenset(w.lower() for w in words.get("quantity_nouns", [])),
        type_names={w.casefold(): w for w in words.get("type_names", [])},
        hedges=frozenset(w.lower() for w in words.get("hedges", [])),
    )


# Matching ---------------------------------------------------------------------

@dataclass(frozen=True)
class PatternMatch:
    pattern: PatternId
    bindings: dict  # node id -> token index
    priority: int
    parsed: ParsedSentence = field(compare=False, repr=False)

    def __getitem__(self, name: str) -> int:
        return self.bindings[name]

    def get(self, name: str, default=None):
        return self.bindings.get(name, default)

    @property
    def sort_key(self) -> tuple:
        anchor = self.bindings.get("subject", self.bindings.get("class_word", len(self.parsed)))
        return (-self.priority, anchor, self.pattern.value, tuple(sorted(self.bindings.items())))


def match_patterns(parsed: ParsedSentence, label: Union[Kind, str],
                   table: Optional[PatternTable] = None) -> list[PatternMatch]:
    """Every match of the label's pattern family, one per distinct binding."""
    table = table or load_patterns()
    label = Kind.parse(label)
    out = []
    for spec in table.family(label):
        seen = set()
        for nodes in spec.alternatives:
            for binding in depmatch.match(parsed, nodes):
                key = tuple(sorted(binding.items()))
                if key in seen:
                    continue
                seen.add(key)
                out.append(PatternMatch(spec.id, binding, spec.priority, parsed))
    return out


def select_pattern(matches: Sequence[PatternMatch]) -> PatternMatch:
    if not matches:
        raise ValueError("no pattern matches to choose from")
    return min(matches, key=lambda m: m.sort_key)


def ranked(matches: Iterable[PatternMatch]) -> list[PatternMatch]:
    return sorted(matches, key=lambda m: m.sort_key)


# Multiplicity -------------------------------------------------------------------

_NUMBER_WORDS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
}
_NUM = r"(\d+|" + "|".join(_NUMBER_WORDS) + r")"
_MANY = {"multiple", "many", "several", "various", "numerous"}
_MULT_RULES = [
    (re.compile(r"\b(one and only one|exactly one|only one|just one|one and one only)\b"), lambda m: (1, 1)),
    (re.compile(r"\bat least " + _NUM + r"\b"), lambda m: (_num(m.group(1)), UNBOUNDED)),
    (re.compile(r"\bat most " + _NUM + r"\b"), lambda m: (0, _num(m.group(1)))),
    (re.compile(r"\bzero or one\b"), lambda m: (0, 1)),
    (re.compile(r"\b" + _NUM + r" or more\b"), lambda m: (_num(m.group(1)), UNBOUNDED)),
    (re.compile(r"\b(any|a|an) (number|set|list|collection) of\b"), lambda m: (0, UNBOUNDED)),
]


def _num(word: str) -> int:
    return int(word) if word.isdigit() else _NUMBER_WORDS[word]


def extract_multiplicity(span: Union[str, Sequence[Token]]) -> Optional[Multiplicity]:
    """Cardinality stated in the target side of a relationship sentence."""
    if isinstance(span, str):
        words = re.findall(r"[A-Za-z0-9]+", span)
        nouns = [w for w in words if w.lower() not in _NUMBER_WORDS and not w.isdigit()]
        plural = bool(nouns) and singularize(nouns[-1]) != nouns[-1]
    else:
        words = [t.text for t in span]
        nouns = [t for t in span if t.is_noun]
        plural = bool(nouns) and nouns[-1].is_plural
    text = " ".join(w.lower() for w in words)
    for rx, build in _MULT_RULES:
        m = rx.search(text)
        if m:
            return Multiplicity(*build(m))
    lowered = text.split()
    if any(w in _MANY for w in lowered):
        return Multiplicity(0, UNBOUNDED)
    for w in lowered:
        if w.isdigit() or w in _NUMBER_WORDS:
            n = _num(w)
            if n > 0:
                return Multiplicity(n, n)
    if plural:
        return Multiplicity(0, UNBOUNDED)
    return None


# Naming -----------------------------------------------------------------------

_MAX_NAME_WORDS = 2
_CONTENT_POS = {"NOUN", "PROPN", "ADJ"}


def _word(tok: Token) -> str:
    # plural nouns take their lemma, keeping the written capitalization
    if tok.is_noun and tok.is_plural and tok.lemma:
        lemma = tok.lemma
        return lemma[:1].upper() + lemma[1:] if tok.text[:1].isupper() else lemma
    return tok.text


def _content(parsed: ParsedSentence, indices: Iterable[int], table: PatternTable) -> list[int]:
    out = []
    for i in indices:
        t = parsed[i]
        if t.text.lower() in table.hedges or t.pos == "DET":
            continue
        if t.pos in _CONTENT_POS or t.dep == "compound":
            if any(ch.isalpha() for ch in t.text):
                out.append(i)
    return out


def _name(parsed: ParsedSentence, indices: Iterable[int], kind: NameKind, table: PatternTable,
          limit: int = _MAX_NAME_WORDS) -> str:
    content = _content(parsed, sorted(indices), table)
    if not content:
        raise GenerationError(parsed.source_text, "no content word to name")
    if limit and len(content) > limit:
        log.debug("name %r capped to %d words", " ".join(parsed[i].text for i in content), limit)
        content = content[-limit:]
    return normalize_identifier([_word(parsed[i]) for i in content], kind, lemmatize=False)


def _phrase_name(parsed: ParsedSentence, head: int, kind: NameKind, table: PatternTable) -> str:
    return _name(parsed, phrase_of(parsed, head), kind, table)


def _head_name(parsed: ParsedSentence, head: int, kind: NameKind) -> str:
    return normalize_identifier([_word(parsed[head])], kind, lemmatize=False)


# Class templates ------------------------------------------------------------------

def _is_type_word(tok: Token) -> bool:
    return tok.lemma.lower() == "type"


def _type_clause(parsed: ParsedSentence, type_word: int) -> Optional[int]:
    """Token naming the type in an "of type T" clause headed by ``type_word``."""
    tok = parsed[type_word]
    if tok.dep == "compound" and tok.head > type_word:
        return tok.head
    kids = [c for c in parsed.children(type_word) if c > type_word and parsed[c].dep in ("amod", "compound", "appos", "pobj", "npadvmod")]
    if kids:
        return kids[0]
    if type_word + 1 < len(parsed) and parsed[type_word + 1].pos in ("NOUN", "PROPN", "ADJ"):
        return type_word + 1
    return None


def _conj_chain(parsed: ParsedSentence, start: int) -> list[int]:
    out = []
    stack = [start]
    while stack:
        i = stack.pop()
        for c in parsed.children(i):
            if parsed[c].dep == "conj":
                out.append(c)
                stack.append(c)
    return sorted(out)


def _attributes(parsed: ParsedSentence, obj: int, table: PatternTable) -> list[UmlAttribute]:
    """Attributes from a "have" object, its conjuncts, and any "of type T" clauses."""
    type_words = [i for i, t in enumerate(parsed.tokens) if _is_type_word(t)]
    type_nodes = {}
    for tw in type_words:
        node = _type_clause(parsed, tw)
        if node is not None:
            type_nodes[tw] = node
    type_tokens = set(type_nodes.values()) | set(type_words)

    heads = [obj] + _conj_chain(parsed, obj)
    # "a day, a month and a year" may hang the later items off the verb
    verb = parsed[obj].head
    for c in parsed.children(verb):
        if c > obj and parsed[c].dep in ("npadvmod", "appos", "dobj") and parsed[c].is_noun:
            heads += [c] + _conj_chain(parsed, c)
    for c in parsed.children(obj):
        if parsed[c].dep == "appos" and parsed[c].is_noun:
            heads += [c] + _conj_chain(parsed, c)
    bare = set()  # conjuncts hanging off a type noun are named by their head only
    for node in type_nodes.values():
        for c in _conj_chain(parsed, node):
            heads.append(c)
            bare.add(c)
    heads = sorted(set(h for h in heads if h not in type_tokens or h == obj))

    attrs: list[UmlAttribute] = []
    extra: list[int] = []
    for h in heads:
        if parsed[h].pos not in ("NOUN", "PROPN", "ADJ", "VERB", "X"):
            continue
        name = _head_name(parsed, h, NameKind.ATTRIBUTE_NAME) if h in bare else \
            _phrase_name(parsed, h, NameKind.ATTRIBUTE_NAME, table)
        type_name = None
        following = [tw for tw in type_words if tw > h and tw in type_nodes]
        # a type clause reaches back over "X and Z" but not over "a name and a cost"
        if following and not any(h < g < following[0] and _has_determiner(parsed, g) for g in heads):
            node = type_nodes[following[0]]
            canonical = table.type_names.get(parsed[node].text.casefold())
            if canonical:
                type_name = canonical
            elif node not in extra:
                extra.append(node)
        _add_attribute(attrs, UmlAttribute(name, type_name))
    for node in extra:
        _add_attribute(attrs, UmlAttribute(_head_name(parsed, node, NameKind.ATTRIBUTE_NAME)))
    return attrs


def _has_determiner(parsed: ParsedSentence, i: int) -> bool:
    return any(parsed[c].dep in ("det", "poss") for c in parsed.children(i))


def _add_attribute(attrs: list[UmlAttribute], attr: UmlAttribute) -> None:
    for k, existing in enumerate(attrs):
        if existing.key == attr.key:
            if attr.type_name and not existing.type_name:
                attrs[k] = attr
            return
    attrs.append(attr)


def _package(parsed: ParsedSentence) -> Optional[str]:
    for i, t in enumerate(parsed.tokens):
        if t.lemma.lower() != "package":
            continue
        if t.dep == "compound" and t.head > i:
            return parsed[t.head].text
        mods = [c for c in parsed.children(i) if parsed[c].dep in ("compound", "amod", "nmod", "appos") and c != i]
        if mods:
            return "".join(parsed[c].text for c in sorted(mods))
        if i + 1 < len(parsed) and parsed[i + 1].pos in ("PROPN", "NOUN", "NUM", "X"):
            return parsed[i + 1].text
    return None


def _quoted(text: str) -> Optional[str]:
    m = re.search(r"[\"“']([^\"”']+)[\"”']", text)
    return m.group(1).strip() if m else None


def _leading_run(parsed: ParsedSentence) -> list[int]:
    run = []
    for i, t in enumerate(parsed.tokens):
        if t.pos == "DET" and not run:
            continue
        if t.pos in _CONTENT_POS or t.dep == "compound":
            run.append(i)
        else:
            break
    return run


def generate_class_fragment(match: PatternMatch, table: Optional[PatternTable] = None) -> Fragment:
    table = table or load_patterns()
    if match.pattern.family is not Kind.CLASS:
        raise ValueError(f"{match.pattern.value} is not a class pattern")
    p = match.parsed
    pid = match.pattern
    attributes: list[UmlAttribute] = []
    package = None
    if pid is PatternId.CP6_CLASS_NAMED:
        quoted = _quoted(p.source_text)
        if quoted and any(ch.isalpha() for ch in quoted):
            name = quoted if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", quoted) else \
                normalize_identifier(quoted, NameKind.CLASS_NAME, lemmatize=False)
        else:
            name = _head_name(p, match["subject"], NameKind.CLASS_NAME)
    elif pid is PatternId.CP4_COMPOUND_EXPLICIT:
        cw = match["class_word"]
        mods = set()
        for c in p.children(cw):
            if c < cw and p[c].dep in ("compound", "amod"):
                mods.update(p.subtree(c))
        name = _name(p, mods, NameKind.CLASS_NAME, table)
    elif pid is PatternId.CP3_COMPOUND_NOUN:
        run = _leading_run(p) or phrase_of(p, match["subject"])
        name = _name(p, run, NameKind.CLASS_NAME, table)
    else:
        name = _phrase_name(p, match["subject"], NameKind.CLASS_NAME, table)
        if pid in (PatternId.CP5_TO_HAVE, PatternId.CP8_AND_CLAUSES):
            attributes = _attributes(p, match["object"], table)
        if pid in (PatternId.CP1_COPULA, PatternId.CP7_OF_PACKAGE):
            package = _package(p)
    return Fragment.of_class(UmlClass(name, tuple(attributes), package))


# Relationship templates ---------------------------------------------------------

def _resolve_number(parsed: ParsedSentence, obj: int) -> int:
    # "one and only one Table": the cardinal heads the coordination
    if parsed[obj].pos == "NUM":
        for c in _conj_chain(parsed, obj):
            if parsed[c].is_noun:
                return c
    return obj


def _redirect_quantity(parsed: ParsedSentence, obj: int, table: PatternTable) -> int:
    # "any number of points": the class is the noun after "of"
    if parsed[obj].lemma.lower() in table.quantity_nouns:
        for c in parsed.children(obj):
            if parsed[c].dep == "prep" and parsed[c].text.lower() == "of":
                for g in parsed.children(c):
                    if parsed[g].dep == "pobj" and parsed[g].is_noun:
                        return g
    return obj


def _camel(*words: str) -> str:
    return normalize_identifier([w for w in words if w], NameKind.RELATIONSHIP_NAME, lemmatize=False)


def generate_relationship_fragment(match: PatternMatch, table: Optional[PatternTable] = None) -> Fragment:
    table = table or load_patterns()
    if match.pattern.family is not Kind.RELATIONSHIP:
        raise ValueError(f"{match.pattern.value} is not a relationship pattern")
    p = match.parsed
    pid = match.pattern
    subject = match["subject"]
    raw_object = match["object"]
    if p[raw_object].pos == "NUM" and not any(p[c].is_noun for c in _conj_chain(p, raw_object)):
        raise GenerationError(p.source_text, "relationship target is not a noun")
    target = _redirect_quantity(p, _resolve_number(p, raw_object), table)
    if not p[target].is_noun:
        raise GenerationError(p.source_text, "relationship target is not a noun")

    if pid in (PatternId.RP1_TO_HAVE, PatternId.RP5_NOUN_WITH):
        rel_name = _phrase_name(p, target, NameKind.RELATIONSHIP_NAME, table)
    elif pid is PatternId.RP2_PASSIVE:
        rel_name = _camel(p[match["verb"]].text.lower(), p[match["prep"]].text.lower())
    elif pid is PatternId.RP3_COMPOSED:
        rel_name = "composedOf"
    elif pid is PatternId.RP4_ACTIVE:
        prep = match.get("prep")
        rel_name = _camel(p[match["verb"]].lemma.lower(), p[prep].text.lower() if prep is not None else "")
    else:  # RP6: the role noun names the association
        rel_name = _head_name(p, match["role"], NameKind.RELATIONSHIP_NAME)

    other = any(p[c].text.lower() in ("other", "another") for c in p.children(target))
    if other and p[subject].lemma.lower() == p[target].lemma.lower():
        # "plugins may require other plugins": one class pointing at itself
        source_name = target_name = _head_name(p, target, NameKind.CLASS_NAME)
    else:
        source_name = _phrase_name(p, subject, NameKind.CLASS_NAME, table)
        target_name = _phrase_name(p, target, NameKind.CLASS_NAME, table)

    span = [p[i] for i in p.subtree(raw_object)]
    mult = extract_multiplicity(span)
    rel = UmlRelationship(source_name, target_name, rel_name, mult)
    return Fragment.of_relationship(UmlClass(source_name), UmlClass(target_name), rel)


def generate_from_match(match: PatternMatch, table: Optional[PatternTable] = None) -> Fragment:
    if match.pattern.family is Kind.CLASS:
        return generate_class_fragment(match, table)
    return generate_relationship_fragment(match, table)


# Whole sentence ---------------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    sentence: str
    action: str  # "skipped" or "fallback"
    reason: str

    def __str__(self) -> str:
        return f"{self.action}: {self.reason}: {self.sentence!r}"


@dataclass(frozen=True)
class Generation:
    fragment: Optional[Fragment]
    pattern: Optional[PatternId]
    diagnostic: Optional[Diagnostic] = None


def _first_generated(matches: list[PatternMatch], table: PatternTable) -> Optional[tuple[Fragment, PatternId]]:
    for m in ranked(matches):
        try:
            return generate_from_match(m, table), m.pattern
        except GenerationError as exc:
            log.debug("%s could not be instantiated: %s", m.pattern.value, exc)
    return None


def _bare_class(parsed: ParsedSentence, table: PatternTable) -> Optional[Fragment]:
    for np in noun_phrases(parsed):
        try:
            name = _name(parsed, np.token_indices, NameKind.CLASS_NAME, table)
        except GenerationError:
            continue
        return Fragment.of_class(UmlClass(name))
    return None


def generate(sentence: str, label: Union[Kind, str], parser: Parser,
             table: Optional[PatternTable] = None) -> Generation:
    """Parse, match, select, and instantiate; never raises on bad input."""
    table = table or load_patterns()
    label = Kind.parse(label)
    if not sentence.strip():
        return Generation(None, None, Diagnostic(sentence, "skipped", "empty sentence"))
    try:
        parsed = parser.parse(sentence)
    except ParseError as exc:
        return Generation(None, None, Diagnostic(sentence, "skipped", str(exc)))

    got = _first_generated(match_patterns(parsed, label, table), table)
    if got:
        return Generation(got[0], got[1])
    if label is Kind.RELATIONSHIP:
        got = _first_generated(match_patterns(parsed, Kind.CLASS, table), table)
        if got:
            return Generation(got[0], got[1], Diagnostic(sentence, "fallback", "no relationship pattern; read as a class"))
    bare = _bare_class(parsed, table)
    if bare is not None:
        return Generation(bare, None, Diagnostic(sentence, "fallback", "no pattern; first noun phrase as a class"))
    return Generation(None, None, Diagnostic(sentence, "skipped", "no extractable noun"))


def generate_fragment(sentence: str, label: Union[Kind, str], parser: Parser,
                      table: Optional[PatternTable] = None,
                      diagnostics: Optional[list] = None) -> Optional[Fragment]:
    result = generate(sentence, label, parser, table)
    if result.diagnostic is not None:
        log.info("%s", result.diagnostic)
        if diagnostics is not None:
            diagnostics.append(result.diagnostic)
    return result.fragment
