"""Backtracking matcher for dependency-tree patterns.

A pattern is a list of node specs in the DependencyMatcher vocabulary::

    {"RIGHT_ID": "verb", "RIGHT_ATTRS": {"LEMMA": "have", "DEP": "ROOT"}}
    {"LEFT_ID": "verb", "REL_OP": ">", "RIGHT_ID": "subject",
     "RIGHT_ATTRS": {"DEP": {"IN": ["nsubj", "nsubjpass"]}}}

Supported attributes: TEXT, LOWER, LEMMA, POS, TAG, DEP. A value is either a
literal or a ``{"IN": [...]}`` / ``{"NOT_IN": [...]}`` set. LOWER and LEMMA
compare case-insensitively. Supported operators: ``>`` ``<`` ``>>`` ``<<``
``.`` ``.*`` ``;`` ``;*`` ``$+`` ``$-`` ``$++`` ``$--``.
"""
from __future__ import annotations

from typing import Any, Callable, Iterator

from .parsing import ParsedSentence, Token

_FIELDS: dict[str, Callable[[Token], str]] = {
    "TEXT": lambda t: t.text,
    "LOWER": lambda t: t.text.lower(),
    "LEMMA": lambda t: t.lemma.lower(),
    "POS": lambda t: t.pos,
    "TAG": lambda t: t.tag,
    "DEP": lambda t: t.dep,
}
_FOLDED = {"LOWER", "LEMMA"}
_OPERATORS = {">", "<", ">>", "<<", ".", ".*", ";", ";*", "$+", "$-", "$++", "$--"}


def _fold(key: str, value: str) -> str:
    return value.lower() if key in _FOLDED else value


def token_matches(tok: Token, attrs: dict[str, Any]) -> bool:
    for key, want in attrs.items():
        try:
            have = _FIELDS[key](tok)
        except KeyError:
            raise ValueError(f"unsupported token attribute {key!r}") from None
        if isinstance(want, dict):
            if "IN" in want and have not in {_fold(key, v) for v in want["IN"]}:
                return False
            if "NOT_IN" in want and have in {_fold(key, v) for v in want["NOT_IN"]}:
                return False
        elif have != _fold(key, want):
            return False
    return True


def _siblings(p: ParsedSentence, i: int) -> list[int]:
    h = p[i].head
    if h == i:
        return []
    return [c for c in p.children(h) if c != i]


def candidates(p: ParsedSentence, op: str, left: int) -> list[int]:
    n = len(p)
    if op == ">":
        return list(p.children(left))
    if op == "<":
        h = p[left].head
        return [] if h == left else [h]
    if op == ">>":
        return [i for i in p.subtree(left) if i != left]
    if op == "<<":
        return list(p.ancestors(left))
    if op == ".":
        return [left + 1] if left + 1 < n else []
    if op == ".*":
        return list(range(left + 1, n))
    if op == ";":
        return [left - 1] if left > 0 else []
    if op == ";*":
        return list(range(0, left))
    if op == "$+":
        return [s for s in _siblings(p, left) if s == left + 1]
    if op == "$-":
        return [s for s in _siblings(p, left) if s == left - 1]
    if op == "$++":
        return [s for s in _siblings(p, left) if s > left]
    if op == "$--":
        return [s for s in _siblings(p, left) if s < left]
    raise ValueError(f"unsupported relation operator {op!r}")


def validate_pattern(nodes: list[dict]) -> None:
    if not nodes:
        raise ValueError("empty pattern")
    seen = set()
    for k, node in enumerate(nodes):
        rid = node.get("RIGHT_ID")
        if not rid or rid in seen:
            raise ValueError(f"node {k}: RIGHT_ID missing or repeated")
        if k == 0:
            if "LEFT_ID" in node or "REL_OP" in node:
                raise ValueError("the anchor node takes no LEFT_ID/REL_OP")
        else:
            if node.get("LEFT_ID") not in seen:
                raise ValueError(f"node {rid}: LEFT_ID must name an earlier node")
            op = node.get("REL_OP")
            if op not in _OPERATORS:
                raise ValueError(f"node {rid}: unsupported REL_OP {op!r}")
        for key in node.get("RIGHT_ATTRS", {}):
            if key not in _FIELDS:
                raise ValueError(f"node {rid}: unsupported attribute {key!r}")
        seen.add(rid)


def match(p: ParsedSentence, nodes: list[dict]) -> Iterator[dict[str, int]]:
    """Yield every binding of node ids to distinct token indices."""
    binding: dict[str, int] = {}
    used: set[int] = set()

    def extend(k: int) -> Iterator[dict[str, int]]:
        if k == len(nodes):
            yield dict(binding)
            return
        node = nodes[k]
        attrs = node.get("RIGHT_ATTRS", {})
        pool = range(len(p)) if k == 0 else candidates(p, node["REL_OP"], binding[node["LEFT_ID"]])
        for i in pool:
            if i in used or not token_matches(p[i], attrs):
                continue
            binding[node["RIGHT_ID"]] = i
            used.add(i)
            yield from extend(k + 1)
            used.discard(i)
            del binding[node["RIGHT_ID"]]

    yield from extend(0)
