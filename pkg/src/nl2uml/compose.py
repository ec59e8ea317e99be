"""Greedy composition of fragments into one class diagram.

Fragments are folded in order. Two kinds of contradiction are repaired on the
way: an attribute that names an incoming class becomes an association to that
class (attribute-class), and an attribute that names an incoming association
of the same class is dropped in favour of the association
(attribute-relationship).

With ``commutative=True`` both checks are also run in the reverse direction,
so a conflict is caught whichever side arrives first.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .naming import NameKind, name_key
from .uml import UNBOUNDED, Fragment, Kind, Multiplicity, UmlAttribute, UmlClass, UmlDiagram, UmlRelationship

ZERO_TO_MANY = Multiplicity(0, UNBOUNDED)

INSERTED = "inserted"
MERGED = "merged"
CONFLICT_AC = "conflict_AC"
CONFLICT_AR = "conflict_AR"
ABSORBED = "absorbed"


def _akey(name: str) -> str:
    # classes and attributes are compared on the same footing
    return name_key(name, NameKind.ATTRIBUTE_NAME)


@dataclass(frozen=True)
class MergeEvent:
    step: int
    fragment_kind: str
    action: str
    detail: str = ""

    def to_json(self) -> dict:
        return {"step": self.step, "fragment_kind": self.fragment_kind, "action": self.action, "detail": self.detail}


@dataclass(frozen=True)
class CompositionState:
    model: UmlDiagram = field(default_factory=UmlDiagram)
    log: tuple[MergeEvent, ...] = ()

    def log_json(self) -> str:
        return json.dumps([e.to_json() for e in self.log], indent=2)


# Attribute merge ---------------------------------------------------------------

def merge_attributes(recipient: UmlClass, incoming: Iterable[UmlAttribute]) -> UmlClass:
    """Add incoming attributes; a typed attribute replaces an untyped namesake."""
    attrs = list(recipient.attributes)
    for a in incoming:
        for k, c in enumerate(attrs):
            if c.key == a.key:
                if a.type_name and not c.type_name:
                    attrs[k] = a
                break
        else:
            attrs.append(a)
    if tuple(attrs) == recipient.attributes:
        return recipient
    return UmlClass(recipient.name, tuple(attrs), recipient.package)


# Working copy -------------------------------------------------------------------

class _Work:
    """Mutable view of a diagram used inside a single merge step."""

    def __init__(self, diagram: UmlDiagram):
        self.classes = list(diagram.classes)
        self.rels = list(diagram.relationships)
        self.rel_keys = {r.key for r in self.rels}
        self.package = diagram.package
        self.notes: list[str] = []

    def index(self, name: str) -> Optional[int]:
        key = _akey(name)
        for i, c in enumerate(self.classes):
            if _akey(c.name) == key:
                return i
        return None

    def find(self, name: str) -> Optional[UmlClass]:
        i = self.index(name)
        return None if i is None else self.classes[i]

    def owners(self, attribute: str) -> list[int]:
        key = _akey(attribute)
        return [i for i, c in enumerate(self.classes) if any(a.key == key for a in c.attributes)]

    def add_rel(self, rel: UmlRelationship) -> bool:
        src, tgt = self.find(rel.source), self.find(rel.target)
        # endpoints take the model's spelling of the class names
        rel = UmlRelationship(src.name, tgt.name, rel.name, rel.multiplicity)
        if rel.key in self.rel_keys:
            return False
        self.rels.append(rel)
        self.rel_keys.add(rel.key)
        return True

    def has_outgoing(self, source: str, name: str) -> bool:
        s, n = _akey(source), name_key(name, NameKind.RELATIONSHIP_NAME)
        return any(_akey(r.source) == s and r.key[2] == n for r in self.rels)

    def freeze(self) -> UmlDiagram:
        return UmlDiagram(tuple(self.classes), tuple(self.rels), self.package)


def _put_class(w: _Work, incoming: UmlClass) -> bool:
    """Insert ``incoming`` or merge it into its namesake. True if the model changed."""
    i = w.index(incoming.name)
    if i is None:
        w.classes.append(incoming)
        return True
    existing = w.classes[i]
    merged = merge_attributes(existing, incoming.attributes)
    if merged.package is None and incoming.package is not None:
        merged = UmlClass(merged.name, merged.attributes, incoming.package)
    w.classes[i] = merged
    return merged != existing


def _attribute_class(w: _Work, klass: UmlClass) -> int:
    """Turn every attribute named like ``klass`` into an association to it."""
    owners = w.owners(klass.name)
    if not owners:
        return 0
    links = []
    for i in owners:
        owner = w.classes[i]
        attr = owner.attribute(klass.name)
        w.classes[i] = owner.without_attribute(attr.name)
        w.notes.append(f"{owner.name}.{attr.name}" + (f" : {attr.type_name}" if attr.type_name else ""))
        links.append((owner.name, attr.name))
    _put_class(w, klass)
    for owner_name, attr_name in links:
        w.add_rel(UmlRelationship(owner_name, klass.name, attr_name, ZERO_TO_MANY))
    return len(owners)


def _reverse_checks(w: _Work, name: str) -> bool:
    """Conflicts carried by the attributes of class ``name`` against the rest of the model."""
    changed = False
    i = w.index(name)
    for attr in list(w.classes[i].attributes):
        klass = w.classes[i]
        if w.has_outgoing(klass.name, attr.name):
            w.classes[i] = klass.without_attribute(attr.name)
            changed = True
        elif w.find(attr.name) is not None:
            target = w.find(attr.name)
            w.classes[i] = klass.without_attribute(attr.name)
            w.add_rel(UmlRelationship(klass.name, target.name, attr.name, ZERO_TO_MANY))
            changed = True
    return changed


def _admit_class(w: _Work, klass: UmlClass, commutative: bool) -> tuple[str, int]:
    """Class arrival, shared by class fragments and (commutative) relationship endpoints."""
    conflicts = _attribute_class(w, klass)
    if conflicts:
        changed = True
    else:
        existed = w.index(klass.name) is not None
        changed = _put_class(w, klass)
        if commutative:
            changed = _reverse_checks(w, klass.name) or changed
        if not changed:
            return ABSORBED, 0
        return (MERGED if existed else INSERTED), 0
    if commutative:
        _reverse_checks(w, klass.name)
    return CONFLICT_AC, conflicts


def resolve_attribute_class_conflict(state: CompositionState, f: Fragment) -> CompositionState:
    if f.kind is not Kind.CLASS:
        raise ValueError("attribute-class conflicts involve class fragments")
    w = _Work(state.model)
    if not w.owners(f.uml_class.name):
        raise ValueError(f"no attribute named {f.uml_class.name!r} in the model")
    _attribute_class(w, f.uml_class)
    return _finish(state, w, f, CONFLICT_AC)


def _ar_owner(w: _Work, f: Fragment) -> Optional[int]:
    rel = f.relationship
    i = w.index(rel.source)
    if i is None:
        return None
    return i if w.classes[i].attribute(rel.name) is not None else None


def _attribute_relationship(w: _Work, f: Fragment, i: int) -> UmlClass:
    """Drop the attribute and fold the fragment's source class into the model's."""
    rel = f.relationship
    a_cls = w.classes[i]
    attr = a_cls.attribute(rel.name)
    w.notes.append(f"{a_cls.name}.{attr.name}" + (f" : {attr.type_name}" if attr.type_name else ""))
    remaining = a_cls.without_attribute(attr.name)
    c_cls = _endpoint(f, rel.source)
    merged = merge_attributes(c_cls, remaining.attributes)
    w.classes[i] = UmlClass(a_cls.name, merged.attributes, a_cls.package or c_cls.package)
    return w.classes[i]


def resolve_attribute_relationship_conflict(state: CompositionState, f: Fragment) -> CompositionState:
    if f.kind is not Kind.RELATIONSHIP:
        raise ValueError("attribute-relationship conflicts involve relationship fragments")
    w = _Work(state.model)
    i = _ar_owner(w, f)
    if i is None:
        raise ValueError("the fragment's source class holds no attribute named like the relationship")
    _attribute_relationship(w, f, i)
    _place_relationship(w, f, False, skip_source=True)
    return _finish(state, w, f, CONFLICT_AR)


def _endpoint(f: Fragment, name: str) -> UmlClass:
    key = _akey(name)
    return next(c for c in f.payload.classes if _akey(c.name) == key)


def _place_relationship(w: _Work, f: Fragment, commutative: bool, skip_source: bool = False) -> bool:
    rel = f.relationship
    changed = False
    ends = [rel.source] if _akey(rel.source) == _akey(rel.target) else [rel.source, rel.target]
    for k, name in enumerate(ends):
        if skip_source and k == 0:
            continue
        klass = _endpoint(f, name)
        if commutative:
            action, _ = _admit_class(w, klass, True)
            changed = changed or action != ABSORBED
        else:
            changed = _put_class(w, klass) or changed
    added = w.add_rel(rel)
    if commutative:
        # the new association may make an attribute of its source redundant
        changed = _reverse_checks(w, rel.source) or changed
    return added or changed


def merge_fragment(state: CompositionState, f: Fragment, commutative: bool = False) -> CompositionState:
    """One step of the greedy fold; the model stays valid after every step."""
    w = _Work(state.model)
    if f.kind is Kind.CLASS:
        action, _ = _admit_class(w, f.uml_class, commutative)
        return _finish(state, w, f, action)
    i = _ar_owner(w, f)
    if i is not None:
        _attribute_relationship(w, f, i)
        _place_relationship(w, f, commutative, skip_source=not commutative)
        return _finish(state, w, f, CONFLICT_AR)
    had = w.find(f.relationship.source) is not None and w.find(f.relationship.target) is not None
    known = state.model.has_relationship(f.relationship)
    if not _place_relationship(w, f, commutative):
        action = ABSORBED
    else:
        action = MERGED if had and known else INSERTED
    return _finish(state, w, f, action)


def _finish(state: CompositionState, w: _Work, f: Fragment, action: str) -> CompositionState:
    model = w.freeze()  # construction validates
    event = MergeEvent(len(state.log), f.kind.value, action, "; ".join(w.notes))
    return CompositionState(model, state.log + (event,))


def compose_state(fragments: Iterable[Fragment], commutative: bool = False,
                  state: Optional[CompositionState] = None) -> CompositionState:
    state = state or CompositionState()
    for f in fragments:
        state = merge_fragment(state, f, commutative)
    return state


def compose(fragments: Iterable[Fragment], commutative: bool = False) -> UmlDiagram:
    return compose_state(fragments, commutative).model
