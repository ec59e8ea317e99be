"""UML class-diagram value types and their JSON form."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Optional, Union

from .naming import NameKind, name_key

UNBOUNDED = "*"

Bound = Union[int, str]


class Kind(enum.Enum):
    """Fragment kind, also the classifier's label set."""

    CLASS = "class"
    RELATIONSHIP = "relationship"

    @classmethod
    def parse(cls, value: Union[str, "Kind"]) -> "Kind":
        if isinstance(value, Kind):
            return value
        v = str(value).strip().lower()
        if v in ("rel", "relation", "relationship"):
            return cls.RELATIONSHIP
        if v == "class":
            return cls.CLASS
        raise ValueError(f"unknown fragment kind {value!r}")


def _check_identifier(value: str, what: str) -> None:
    if not value or any(ch.isspace() for ch in value):
        raise ValueError(f"{what} must be non-empty without whitespace, got {value!r}")


@dataclass(frozen=True)
class UmlAttribute:
    name: str
    type_name: Optional[str] = None

    def __post_init__(self):
        _check_identifier(self.name, "attribute name")
        if self.type_name is not None and not self.type_name:
            raise ValueError("attribute type, when given, must be non-empty")

    @cached_property
    def key(self) -> str:
        return name_key(self.name, NameKind.ATTRIBUTE_NAME)


@dataclass(frozen=True)
class UmlClass:
    name: str
    attributes: tuple[UmlAttribute, ...] = ()
    package: Optional[str] = None

    def __post_init__(self):
        _check_identifier(self.name, "class name")
        object.__setattr__(self, "attributes", tuple(self.attributes))
        keys = [a.key for a in self.attributes]
        if len(keys) != len(set(keys)):
            raise ValueError(f"duplicate attribute names in class {self.name}")

    @cached_property
    def key(self) -> str:
        return name_key(self.name, NameKind.CLASS_NAME)

    def attribute(self, name: str) -> Optional[UmlAttribute]:
        k = name_key(name, NameKind.ATTRIBUTE_NAME)
        for a in self.attributes:
            if a.key == k:
                return a
        return None

    def without_attribute(self, name: str) -> "UmlClass":
        k = name_key(name, NameKind.ATTRIBUTE_NAME)
        return replace(self, attributes=tuple(a for a in self.attributes if a.key != k))


@dataclass(frozen=True)
class Multiplicity:
    lower: int
    upper: Bound = UNBOUNDED

    def __post_init__(self):
        if not isinstance(self.lower, int) or self.lower < 0:
            raise ValueError(f"lower bound must be a non-negative integer, got {self.lower!r}")
        if self.upper != UNBOUNDED:
            if not isinstance(self.upper, int) or self.upper < 1:
                raise ValueError(f"upper bound must be a positive integer or '*', got {self.upper!r}")
            if self.lower > self.upper:
                raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def __str__(self) -> str:
        return f"{self.lower}..{self.upper}"

    @classmethod
    def parse(cls, text: str) -> "Multiplicity":
        text = text.strip()
        if text == UNBOUNDED:
            return cls(0, UNBOUNDED)
        lo, sep, hi = text.partition("..")
        if not sep:
            n = int(lo)
            return cls(n, n)
        return cls(int(lo), UNBOUNDED if hi.strip() == UNBOUNDED else int(hi))


@dataclass(frozen=True)
class UmlRelationship:
    """Directed association; the multiplicity annotates the target end."""

    source: str
    target: str
    name: str
    multiplicity: Optional[Multiplicity] = None

    def __post_init__(self):
        _check_identifier(self.source, "relationship source")
        _check_identifier(self.target, "relationship target")
        _check_identifier(self.name, "relationship name")

    @cached_property
    def key(self) -> tuple[str, str, str]:
        return (
            name_key(self.source, NameKind.CLASS_NAME),
            name_key(self.target, NameKind.CLASS_NAME),
            name_key(self.name, NameKind.RELATIONSHIP_NAME),
        )


def relationship_equals(r1: UmlRelationship, r2: UmlRelationship) -> bool:
    """Same endpoints and same normalized name; multiplicity is ignored."""
    return r1.key == r2.key


@dataclass(frozen=True)
class UmlDiagram:
    classes: tuple[UmlClass, ...] = ()
    relationships: tuple[UmlRelationship, ...] = ()
    package: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "relationships", tuple(self.relationships))
        self.validate()

    def validate(self) -> None:
        keys = [c.key for c in self.classes]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate class names in diagram")
        known = set(keys)
        seen = set()
        for r in self.relationships:
            src, dst, _ = r.key
            if src not in known or dst not in known:
                raise ValueError(f"relationship {r.source}->{r.target} names a missing class")
            if r.key in seen:
                raise ValueError(f"duplicate relationship {r.source} -{r.name}-> {r.target}")
            seen.add(r.key)

    def find_class(self, name: str) -> Optional[UmlClass]:
        k = name_key(name, NameKind.CLASS_NAME)
        for c in self.classes:
            if c.key == k:
                return c
        return None

    def has_relationship(self, rel: UmlRelationship) -> bool:
        return any(relationship_equals(rel, r) for r in self.relationships)

    @property
    def attribute_count(self) -> int:
        return sum(len(c.attributes) for c in self.classes)


@dataclass(frozen=True)
class Fragment:
    kind: Kind
    payload: UmlDiagram = field(default_factory=UmlDiagram)

    def __post_init__(self):
        n_cls, n_rel = len(self.payload.classes), len(self.payload.relationships)
        if self.kind is Kind.CLASS:
            if n_cls != 1 or n_rel:
                raise ValueError("a class fragment holds exactly one class and no relationship")
        else:
            if n_rel != 1 or n_cls not in (1, 2):
                raise ValueError("a relationship fragment holds one relationship and its endpoint classes")
            if n_cls == 1:
                rel = self.payload.relationships[0]
                if rel.key[0] != rel.key[1]:
                    raise ValueError("a one-class relationship fragment must be self-referential")

    @property
    def uml_class(self) -> UmlClass:
        return self.payload.classes[0]

    @property
    def relationship(self) -> UmlRelationship:
        return self.payload.relationships[0]

    @classmethod
    def of_class(cls, klass: UmlClass) -> "Fragment":
        return cls(Kind.CLASS, UmlDiagram((klass,)))

    @classmethod
    def of_relationship(cls, source: UmlClass, target: UmlClass, rel: UmlRelationship) -> "Fragment":
        classes = (source,) if source.key == target.key else (source, target)
        return cls(Kind.RELATIONSHIP, UmlDiagram(classes, (rel,)))


# JSON -----------------------------------------------------------------------

def multiplicity_to_json(m: Optional[Multiplicity]) -> Optional[dict]:
    if m is None:
        return None
    return {"lower": m.lower, "upper": m.upper}


def diagram_to_json(diagram: UmlDiagram) -> dict[str, Any]:
    classes = []
    for c in diagram.classes:
        entry: dict[str, Any] = {
            "name": c.name,
            "attributes": [{"name": a.name, "type": a.type_name} for a in c.attributes],
        }
        if c.package is not None:
            entry["package"] = c.package
        classes.append(entry)
    out: dict[str, Any] = {
        "classes": classes,
        "relationships": [
            {
                "source": r.source,
                "target": r.target,
                "name": r.name,
                "multiplicity": multiplicity_to_json(r.multiplicity),
            }
            for r in diagram.relationships
        ],
    }
    if diagram.package is not None:
        out["package"] = diagram.package
    return out


def diagram_from_json(data: dict[str, Any]) -> UmlDiagram:
    classes = []
    for c in data.get("classes", []):
        attrs = tuple(
            UmlAttribute(a["name"], a.get("type") or None) for a in c.get("attributes", [])
        )
        classes.append(UmlClass(c["name"], attrs, c.get("package")))
    rels = []
    for r in data.get("relationships", []):
        m = r.get("multiplicity")
        mult = Multiplicity(int(m["lower"]), m["upper"] if m["upper"] == UNBOUNDED else int(m["upper"])) if m else None
        rels.append(UmlRelationship(r["source"], r["target"], r["name"], mult))
    return UmlDiagram(tuple(classes), tuple(rels), data.get("package"))


def canonical_json(diagram: UmlDiagram) -> str:
    """Stable, byte-comparable JSON text of a diagram."""
    return json.dumps(diagram_to_json(diagram), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def fragment_to_json(fragment: Fragment) -> dict[str, Any]:
    return {"kind": fragment.kind.value, "uml": diagram_to_json(fragment.payload)}


def fragment_from_json(data: dict[str, Any]) -> Fragment:
    return Fragment(Kind.parse(data["kind"]), diagram_from_json(data["uml"]))
