"""PlantUML text for class diagrams.

Only the subset this package produces is understood by :func:`parse_plantuml`:
``class`` blocks with ``name : Type`` attribute lines, optional ``package``
blocks, and ``A --> "m..n" B : name`` associations.
"""
from __future__ import annotations

import re

from .uml import Multiplicity, UmlAttribute, UmlClass, UmlDiagram, UmlRelationship

HEADER = "@startuml"
FOOTER = "@enduml"


def _class_lines(c: UmlClass, indent: str = "") -> list[str]:
    lines = [f"{indent}class {c.name} {{"]
    for a in c.attributes:
        lines.append(f"{indent}  {a.name} : {a.type_name}" if a.type_name else f"{indent}  {a.name}")
    lines.append(f"{indent}}}")
    return lines


def emit_plantuml(diagram: UmlDiagram) -> str:
    lines = [HEADER]
    if diagram.package:
        lines.append(f"' package {diagram.package}")
    for c in diagram.classes:
        if c.package:
            lines.append(f"package {c.package} {{")
            lines.extend(_class_lines(c, "  "))
            lines.append("}")
        else:
            lines.extend(_class_lines(c))
    for r in diagram.relationships:
        mult = f' "{r.multiplicity}"' if r.multiplicity else ""
        lines.append(f"{r.source} -->{mult} {r.target} : {r.name}")
    lines.append(FOOTER)
    return "\n".join(lines) + "\n"


_CLASS_OPEN = re.compile(r"^class\s+(\w+)\s*\{\s*$")
_PACKAGE_OPEN = re.compile(r"^package\s+(\S+)\s*\{\s*$")
_ATTRIBUTE = re.compile(r"^(\w+)(?:\s*:\s*(\w+))?$")
_ASSOCIATION = re.compile(
    r'^(\w+)\s*(?:"[^"]*"\s*)?-->\s*(?:"([^"]*)"\s*)?(\w+)\s*:\s*(\w+)$'
)
_DIAGRAM_PACKAGE = re.compile(r"^'\s*package\s+(\S+)$")


def parse_plantuml(text: str) -> UmlDiagram:
    """Inverse of :func:`emit_plantuml`."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != HEADER or lines[-1] != FOOTER:
        raise ValueError("PlantUML text must be framed by @startuml/@enduml")
    classes: list[UmlClass] = []
    rels: list[UmlRelationship] = []
    diagram_package = None
    package = None
    current = None
    attrs: list[UmlAttribute] = []
    for lineno, line in enumerate(lines[1:-1], start=2):
        if current is not None:
            if line == "}":
                classes.append(UmlClass(current, tuple(attrs), package))
                current, attrs = None, []
                continue
            m = _ATTRIBUTE.match(line)
            if not m:
                raise ValueError(f"line {lineno}: bad attribute {line!r}")
            attrs.append(UmlAttribute(m.group(1), m.group(2)))
            continue
        if m := _DIAGRAM_PACKAGE.match(line):
            diagram_package = m.group(1)
        elif m := _PACKAGE_OPEN.match(line):
            package = m.group(1)
        elif line == "}" and package is not None:
            package = None
        elif m := _CLASS_OPEN.match(line):
            current = m.group(1)
        elif m := _ASSOCIATION.match(line):
            mult = Multiplicity.parse(m.group(2)) if m.group(2) else None
            rels.append(UmlRelationship(m.group(1), m.group(3), m.group(4), mult))
        else:
            raise ValueError(f"line {lineno}: unrecognized {line!r}")
    if current is not None:
        raise ValueError(f"class {current} is not closed")
    return UmlDiagram(tuple(classes), tuple(rels), diagram_package)
