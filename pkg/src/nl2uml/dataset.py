"""Labeled fragment corpus: loading, grouping by source model, splitting.

Canonical format is JSON lines, one record per fragment::

    {"model_id": "dxf", "fragment_id": "dxf-3", "kind": "class",
     "english": "a Mesh has a name of type String.",
     "uml": {"classes": [...], "relationships": [...]}}

:func:`import_directory` converts a directory export (one folder per model
with a ``fragments.csv`` index and one JSON or PlantUML file per fragment)
into that form.
"""
from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, TypeVar, Union

from sklearn.model_selection import train_test_split

from .compose import compose
from .plantuml import parse_plantuml
from .uml import Fragment, Kind, UmlDiagram, diagram_from_json, diagram_to_json

log = logging.getLogger(__name__)

T = TypeVar("T")


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledFragment:
    model_id: str
    fragment_id: str
    kind: Kind
    english: str
    uml: Fragment

    def __post_init__(self):
        if not self.english.strip():
            raise DatasetError(f"fragment {self.fragment_id}: empty English text")
        if self.kind is not self.uml.kind:
            raise DatasetError(f"fragment {self.fragment_id}: kind {self.kind.value} but payload is {self.uml.kind.value}")

    def to_json(self) -> dict:
        return {"model_id": self.model_id, "fragment_id": self.fragment_id, "kind": self.kind.value,
                "english": self.english, "uml": diagram_to_json(self.uml.payload)}

    @classmethod
    def from_json(cls, data: dict) -> "LabeledFragment":
        kind = Kind.parse(data["kind"])
        payload = diagram_from_json(data["uml"])
        return cls(str(data["model_id"]), str(data["fragment_id"]), kind, data["english"], Fragment(kind, payload))


@dataclass(frozen=True)
class ModelGroup:
    model_id: str
    specification: str
    truth: UmlDiagram
    size: int


@dataclass(frozen=True)
class LoadReport:
    raw_records: int
    fragments: int
    models: int


def load_dataset(path: Union[str, Path], report: Optional[list] = None) -> list[LabeledFragment]:
    """Read a JSON-lines file, or every ``*.jsonl`` file of a directory."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.jsonl"))
        if not files:
            raise DatasetError(f"{path}: no *.jsonl files in directory")
    elif path.exists():
        files = [path]
    else:
        raise DatasetError(f"{path}: no such file or directory")
    out: list[LabeledFragment] = []
    raw = 0
    for f in files:
        with open(f, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                raw += 1
                try:
                    out.append(LabeledFragment.from_json(json.loads(line)))
                except (ValueError, KeyError, TypeError, AttributeError) as exc:
                    raise DatasetError(f"{f}:{lineno}: bad record ({exc})") from exc
    if not out:
        raise DatasetError(f"{path}: dataset is empty")
    ids = Counter(x.fragment_id for x in out)
    dupes = [k for k, n in ids.items() if n > 1]
    if dupes:
        raise DatasetError(f"{path}: repeated fragment ids {dupes[:5]}")
    summary = LoadReport(raw, len(out), len({x.model_id for x in out}))
    log.info("loaded %d fragments (%d records) across %d models", summary.fragments, summary.raw_records, summary.models)
    if report is not None:
        report.append(summary)
    return out


def write_dataset(data: Iterable[LabeledFragment], path: Union[str, Path]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for x in data:
            fh.write(json.dumps(x.to_json(), ensure_ascii=False) + "\n")
            n += 1
    return n


def group_by_model(data: Sequence[LabeledFragment], commutative: bool = False) -> list[ModelGroup]:
    """One test sample per model: joined English text and the composed truth."""
    order: list[str] = []
    members: dict[str, list[LabeledFragment]] = {}
    for x in data:
        if x.model_id not in members:
            order.append(x.model_id)
            members[x.model_id] = []
        members[x.model_id].append(x)
    groups = []
    for mid in order:
        xs = members[mid]
        spec = " ".join(x.english.strip() for x in xs)
        truth = compose((x.uml for x in xs), commutative)
        groups.append(ModelGroup(mid, spec, truth, len(xs)))
    return groups


def stratified_split(items: Sequence[T], labels: Sequence, train_fraction: float,
                     seed: int) -> tuple[list[T], list[T]]:
    if not 0 < train_fraction < 1:
        raise ValueError(f"train fraction must lie strictly between 0 and 1, got {train_fraction}")
    if len(items) < 2:
        raise ValueError("need at least two items to split")
    idx = list(range(len(items)))
    try:
        tr, te = train_test_split(idx, train_size=train_fraction, random_state=seed, stratify=list(labels))
    except ValueError as exc:
        # a part too small to hold every label
        log.warning("stratified split impossible (%s); splitting without stratification", exc)
        tr, te = train_test_split(idx, train_size=train_fraction, random_state=seed)
    return [items[i] for i in sorted(tr)], [items[i] for i in sorted(te)]


def split(data: Sequence[LabeledFragment], train_fraction: float = 0.8,
          seed: int = 0) -> tuple[list[LabeledFragment], list[LabeledFragment]]:
    """Seeded split stratified by fragment kind; both parts keep dataset order."""
    return stratified_split(data, [x.kind.value for x in data], train_fraction, seed)


# Directory import ------------------------------------------------------------------

_INDEX = "fragments.csv"


def _read_payload(path: Path) -> UmlDiagram:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".puml", ".plantuml", ".txt"):
        return parse_plantuml(text)
    return diagram_from_json(json.loads(text))


def import_directory(root: Union[str, Path],
                     reader: Callable[[Path], UmlDiagram] = _read_payload) -> list[LabeledFragment]:
    """Convert ``root/<model>/fragments.csv`` exports into labeled fragments.

    Each index row has the columns ``fragment_id, kind, english, file``; the
    file path is relative to the model folder.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    out = []
    for model_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        index = model_dir / _INDEX
        if not index.exists():
            log.warning("%s: no %s, skipped", model_dir, _INDEX)
            continue
        with open(index, encoding="utf-8", newline="") as fh:
            for lineno, row in enumerate(csv.DictReader(fh), 2):
                try:
                    kind = Kind.parse(row["kind"])
                    payload = reader(model_dir / row["file"])
                    out.append(LabeledFragment(model_dir.name, row["fragment_id"], kind, row["english"],
                                               Fragment(kind, payload)))
                except (ValueError, KeyError, OSError) as exc:
                    raise DatasetError(f"{index}:{lineno}: bad row ({exc})") from exc
    if not out:
        raise DatasetError(f"{root}: no fragments found")
    return out
