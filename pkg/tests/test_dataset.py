import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from nl2uml.dataset import (DatasetError, LabeledFragment, group_by_model, import_directory, load_dataset, split,
                            write_dataset)
from nl2uml.metrics import to_undirected_graph
from nl2uml.plantuml import emit_plantuml
from nl2uml.uml import Fragment, Kind, UmlAttribute, UmlClass, UmlDiagram, UmlRelationship, diagram_to_json

DXF_TEXT = ("Drawing Interchange Format. a Drawing Interchange model may have multiple meshes. "
            "a Mesh has a name of type String. a Mesh may have any number of points. "
            "a point maps to only one Mesh. a point has a name of type String and coordinates X and Z of type Double.")


def record(i, model="m", kind="class", english=None):
    uml = {"classes": [{"name": f"C{i}", "attributes": []}], "relationships": []}
    if kind == "relationship":
        uml = {"classes": [{"name": f"C{i}", "attributes": []}, {"name": "Other", "attributes": []}],
               "relationships": [{"source": f"C{i}", "target": "Other", "name": "other", "multiplicity": None}]}
    return {"model_id": model, "fragment_id": f"{model}-{i}", "kind": kind,
            "english": english or f"sentence {i}.", "uml": uml}


def write_lines(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


def test_single_record(tmp_path):
    data = load_dataset(write_lines(tmp_path / "d.jsonl", [record(1)]))
    assert len(data) == 1
    assert data[0].uml.uml_class == UmlClass("C1")


def test_missing_path(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "nothing.jsonl")


def test_empty_directory(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)


def test_empty_file(tmp_path):
    (tmp_path / "d.jsonl").write_text("\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "d.jsonl")


def test_directory_of_files(tmp_path):
    write_lines(tmp_path / "a.jsonl", [record(1, "a")])
    write_lines(tmp_path / "b.jsonl", [record(1, "b"), record(2, "b")])
    report = []
    assert len(load_dataset(tmp_path, report)) == 3
    assert (report[0].raw_records, report[0].fragments, report[0].models) == (3, 3, 2)


@pytest.mark.parametrize("bad", [
    {"kind": "association"},
    {"english": "   "},
    {"kind": "relationship"},
    {"uml": {"classes": [{"name": "two words"}]}},
    {"model_id": None, "uml": None},
])
def test_bad_record_is_located(tmp_path, bad):
    rec = record(2)
    rec.update(bad)
    path = write_lines(tmp_path / "d.jsonl", [record(1), rec])
    with pytest.raises(DatasetError, match=r"d\.jsonl:2"):
        load_dataset(path)


def test_repeated_ids(tmp_path):
    with pytest.raises(DatasetError, match="repeated"):
        load_dataset(write_lines(tmp_path / "d.jsonl", [record(1), record(1)]))


def test_write_then_load(tmp_path, sample):
    assert write_dataset(sample, tmp_path / "copy.jsonl") == len(sample)
    assert load_dataset(tmp_path / "copy.jsonl") == sample


def test_dxf_specification_is_the_joined_text(sample):
    dxf = next(g for g in group_by_model(sample) if g.model_id == "dxf")
    assert dxf.specification == DXF_TEXT
    g = to_undirected_graph(dxf.truth)
    assert (g.node_count, g.edge_count) == (3, 2)


def test_one_fragment_one_group(tmp_path):
    data = load_dataset(write_lines(tmp_path / "d.jsonl", [record(1, kind="relationship")]))
    (g,) = group_by_model(data)
    assert g.truth == data[0].uml.payload
    assert g.size == 1


def test_groups_cover_the_dataset(sample):
    groups = group_by_model(sample)
    assert len(groups) == len({x.model_id for x in sample})
    assert sum(g.size for g in groups) == len(sample)
    for g in groups:
        g.truth.validate()


def fragments(n, relationship_every=3):
    out = []
    for i in range(n):
        if i % relationship_every == 0:
            f = Fragment.of_relationship(UmlClass(f"C{i}"), UmlClass("D"), UmlRelationship(f"C{i}", "D", "d"))
        else:
            f = Fragment.of_class(UmlClass(f"C{i}"))
        out.append(LabeledFragment(f"m{i % 62}", f"f{i}", f.kind, f"text {i}", f))
    return out


def test_split_of_full_size():
    data = fragments(649)
    train, test = split(data, 0.8, seed=7)
    # oracle: the held-out part is ceil(649 * 0.2) = 130
    assert len(test) == math.ceil(649 * 0.2) == 130
    assert len(train) == 649 - 130 == 519


def test_split_of_ten():
    train, test = split(fragments(10), 0.8, seed=0)
    assert (len(train), len(test)) == (8, 2)


def test_split_is_seeded():
    data = fragments(100)
    assert split(data, 0.8, 5) == split(data, 0.8, 5)
    assert split(data, 0.8, 5) != split(data, 0.8, 6)


@pytest.mark.parametrize("fraction", [0, 1, -0.2, 1.5])
def test_split_fraction_range(fraction):
    with pytest.raises(ValueError):
        split(fragments(10), fraction, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(10, 200), st.floats(0.3, 0.9), st.integers(0, 1000))
def test_split_partitions(n, fraction, seed):
    data = fragments(n)
    train, test = split(data, fraction, seed)
    ids = [x.fragment_id for x in train + test]
    assert sorted(ids) == sorted(x.fragment_id for x in data)
    assert abs(len(train) - n * fraction) <= 1
    kinds = lambda xs: sum(x.kind is Kind.RELATIONSHIP for x in xs)
    assert abs(kinds(test) - kinds(data) * len(test) / n) <= 1


def test_import_directory(tmp_path):
    model = tmp_path / "news"
    model.mkdir()
    (model / "f1.json").write_text(json.dumps(diagram_to_json(UmlDiagram((UmlClass("News", (UmlAttribute("title"),)),)))))
    (model / "f2.puml").write_text(emit_plantuml(UmlDiagram((UmlClass("Publisher"),))))
    (model / "fragments.csv").write_text(
        "fragment_id,kind,english,file\nn1,class,News have titles.,f1.json\nn2,class,There is a publisher.,f2.puml\n")
    (tmp_path / "stray").mkdir()
    data = import_directory(tmp_path)
    assert [x.fragment_id for x in data] == ["n1", "n2"]
    assert data[1].uml.uml_class == UmlClass("Publisher")


def test_import_bad_row(tmp_path):
    model = tmp_path / "news"
    model.mkdir()
    (model / "fragments.csv").write_text("fragment_id,kind,english,file\nn1,class,News.,missing.json\n")
    with pytest.raises(DatasetError, match="fragments.csv:2"):
        import_directory(tmp_path)
