import json
import subprocess
import sys

import pytest

from nl2uml.cli import EXIT_FAIL, EXIT_NO_MODEL, EXIT_OK, main
from nl2uml.dataset import group_by_model
from nl2uml.plantuml import parse_plantuml
from nl2uml.uml import Multiplicity, UmlAttribute, UmlClass, diagram_from_json, fragment_to_json, Fragment


@pytest.fixture(scope="module")
def model(tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "m.json"
    assert main(["train", "--model", str(path)]) == EXIT_OK
    return str(path)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_generate_class(model, tmp_path, capsys):
    assert main(["generate", write(tmp_path, "s.txt", "News have titles and links"), "--model", model]) == EXIT_OK
    d = parse_plantuml(capsys.readouterr().out)
    assert d.classes == (UmlClass("News", (UmlAttribute("title"), UmlAttribute("link"))),)


def test_generate_dxf(model, tmp_path, sample, capsys):
    spec = next(g for g in group_by_model(sample) if g.model_id == "dxf").specification
    out = str(tmp_path / "out.json")
    assert main(["generate", write(tmp_path, "dxf.txt", spec), "--model", model, "--format", "json",
                 "--output", out]) == EXIT_OK
    d = diagram_from_json(json.loads(open(out, encoding="utf-8").read()))
    assert d.find_class("Mesh") and d.find_class("Point")
    links = {(r.source, r.target): r.multiplicity for r in d.relationships}
    assert links[("Mesh", "Point")] == Multiplicity(0)
    assert links[("Point", "Mesh")] == Multiplicity(1, 1)


def test_generate_is_deterministic(model, tmp_path, capsys):
    path = write(tmp_path, "s.txt", "There is a place. It has a name.")
    main(["generate", path, "--model", model])
    first = capsys.readouterr().out
    main(["generate", path, "--model", model])
    assert capsys.readouterr().out == first


def test_empty_input(model, tmp_path, capsys):
    assert main(["generate", write(tmp_path, "e.txt", "  \n"), "--model", model]) == EXIT_FAIL
    assert "empty" in capsys.readouterr().err


def test_unreadable_input(model, tmp_path, capsys):
    assert main(["generate", str(tmp_path / "missing.txt"), "--model", model]) == EXIT_FAIL


def test_missing_model(tmp_path, capsys):
    code = main(["generate", write(tmp_path, "s.txt", "There is a place."), "--model", str(tmp_path / "no.json")])
    assert code == EXIT_NO_MODEL
    assert "nl2uml train" in capsys.readouterr().err


def test_skipped_sentences_are_reported(model, tmp_path, capsys):
    assert main(["generate", write(tmp_path, "s.txt", "There is a place. Run quickly!"), "--model", model]) == EXIT_OK
    captured = capsys.readouterr()
    assert "skipped" in captured.err
    assert "class Place" in captured.out


def test_verbose_prints_the_merge_log(model, tmp_path, capsys):
    main(["generate", write(tmp_path, "s.txt", "There is a place."), "--model", model, "--verbose"])
    assert '"action": "inserted"' in capsys.readouterr().err


def dataset_line(model_id, fid, english, klass):
    frag = Fragment.of_class(klass)
    return json.dumps({"model_id": model_id, "fragment_id": fid, "kind": "class", "english": english,
                       "uml": fragment_to_json(frag)["uml"]}) + "\n"


def test_evaluate_perfect_group(tmp_path, capsys):
    data = write(tmp_path, "d.jsonl", dataset_line("news", "n1", "News have titles and links",
                                                   UmlClass("News", (UmlAttribute("title"), UmlAttribute("link")))))
    code = main(["evaluate", "--dataset", data, "--gold-labels", "--report", "json",
                 "--model", str(tmp_path / "none.json")])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["failed"] == 0
    for level in report["levels"]:
        for key, value in level.items():
            if key != "level" and value is not None:
                assert value == 1.0, (level["level"], key)


def test_evaluate_isolates_a_failing_group(tmp_path, capsys):
    lines = (dataset_line("good", "g1", "There is a place.", UmlClass("Place"))
             + dataset_line("bad", "b1", "Run quickly!", UmlClass("Runner")))
    code = main(["evaluate", "--dataset", write(tmp_path, "d.jsonl", lines), "--gold-labels",
                 "--model", str(tmp_path / "none.json")])
    captured = capsys.readouterr()
    assert code == EXIT_FAIL  # one of two groups is more than 10%
    assert "group bad failed" in captured.err
    assert "2 groups, 1 failed" in captured.out
    assert "exact" in captured.out


def test_evaluate_with_the_classifier(model, capsys):
    assert main(["evaluate", "--model", model]) == EXIT_OK
    assert "general" in capsys.readouterr().out


def test_evaluate_rejects_bad_threshold(model, capsys):
    assert main(["evaluate", "--model", model, "--energy-threshold", "1.5"]) == EXIT_FAIL


def test_train_grid(tmp_path, capsys):
    assert main(["train", "--model", str(tmp_path / "m.json"), "--all-algorithms", "--both-vectorizers"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0].split() == ["classifier", "tfidf", "count"]
    assert len([ln for ln in out[1:9]]) == 8


def test_train_on_separable_fixture(tmp_path, capsys):
    lines = []
    for i in range(10):
        lines.append(json.dumps({"model_id": "toy", "fragment_id": f"c{i}", "kind": "class",
                                 "english": f"thing{i} is a class",
                                 "uml": {"classes": [{"name": f"Thing{i}", "attributes": []}], "relationships": []}}))
        lines.append(json.dumps({"model_id": "toy", "fragment_id": f"r{i}", "kind": "relationship",
                                 "english": f"item{i} has parts",
                                 "uml": {"classes": [{"name": f"Item{i}"}, {"name": "Part"}],
                                         "relationships": [{"source": f"Item{i}", "target": "Part", "name": "part"}]}}))
    data = write(tmp_path, "toy.jsonl", "\n".join(lines) + "\n")
    assert main(["train", "--dataset", data, "--model", str(tmp_path / "m.json")]) == EXIT_OK
    assert "held-out accuracy 1.000" in capsys.readouterr().out


def test_train_reports_dataset_errors(tmp_path, capsys):
    assert main(["train", "--dataset", write(tmp_path, "d.jsonl", "{}\n"), "--model", str(tmp_path / "m")]) == EXIT_FAIL
    assert "d.jsonl:1" in capsys.readouterr().err


def test_classify(model, tmp_path, capsys):
    assert main(["classify", write(tmp_path, "s.txt", "Workflow State class. A node is composed of a label."),
                 "--model", model]) == EXIT_OK
    rows = [ln.split("\t") for ln in capsys.readouterr().out.splitlines()]
    assert [r[1] for r in rows] == ["Workflow State class.", "A node is composed of a label."]
    assert all(r[0] in ("class", "relationship") for r in rows)


def test_compose(tmp_path, capsys):
    frags = [Fragment.of_class(UmlClass("News", (UmlAttribute("title"), UmlAttribute("publisher")))),
             Fragment.of_class(UmlClass("Publisher", (UmlAttribute("name"),)))]
    path = write(tmp_path, "f.jsonl", "".join(json.dumps(fragment_to_json(f)) + "\n" for f in frags))
    assert main(["compose", path]) == EXIT_OK
    assert 'News --> "0..*" Publisher : publisher' in capsys.readouterr().out


def test_compose_bad_line(tmp_path, capsys):
    assert main(["compose", write(tmp_path, "f.jsonl", "{\"kind\": \"class\"}\n")]) == EXIT_FAIL
    assert "f.jsonl:1" in capsys.readouterr().err


def test_missing_fixture_file(model, tmp_path, capsys):
    code = main(["generate", write(tmp_path, "s.txt", "There is a place."), "--model", model,
                 "--fixtures", str(tmp_path / "none.jsonl")])
    assert code == EXIT_FAIL


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "nl2uml.cli", "compose", write(tmp_path, "e.jsonl", "")],
                       capture_output=True, text=True)
    assert r.returncode == EXIT_FAIL
    assert "empty" in r.stderr
