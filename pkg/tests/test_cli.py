import json
import subprocess
import sys
from fractions import Fraction

import pytest

from cfaudit.cli import main
from cfaudit.inference import Distribution
from cfaudit.invariance import Partition


@pytest.fixture
def linear_path(data_dir):
    return str(data_dir / "linear.scm.json")


@pytest.fixture
def review_path(data_dir):
    return str(data_dir / "review.scm.json")


def test_validate_ok(linear_path, capsys):
    assert main(["validate", linear_path]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_bad_prior(tmp_path, linear_path, capsys):
    doc = json.loads(open(linear_path).read())
    doc["priors"]["Z"]["1"] = "2/5"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", str(path)]) == 2
    assert "prior mass ≠ 1" in capsys.readouterr().err


def test_validate_truncated(tmp_path, linear_path, capsys):
    path = tmp_path / "cut.json"
    path.write_text(open(linear_path).read()[:200])
    assert main(["validate", str(path)]) == 3
    assert "line" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 3


def test_counterfactual(linear_path, capsys):
    assert main(["counterfactual", linear_path, "--target", "X", "--do", "Z=1", "--evidence", "X=1"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "1: 1/3, 3: 2/3"
    assert main(["counterfactual", linear_path, "--target", "X", "--do", "Z=1", "--evidence", "X=1", "--guess-context", "Z"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "3: 1"


def test_counterfactual_errors(linear_path, capsys):
    assert main(["counterfactual", linear_path, "--target", "X", "--do", "Z=1", "--evidence", "X=5"]) == 4
    assert main(["counterfactual", linear_path, "--target", "X", "--do", "Z=1", "--evidence", "X=3", "--evidence", "Z=-1"]) == 4
    assert main(["counterfactual", linear_path, "--target", "X", "--evidence", "X=1"]) == 1
    with pytest.raises(SystemExit) as info:
        main(["counterfactual", linear_path, "--target", "X", "--do", "Z1"])
    assert info.value.code == 1


def test_counterfactual_json_roundtrip(linear_path, capsys):
    assert main(["counterfactual", linear_path, "--target", "X", "--do", "Z=-1", "--evidence", "X=1", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    dist = Distribution.from_doc(doc["distribution"])
    assert dist.nonzero() == {"-1": Fraction(1, 3), "1": Fraction(2, 3)}
    assert str(dist) == "-1: 1/3, 1: 2/3"
    assert Distribution.from_doc(dist.to_doc()) == dist


def test_audit(linear_path, review_path, data_dir, capsys):
    assert main(["audit", linear_path, "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"] == "cda_strictly_finer"
    assert Partition.from_doc(doc["cda_partition"]).classes == (("-3", "-1"), ("1", "3"))
    assert doc == json.loads((data_dir / "golden" / "linear_audit.json").read_text())
    assert main(["audit", review_path, "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out) == json.loads((data_dir / "golden" / "review_audit.json").read_text())


def test_audit_independent_model(tmp_path, capsys):
    doc = {
        "variables": [
            {"name": "Z", "kind": "exogenous", "domain": ["a", "b"]},
            {"name": "U", "kind": "exogenous", "domain": ["0", "1"]},
            {"name": "X", "kind": "endogenous", "domain": ["p", "q"]},
        ],
        "priors": {"Z": {"a": "1/2", "b": "1/2"}, "U": {"0": "0.3", "1": "0.7"}},
        "equations": [{"child": "X", "parents": ["U"], "table": [{"given": ["0"], "value": "p"}, {"given": ["1"], "value": "q"}]}],
    }
    path = tmp_path / "indep.json"
    path.write_text(json.dumps(doc))
    assert main(["audit", str(path)]) == 0
    out = capsys.readouterr().out
    assert "verdict:        equal" in out
    assert "{p} {q}" in out


def _augment(review_path, tmp_path, *extra):
    data = tmp_path / "one.jsonl"
    data.write_text('{"x": "good_1|positive", "y": "helpful", "weight": 1}\n')
    out = tmp_path / "out.jsonl"
    code = main(["augment", review_path, str(data), "--output", str(out), *extra])
    records = [json.loads(line) for line in out.read_text().splitlines()] if code == 0 else None
    return code, records


def test_augment_modes(review_path, tmp_path):
    code, guess = _augment(review_path, tmp_path, "--mode", "guess")
    assert code == 0 and len(guess) == 2
    assert {r["x"] for r in guess} == {"good_1|positive", "good_1|negative"}
    assert all(r["y"] == "helpful" and r["context_used"] == "like" for r in guess)
    code, full = _augment(review_path, tmp_path, "--mode", "full")
    # one record per (intervention, x'); the observed tone recurs under both contexts
    assert code == 0 and len(full) == 4
    assert {r["x"] for r in full} == {"good_1|positive", "good_1|negative", "good_1|neutral"}
    code, post = _augment(review_path, tmp_path, "--mode", "posterior", "--tau", "0")
    assert {r["x"] for r in post} == {r["x"] for r in full}
    code, half = _augment(review_path, tmp_path, "--mode", "posterior", "--tau", "1/2")
    assert {r["x"] for r in half} == {r["x"] for r in guess}
    code, sampled = _augment(review_path, tmp_path, "--mode", "full", "--k", "4", "--seed", "3")
    assert code == 0 and len(sampled) == 8


def test_augment_outside_support(review_path, tmp_path, capsys):
    data = tmp_path / "bad.jsonl"
    data.write_text('{"x": "good_1|positive", "y": "helpful"}\n{"x": "nonsense", "y": "helpful"}\n')
    code = main(["augment", review_path, str(data), "--mode", "guess", "--output", str(tmp_path / "o")])
    assert code == 4
    assert "example 1" in capsys.readouterr().err


def test_demo_appendix(capsys):
    assert main(["demo", "appendix"]) == 0
    assert "verdict: cda_strictly_finer" in capsys.readouterr().out


def test_demo_review(capsys):
    assert main(["demo", "review", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["variants"]["rare_context_absent"]["gap"] == "9/20"


def test_demo_review_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["demo", "review", "--train-n", "0"])
    assert info.value.code == 1


def test_module_entry_point(linear_path):
    proc = subprocess.run([sys.executable, "-m", "cfaudit", "validate", linear_path], capture_output=True, text=True)
    assert proc.returncode == 0
