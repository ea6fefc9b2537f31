import json
import subprocess
import sys

import pytest

from affine_killing.catalog import instantiate
from affine_killing.cli import main
from affine_killing.connection import ChristoffelSpec, KEYS, torsion
from affine_killing.liealg import standard_tables


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def flat_file(tmp_path):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps(ChristoffelSpec.zero().to_json()))
    return str(path)


def test_dimension_of_flat(capsys, flat_file):
    assert run(capsys, "killing-dim", "--spec", flat_file) == (0, {"dimension": 6})


def test_torsion_constant_parts(capsys):
    assert run(capsys, "torsion", "--id", "A.M6.0", "--T", "1,2") == (0, {"T1": "1", "T2": "2"})


def test_torsion_inverse_x1_parts(capsys):
    code, doc = run(capsys, "torsion", "--id", "X.IIB", "--T", "0,3")
    assert code == 0
    assert doc == {"T1": "0", "T2": "0", "T1_over_x1": "0", "T2_over_x1": "3"}


def test_classify_structure_file(capsys, tmp_path):
    path = tmp_path / "so21.json"
    path.write_text(json.dumps(standard_tables()["so21"].to_json()))
    code, doc = run(capsys, "classify", "--algebra", str(path))
    assert code == 0
    assert doc["tag"] == "so21" and doc["signature"] == [2, 1] and doc["derived_dim"] == 3


def test_classify_catalog_spec(capsys):
    code, doc = run(capsys, "classify", "--id", "A.M4.5", "--param", "c=2")
    assert code == 0 and doc["tag"] == "A412" and doc["delta"] == "-4"


def test_killing_basis_output(capsys):
    code, doc = run(capsys, "killing-basis", "--id", "X.IIB", "--T", "0,1")
    assert code == 0
    assert doc["dimension"] == 3 and doc["complete"] and len(doc["fields"]) == 3
    assert all(len(f) == 2 and all(isinstance(c, str) for c in f) for f in doc["fields"])


def test_curvature_output(capsys):
    code, doc = run(capsys, "curvature", "--id", "B.N3.4", "--point", "1,0")
    assert code == 0 and not doc["flat"]
    assert doc["curvature"]["1212"] == "-1" and doc["curvature"]["2112"] == "1"
    assert set(doc["christoffel"]) == set(KEYS)


def test_symmetrize_and_perturb_round_trip(capsys, tmp_path):
    code, sym = run(capsys, "symmetrize", "--id", "B.N6.2", "--param", "c=3", "--T", "0,5")
    assert code == 0
    s0 = ChristoffelSpec.from_json(sym)
    assert torsion(s0).is_zero()
    path = tmp_path / "s0.json"
    path.write_text(json.dumps(sym))
    code, pert = run(capsys, "perturb", "--spec", str(path), "--torsion-over-x1", "0,5")
    assert code == 0
    s = ChristoffelSpec.from_json(pert)
    assert s == instantiate("B.N6.2", {"c": 3}, (0, 5)).spec
    assert all(isinstance(v, str) for pair in pert["entries"].values() for v in pair)


def test_catalog_list(capsys):
    code, doc = run(capsys, "catalog-list")
    assert code == 0 and len(doc["entries"]) == 27


def test_catalog_check_subset(capsys):
    code, doc = run(capsys, "catalog-check", "A.M6.5", "B.N3.3")
    assert code == 0 and doc["ok"]
    assert [e["id"] for e in doc["entries"]] == ["A.M6.5", "B.N3.3"]


def test_catalog_check_failure_exit(capsys, tmp_path):
    bad = {"torsion_pool": [["0", "0"]], "entries": [{
        "id": "Z.bad", "kind": "A", "label": "wrong claim",
        "xi": ["0", "0", "0", "0", "0", "0", "0", "0"], "constraint": "true",
        "branches": [{"when": "true", "tag": "A6", "basis": [["1", "0"], ["0", "1"]]}],
    }]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    code, doc = run(capsys, "--catalog", str(path), "catalog-check")
    assert code == 1 and not doc["ok"]


@pytest.mark.parametrize("argv", [
    ["killing-dim"],
    ["killing-dim", "--id", "NOPE"],
    ["killing-dim", "--id", "A.M4.2", "--param", "c=-1"],
    ["classify", "--table", "nope"],
    ["torsion", "--spec", "/does/not/exist.json"],
])
def test_malformed_input_exits_2(capsys, argv):
    assert main(argv) == 2


def test_bad_argument_syntax_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["torsion", "--id", "A.M6.0", "--T", "1"])
    assert info.value.code == 2


def test_domain_error_exits_3(capsys):
    assert main(["curvature", "--id", "B.N3.4", "--point", "0,1"]) == 3
    assert main(["--base-point=-1,0", "killing-dim", "--id", "B.N3.4"]) == 3


def test_output_file(capsys, tmp_path):
    out = tmp_path / "o.json"
    assert main(["-o", str(out), "killing-dim", "--id", "A.M6.5"]) == 0
    assert json.loads(out.read_text()) == {"dimension": 6}
    assert capsys.readouterr().out == ""


def test_deterministic_bytes():
    cmd = [sys.executable, "-m", "affine_killing.cli", "killing-basis", "--id", "B.N6.2", "--param", "c=-1/2",
           "--T", "1,0"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["dimension"] == 3
