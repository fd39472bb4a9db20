"""Problem-file parsing, report emission, and CLI exit-code tests."""

import json

import pytest

from dieudonne.cli import corpus_names, load_corpus, main
from dieudonne.errors import ParseError
from dieudonne.problems import (emit, emit_spec, parse_dict, parse_file,
                                run)


MINIMAL = {
    "name": "tiny",
    "p": 2,
    "rank": 2,
    "phi_matrix": [[1, 0], [0, 2]],
    "precision": 24,
}


def test_parse_minimal():
    spec = parse_dict(dict(MINIMAL))
    assert spec.p == 2 and spec.n == 1
    assert spec.precision == 24
    assert spec.degree == 3  # default 2(p-1)+1


def test_parse_rejects_nonsquare_matrix():
    doc = dict(MINIMAL)
    doc["phi_matrix"] = [[1, 0, 0], [0, 2, 0]]
    with pytest.raises(ParseError) as err:
        parse_dict(doc)
    assert "phi_matrix" in str(err.value)


def test_parse_rejects_unknown_field():
    doc = dict(MINIMAL)
    doc["bogus"] = 1
    with pytest.raises(ParseError) as err:
        parse_dict(doc)
    assert "bogus" in str(err.value)


def test_parse_rejects_bad_fraction():
    doc = dict(MINIMAL)
    doc["slope_pairs"] = [["0", "one"]]
    with pytest.raises(ParseError):
        parse_dict(doc)


def test_roundtrip_canonical_form(tmp_path):
    for name in corpus_names():
        spec = load_corpus(name)
        blob = emit_spec(spec)
        path = tmp_path / f"{name}.json"
        path.write_bytes(blob)
        spec2 = parse_file(str(path))
        assert spec2 == spec
        assert emit_spec(spec2) == blob


def test_corpus_has_required_entries():
    names = corpus_names()
    for needed in ("ordinary_rank2", "supersingular_rank2", "example_1_7",
                   "three_slope_rank4", "four_slope_rank8",
                   "symplectic_ordinary_c2"):
        assert needed in names


def test_report_deterministic():
    spec = load_corpus("ordinary_rank2")
    r1 = run(spec, ["slopes", "traverso"], seed=3)
    r2 = run(spec, ["slopes", "traverso"], seed=3)
    assert emit(r1, "structured") == emit(r2, "structured")
    assert emit(r1, "text") == emit(r2, "text")


def test_report_example_1_7_goldens():
    spec = load_corpus("example_1_7")
    report = run(spec, ["slopes", "ominus", "axioms", "traverso"])
    assert report["all_ok"]
    an = report["analyses"]
    assert an["slopes"]["slopes"] == [["1/3", 3], ["2/3", 3]]
    assert an["ominus"]["O_minus_rank"] == 9
    assert an["ominus"]["E_rank"] == 6
    assert an["axioms"]["ranks"]["F0(E)"] == 4
    assert an["axioms"]["axiom_i"] and an["axioms"]["axiom_ii"]
    assert an["axioms"]["axiom_iii"] and an["axioms"]["axiom_iv"]
    assert an["traverso"]["tangent_dimension"] == 3


def test_cli_exit_codes(tmp_path, capsys):
    # pass
    assert main(["slopes", "--corpus", "ordinary_rank2"]) == 0
    capsys.readouterr()
    # input errors
    assert main(["slopes", "--corpus", "no_such_entry"]) == 2
    capsys.readouterr()
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["slopes", str(bad)]) == 2
    capsys.readouterr()
    nonsquare = tmp_path / "nonsquare.json"
    nonsquare.write_text(json.dumps({
        "p": 2, "rank": 2, "phi_matrix": [[1, 0, 0], [0, 2, 0]],
    }), encoding="utf-8")
    assert main(["slopes", str(nonsquare)]) == 2
    capsys.readouterr()


def test_cli_emit_spec(capsys):
    assert main(["emit-spec", "--corpus", "ordinary_rank2"]) == 0
    out = capsys.readouterr().out
    doc = json.loads(out)
    assert doc["name"] == "ordinary_rank2"
    assert doc["phi_matrix"] == [[1, 0], [0, 2]]


def test_cli_structured_format(capsys):
    code = main(["traverso", "--corpus", "ordinary_rank2",
                 "--format", "structured"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["analyses"]["traverso"]["tangent_dimension"] == 1


def test_cli_verification_failure_exit_code(tmp_path, capsys):
    # a three-slope module whose full negative lattice is not square-zero:
    # requesting the connection without a square-zero pair set must fail
    # with exit code 1 (certificate failure, not an input error)
    doc = {
        "p": 5, "rank": 4, "precision": 30, "degree": 9,
        "phi_matrix": [[1, 0, 0, 0], [0, 0, 5, 0], [0, 1, 0, 0],
                       [0, 0, 0, 5]],
        "hodge_f1": [2, 3],
    }
    path = tmp_path / "threeslope.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert main(["connection", str(path)]) == 1
    capsys.readouterr()


def test_precision_override(capsys):
    code = main(["slopes", "--corpus", "ordinary_rank2",
                 "--precision", "20", "--format", "structured"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["parameters"]["precision"] == 20


def test_golden_structured_reports():
    # byte-identical structured output against checked-in golden files
    import pathlib
    golden_dir = pathlib.Path(__file__).parent / "golden"

    spec = load_corpus("ordinary_rank2")
    report = run(spec, ["traverso"])
    want = (golden_dir / "ordinary_rank2_traverso.json").read_bytes()
    assert emit(report, "structured") == want

    from dieudonne.problems import ANALYSES
    spec7 = load_corpus("example_1_7")
    report7 = run(spec7, ANALYSES)
    want7 = (golden_dir / "example_1_7_report.json").read_bytes()
    assert emit(report7, "structured") == want7
