import io
import json
import shutil

import pytest

from gpseries.cli import RunConfig, compare_facts, corpus_dir, corpus_entries, main
from gpseries.errors import ValidationError


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return _write


def test_solve_prints_euler_coefficients():
    code, out, _ = run("solve", "--eq", str(corpus_dir() / "euler.eq"), "--depth", "8")
    assert code == 0
    coeffs = json.loads(out)["coefficients"]
    assert [coeffs[str(k)]["re"] for k in range(1, 9)] == ["1", "1", "2", "6", "24", "120", "720", "5040"]


def test_json_flag_and_out_file(tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run("solve", "--eq", str(corpus_dir() / "euler.eq"), "--depth", "4", "--out", str(target))
    assert code == 0 and out == ""
    report = json.loads(target.read_text())
    code, out, _ = run("solve", "--eq", str(corpus_dir() / "euler.eq"), "--depth", "4", "--json")
    assert json.loads(out) == report
    assert "transcript" in report


def test_certify_rotation_example_with_params():
    code, out, _ = run("certify", "--eq", str(corpus_dir() / "q_two_generator_rotation.eq"),
                       "--param", "omega=sqrt2", "--param", "r=0.3+0.2i", "--depth", "8")
    assert code == 0
    facts = json.loads(out)
    assert facts["theorem"] == "6" and facts["verdict"] == "CertifiedConvergent"


def test_check_arith_reports():
    code, out, _ = run("check-arith", "--kind", "bruno", "--omega", "golden", "--depth", "20")
    assert code == 0 and len(json.loads(out)["details"]["partial_sums"]) == 20
    code, out, _ = run("check-arith", "--kind", "siegel", "--omega", "1/5", "--bound", "50")
    assert code == 0 and json.loads(out)["witness"]["k"] == 5


def test_validation_errors_exit_one(write):
    assert run("solve", "--eq", write("bad.eq", "y + * x = 0\n"))[0] == 1
    assert run("solve", "--eq", "/no/such/file.eq")[0] == 1
    assert run("solve", "--eq", write("q.eq", "param q = 1\nsigma(y) - y = x\n"))[0] == 1
    assert run("frobnicate")[0] == 1
    code, _, err = run("solve", "--eq", write("p.eq", "x*delta(y) = y\n"), "--precision", "32")
    assert code == 1 and "precision" in err


def test_computation_errors_exit_two(write):
    code, _, err = run("solve", "--eq", write("res.eq", "delta(y) - y - x = 0\n"), "--depth", "3")
    assert code == 2 and "ResonanceBlocked" in err


def test_corpus_mismatch_exits_three(tmp_path):
    for name in ("euler", "schroeder_q2"):
        for suffix in (".eq", ".expect.json"):
            shutil.copy(corpus_dir() / f"{name}{suffix}", tmp_path / f"{name}{suffix}")
    assert run("corpus", "--dir", str(tmp_path))[0] == 0
    expect = json.loads((tmp_path / "euler.expect.json").read_text())
    expect["expect"]["coefficients"]["5"]["re"] = "25"
    (tmp_path / "euler.expect.json").write_text(json.dumps(expect))
    code, out, _ = run("corpus", "--dir", str(tmp_path))
    assert code == 3 and "MISMATCH" in out


def test_corpus_covers_every_example():
    names = {p.stem for p in corpus_entries()}
    assert len(names) == 11
    for p in corpus_entries():
        assert p.with_suffix(".expect.json").exists()


def test_corpus_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    code_a, out_a, _ = run("corpus", "--out", str(a))
    code_b, out_b, _ = run("corpus", "--out", str(b))
    assert code_a == code_b == 0 and out_a == out_b
    files = sorted(p.name for p in a.iterdir())
    assert len(files) == 11 and files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_compare_facts_and_config():
    facts = {"verdict": "X", "reason": "the diophantine condition fails at m = (1,)"}
    assert compare_facts(facts, {"verdict": "X", "reason_contains": "diophantine"}, 0) == []
    assert compare_facts(facts, {"verdict": "Y"}, 0)
    with pytest.raises(ValidationError):
        RunConfig(depth=0)
