import json
from pathlib import Path

import jsonschema
import pytest

from edskit.cli import main
from edskit.report import report_digest

from conftest import fixture_path

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "report_schema.json").read_text())
STAMP = "2026-01-01T00:00:00+00:00"


def run(capsys, *argv):
    code = main(list(argv) + ["--json", "--timestamp", STAMP])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


@pytest.mark.parametrize("command,name,code", [
    ("check", "liouville", 0),
    ("check", "wave", 0),
    ("check", "sine_gordon", 1),
    ("invariants", "liouville", 0),
    ("symmetries", "wave", 0),
    ("symmetries", "liouville", 2),
    ("reciprocal", "affine1", 0),
    ("prolong", "wave", 0),
])
def test_exit_codes_and_schema(capsys, command, name, code):
    got, report = run(capsys, command, fixture_path(name))
    assert got == code
    jsonschema.validate(report, SCHEMA)
    assert report["digest"] == report_digest(report)


def test_check_report_content(capsys):
    _, report = run(capsys, "check", fixture_path("liouville"))
    assert report["class"] == [3, 2, 2]
    assert report["count_invariants"] == {"F": 2, "G": 2}
    assert report["darboux"]["status"] == "ok"


def test_symmetries_report_for_wave(capsys):
    _, report = run(capsys, "symmetries", fixture_path("wave"))
    assert report["fingerprint"]["dim"] == 1 and report["fingerprint"]["abelian"]
    assert report["derived"]["F"]["system_symmetries"] == ["d/dz"]


def test_reports_are_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        main(["check", fixture_path("liouville"), "--out", str(out), "--timestamp", STAMP])
    assert a.read_bytes() == b.read_bytes()


def test_digest_ignores_timestamp(capsys):
    _, r1 = run(capsys, "check", fixture_path("wave"))
    main(["check", fixture_path("wave"), "--json"])
    r2 = json.loads(capsys.readouterr().out)
    assert r1["digest"] == r2["digest"]


def test_lift_writes_csv(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, report = run(capsys, "lift", fixture_path("liouville"), "--gamma1", "u,u", "--gamma2", "v,v",
                       "--grid", "21x21", "--out", str(out))
    assert code == 0
    assert report["residual"]["max_residual"] < 1e-6
    assert out.exists() and Path(str(out) + ".json").exists()


def test_prolong_emits_a_loadable_spec(capsys, tmp_path):
    target = tmp_path / "p.eds"
    code, _ = run(capsys, "prolong", fixture_path("wave"), "--emit-spec", str(target))
    assert code == 0
    code, report = run(capsys, "check", str(target))
    assert code == 0 and report["class"] == [3, 2, 2]


def test_undeclared_symbol_is_a_usage_error(capsys, tmp_path):
    bad = tmp_path / "bad.eds"
    bad.write_text("eds-spec 1\ncoordinates: x y\nF: d/dx + w*d/dy\nG: d/dy\n")
    assert main(["check", str(bad)]) == 3
    assert "bad.eds:3:11" in capsys.readouterr().err


def test_missing_argument_is_a_usage_error(capsys):
    assert main(["check"]) == 3


def test_missing_file_section_is_a_usage_error(capsys):
    assert main(["lift", fixture_path("wave")]) == 3


def test_summary_without_json(capsys):
    assert main(["check", fixture_path("sine_gordon")]) == 1
    out = capsys.readouterr().out
    assert out.startswith("check: fail")
