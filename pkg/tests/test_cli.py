from __future__ import annotations

import json
import re

import jsonschema
import pytest

from conftest import CASES, ROOT
from flexcheck.cli import main

SCHEMA = json.loads((ROOT / "docs" / "report-schema.json").read_text())


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_empty_file_is_coherent(capsys):
    code, out, _ = run(capsys, "check", CASES / "empty.flx")
    assert code == 0 and "coherent" in out


def test_findings_give_exit_one(capsys):
    code, out, _ = run(capsys, "check", CASES / "kill-unflagged.flx")
    assert code == 1
    assert "[error] impossible-permission (defend, no_kill)" in out


def test_missing_file(capsys):
    code, _, err = run(capsys, "check", CASES / "missing.flx")
    assert code == 2 and "error" in err


def test_malformed_input_reports_the_position(capsys, tmp_path):
    bad = tmp_path / "bad.flx"
    bad.write_text("action A\nrule r: O(A &)\n")
    code, _, err = run(capsys, "check", bad)
    assert code == 2
    assert re.search(r"2:\d+", err)


def test_unknown_query(capsys):
    code, _, err = run(capsys, "query", CASES / "library.flx", "nope")
    assert code == 2 and "nope" in err


def test_exhausted_budget(capsys):
    code, out, _ = run(capsys, "check", CASES / "library.flx", "--max-states", 2)
    assert code == 3 and "inconclusive" in out


@pytest.mark.parametrize("name", ["traffic.flx", "kill-unflagged.flx", "library.flx", "empty.flx"])
def test_json_report_validates_and_matches_text(capsys, name):
    code_j, out_j, _ = run(capsys, "check", CASES / name, "--format", "json")
    code_t, out_t, _ = run(capsys, "check", CASES / name)
    data = json.loads(out_j)
    jsonschema.validate(data, SCHEMA)
    assert code_j == code_t
    from_json = {(f["severity"], f["kind"], tuple(f["rules"])) for f in data["findings"]}
    from_text = {
        (m[0], m[1], tuple(m[2].split(", ")) if m[2] else ())
        for m in re.findall(r"^\[(\w+)\] ([\w-]+)(?: \(([^)]*)\))?$", out_t, re.M)
    }
    assert from_json == from_text


def test_figures_are_written(capsys, tmp_path):
    code, _, _ = run(capsys, "check", CASES / "traffic.flx", "--figures", tmp_path)
    assert code == 0
    pngs = sorted(tmp_path.glob("*.png"))
    assert pngs and all(p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n" for p in pngs)


def test_trace_command(capsys):
    code, out, _ = run(capsys, "trace", CASES / "library.flx", "OE(BorrowBook)")
    assert code == 0 and "BorrowBook" in out and "↻ repeats" in out
    code, out, _ = run(capsys, "trace", CASES / "library.flx", "OE(bbc > 2)")
    assert code == 1 and out.startswith("no run satisfies")


def test_trace_by_rule_name_with_legal_runs(capsys):
    code, out, _ = run(capsys, "trace", CASES / "library.flx", "all_returned", "--legal", "--format", "json")
    assert code == 0 and json.loads(out)["witness"]["steps"]


def test_query_command(capsys):
    code, out, _ = run(capsys, "query", CASES / "university.flx", "no_graduate_applies")
    assert code == 1 and "refuted" in out


def test_compile_and_translate(capsys):
    code, out, _ = run(capsys, "compile", CASES / "library.flx", "--emit", "smv")
    assert code == 0 and out.startswith("MODULE main")
    code, out, _ = run(capsys, "translate", CASES / "library.flx")
    assert code == 0
    assert "naive_return: G (BorrowBook=JUST_HAPPENED -> F ReturnBook=JUST_HAPPENED)" in out


def test_translate_describes_permissions(capsys):
    code, out, _ = run(capsys, "translate", CASES / "kill-selfdefense.flx")
    assert code == 0 and "defend: permission, checked as F (Kill=JUST_HAPPENED & self_defense_opened)" in out


def test_bad_arguments_exit_two(capsys):
    with pytest.raises(SystemExit) as info:
        main(["check"])
    assert info.value.code == 2
