import json

import numpy as np
import pytest

from ddurobust import cases, cli
from ddurobust.model import problem_to_dict


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


@pytest.fixture
def heptagon_file(tmp_path):
    path = tmp_path / "heptagon.json"
    cli.save_problem(cases.heptagon_case(), path)
    return path


@pytest.mark.parametrize("case", [8, 9, 10, 11, 12, 13])
def test_repro_cases_pass(capsys, tmp_path, case):
    code, cap = run(capsys, "repro", case, "--out", tmp_path)
    assert code == cli.EXIT_OK, cap.out
    summary = json.loads((tmp_path / f"repro_{case}" / "summary.json").read_text())
    assert summary["ok"] and summary["checks"]
    assert "FAIL" not in cap.out


def test_repro_11_intervals_on_disk(capsys, tmp_path):
    run(capsys, "repro", 11, "--out", tmp_path)
    got = json.loads((tmp_path / "repro_11" / "intervals.json").read_text())
    ends = np.array(got["intervals"], dtype=float)
    assert ends == pytest.approx(np.array([[0.8, 1.0], [2.0, 2.2]]), abs=1e-6)


def test_save_load_round_trip_is_bit_identical(tmp_path):
    for build in (cases.heptagon_case, cases.translated_union_case, cases.widening_window_case):
        p = build()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        cli.save_problem(p, a)
        cli.save_problem(cli.load_problem(a), b)
        assert a.read_bytes() == b.read_bytes()
        assert problem_to_dict(cli.load_problem(b)) == problem_to_dict(p)


def test_solve_widening_window_with_ccg_flags_audit(capsys, tmp_path):
    src = tmp_path / "case.json"
    assert run(capsys, "export", 13, src)[0] == cli.EXIT_OK
    out = tmp_path / "out"
    code, cap = run(capsys, "solve", src, "--algo", "ccg", "--out", out)
    assert code == cli.EXIT_MISMATCH
    summary = json.loads((out / "summary.json").read_text())
    assert summary["objective"] == pytest.approx(0.5, abs=1e-6)
    assert {"status", "x", "objective", "iterations"} <= set(summary)
    lines = (out / "trace.jsonl").read_text().splitlines()
    assert any(json.loads(line).get("audit", {}).get("suboptimal") for line in lines)


def test_solve_enhanced_benders_on_widening_window(capsys, tmp_path):
    src = tmp_path / "case.json"
    run(capsys, "export", "widening-window", src)
    code, _ = run(capsys, "solve", src, "--algo", "e-benders", "--out", tmp_path / "o")
    assert code == cli.EXIT_OK
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["objective"] == pytest.approx(0.1, abs=1e-6)


def test_incompatible_algo_is_usage_error(capsys, tmp_path, heptagon_file):
    code, cap = run(capsys, "solve", heptagon_file, "--algo", "e-ccg", "--out", tmp_path)
    assert code == cli.EXIT_USAGE
    assert "e-ccg" in cap.err or "separable" in cap.err.lower()


def test_malformed_file_reports_line(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "format": 1,\n  "A": [1, 2\n}\n')
    code, cap = run(capsys, "solve", bad, "--algo", "ccg", "--out", tmp_path)
    assert code == cli.EXIT_USAGE
    assert "line" in cap.err


def test_missing_field_is_parse_error(capsys, tmp_path, heptagon_file):
    doc = json.loads(heptagon_file.read_text())
    doc.pop("B")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, _ = run(capsys, "solve", bad, "--algo", "ccg", "--out", tmp_path)
    assert code == cli.EXIT_USAGE


def test_region_verdicts(capsys, tmp_path, heptagon_file):
    code, cap = run(capsys, "region", heptagon_file, "--at-x", "1,1", "--no-alpha", "--out", tmp_path / "w")
    assert code == cli.EXIT_OK and "verdict: Unmatched" in cap.out
    info = json.loads((tmp_path / "w" / "region.json").read_text())
    assert info["matched"] is False and info["witness"] is not None
    assert (tmp_path / "w" / "U.csv").read_text().startswith("dim_0,dim_1\n")

    narrow = tmp_path / "narrow.json"
    run(capsys, "export", "heptagon-narrow", narrow)
    code, cap = run(capsys, "region", narrow, "--at-x", "1,1", "--alpha", "0", "--out", tmp_path / "n")
    assert code == cli.EXIT_OK and "verdict: Matched" in cap.out
    assert (tmp_path / "n" / "Dext.csv").exists()


def test_region_separable_dumps_xi(capsys, tmp_path):
    src = tmp_path / "tu.json"
    run(capsys, "export", "translated-union", src)
    code, _ = run(capsys, "region", src, "--at-x", "1,1", "--no-alpha", "--out", tmp_path / "r")
    assert code == cli.EXIT_OK
    for name in ("Xi.csv", "aux_region.csv", "aux_region_rows.csv", "D.csv", "D_rows.csv"):
        assert (tmp_path / "r" / name).exists()


def test_region_outside_x_is_usage_error(capsys, tmp_path, heptagon_file):
    code, cap = run(capsys, "region", heptagon_file, "--at-x", "9,9", "--no-alpha", "--out", tmp_path)
    assert code == cli.EXIT_USAGE and "outside" in cap.err


def test_rfr_writes_intervals_and_membership(capsys, tmp_path):
    src = tmp_path / "bowtie.json"
    run(capsys, "export", "bowtie", src)
    code, cap = run(capsys, "rfr", src, "--range", "0:2.5", "--step", "0.1", "--out", tmp_path / "s")
    assert code == cli.EXIT_OK
    got = json.loads((tmp_path / "s" / "intervals.json").read_text())
    assert np.array(got["intervals"]) == pytest.approx(np.array([[0.8, 1.0], [2.0, 2.2]]), abs=1e-6)
    rows = (tmp_path / "s" / "membership.csv").read_text().splitlines()
    assert rows[0] == "x,member" and len(rows) == 27


@pytest.mark.parametrize("args", [["rfr", "{f}", "--range", "2:1"], ["rfr", "{f}", "--range", "x"],
                                  ["rfr", "{f}", "--range", "0:1", "--step", "0"],
                                  ["solve", "{f}", "--algo", "magic"], ["repro", "7"]])
def test_bad_flags_exit_2(capsys, tmp_path, heptagon_file, args):
    argv = [a.format(f=heptagon_file) for a in args] + ["--out", str(tmp_path)]
    assert run(capsys, *argv)[0] == cli.EXIT_USAGE


def test_env_var_overrides_out(capsys, tmp_path, monkeypatch, heptagon_file):
    monkeypatch.setenv("DDUROBUST_OUT", str(tmp_path / "env"))
    code, _ = run(capsys, "solve", heptagon_file, "--algo", "benders", "--out", tmp_path / "flag")
    assert code in (cli.EXIT_OK, cli.EXIT_MISMATCH)
    assert (tmp_path / "env" / "summary.json").exists()
    assert not (tmp_path / "flag").exists()


def _tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.parametrize("argv", [["repro", "12"], ["solve", "{f}", "--algo", "ccg"],
                                  ["region", "{f}", "--at-x", "1,1", "--alpha", "0"]])
def test_commands_are_byte_deterministic(capsys, tmp_path, heptagon_file, argv):
    trees = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        run(capsys, *[a.format(f=heptagon_file) for a in argv], "--out", out)
        trees.append(_tree_bytes(out))
    assert trees[0] and trees[0] == trees[1]


@pytest.mark.parametrize("app", ["wind", "demand-response", "vpp"])
def test_export_app_fixture_round_trips(capsys, tmp_path, app):
    dest = tmp_path / f"{app}.json"
    assert run(capsys, "export", app, dest)[0] == cli.EXIT_OK
    doc = json.loads(dest.read_text())
    assert doc["app"]["kind"] == app
    p = cli.load_problem(dest)
    assert p.n_x > 0


def test_unknown_export_target(capsys, tmp_path):
    assert run(capsys, "export", "nope", tmp_path / "x.json")[0] == cli.EXIT_USAGE
