import csv
import io
import json

import pytest

from opspace import cli
from opspace.cli import ExperimentConfig, main, render, run_suite, suite_seed

FAST = ["--max-n", "3", "--restarts", "1", "--iters", "10", "--trials", "2"]


def run_cli(capsys, *args):
    code = main(["run", *args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_growth_csv_header_and_rows(capsys):
    code, out, _ = run_cli(capsys, "--suite", "growth", "--format", "csv", *FAST)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "estimate", "expected", "max_sampled"]
    assert [int(r[0]) for r in rows[1:]] == [1, 2, 3]
    for n, est, expected, sampled in rows[1:]:
        assert abs(float(est) - float(expected)) <= 1e-9
        assert float(sampled) <= float(expected) + 1e-9


def test_multi_section_csv_marks_sections(capsys):
    code, out, _ = run_cli(capsys, "--suite", "all", "--format", "csv", *FAST)
    assert code == 0
    names = [line[2:] for line in out.splitlines() if line.startswith("# ")]
    assert names == list(cli.SUITES)


def test_invalid_suite_exits_nonzero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--suite", "nonsense"])
    assert exc.value.code != 0
    assert "nonsense" in capsys.readouterr().err


@pytest.mark.parametrize("flag", ["--restarts", "--trials", "--jobs", "--max-n", "--iters"])
def test_nonpositive_counts_rejected(capsys, flag):
    with pytest.raises(SystemExit) as exc:
        main(["run", flag, "0"])
    assert exc.value.code == 2


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(fmt="xml")
    with pytest.raises(ValueError):
        ExperimentConfig(suite="bogus")
    assert ExperimentConfig().suites == cli.SUITES
    assert ExperimentConfig(suite="chain").suites == ("chain",)


def test_env_seed_overrides_flag(capsys, monkeypatch):
    monkeypatch.setenv("OPSPACE_SEED", "7")
    code, out, _ = run_cli(capsys, "--suite", "growth", "--seed", "99", *FAST)
    assert code == 0
    assert json.loads(out)["config"]["seed"] == 7
    monkeypatch.setenv("OPSPACE_SEED", "seven")
    with pytest.raises(SystemExit):
        main(["run", "--suite", "growth"])


def test_json_report_is_deterministic_apart_from_timestamp():
    cfg = ExperimentConfig(suite="merges", seed=3, trials=2)
    a, b = run_suite(cfg), run_suite(cfg)
    for r in (a, b):
        r.pop("timestamp")
    assert a == b
    assert render(a, "json") == render(b, "json")


def test_suite_seeds_are_independent():
    seeds = {suite_seed(5, s) for s in cli.SUITES}
    assert len(seeds) == len(cli.SUITES)
    assert suite_seed(5, "chain") != suite_seed(6, "chain")


def test_parallel_matches_serial():
    base = dict(suite="all", seed=1, max_n=2, restarts=1, iterations=5, trials=1)
    serial = run_suite(ExperimentConfig(**base))
    parallel = run_suite(ExperimentConfig(**base, jobs=2))
    assert serial["sections"] == parallel["sections"]


def test_text_format(capsys):
    code, out, _ = run_cli(capsys, "--suite", "counterexamples", "--format", "text", *FAST)
    assert code == 0
    assert out.startswith("== counterexamples [PASS]")
    assert out.rstrip().endswith("overall: PASS")


def test_out_file_and_io_error(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "--suite", "axioms", "--out", str(target), *FAST)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["sections"][0]["name"] == "axioms"
    bad = tmp_path / "missing" / "report.json"
    code, _, err = run_cli(capsys, "--suite", "axioms", "--out", str(bad), *FAST)
    assert code == 3
    assert "cannot write report" in err


def test_failing_section_sets_exit_code(capsys, monkeypatch):
    def broken(cfg, seed):
        return {"name": "growth", "ok": False, "columns": ["n"], "rows": [{"n": 1}],
                "failures": ["n=1: estimate 0.5 far from expected 1"]}

    monkeypatch.setitem(cli.RUNNERS, "growth", broken)
    code, out, err = run_cli(capsys, "--suite", "growth", *FAST)
    assert code == 1
    assert "FAIL growth: n=1" in err
    assert json.loads(out)["ok"] is False
