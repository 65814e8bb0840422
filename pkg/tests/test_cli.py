import csv
import subprocess
import sys

import pytest

from mmes import cli
from mmes.verify import Check


def read_csv(path):
    lines = path.read_text().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    rows = list(csv.reader(l for l in lines if not l.startswith("#")))
    return comments, rows[0], rows[1:]


def test_run_writes_summary_and_traces(tmp_path):
    rc = cli.main(["run", "--problem", "sphere", "--dim", "8", "--trials", "20", "--out", str(tmp_path)])
    assert rc == 0
    comments, header, rows = read_csv(tmp_path / "summary_sphere_n8.csv")
    assert tuple(header) == cli.SUMMARY_COLUMNS
    assert len(rows) == 21 and rows[-1][0] == "median"
    assert [int(r[0]) for r in rows[:-1]] == list(range(1, 21))
    assert all(r[4] == "TargetReached" for r in rows[:-1])
    assert any(c.startswith("# git_revision=") for c in comments)
    assert any("lam=" in c for c in comments)
    assert len(list(tmp_path.glob("trace_sphere_n8_seed*.csv"))) == 20
    _, th, trows = read_csv(tmp_path / "trace_sphere_n8_seed3.csv")
    assert tuple(th) == cli.TRACE_COLUMNS
    assert [int(r[0]) for r in trows] == list(range(len(trows)))


def test_failed_trial_reports_budget(tmp_path):
    rc = cli.main(["run", "--problem", "rosen:dim=8", "--max-fes", "200", "--out", str(tmp_path)])
    assert rc == 0
    _, _, rows = read_csv(tmp_path / "summary_rosen_dim8_n8.csv")
    assert rows[0][1] == "200" and rows[0][4] == "BudgetExhausted"


def test_outputs_are_byte_identical(tmp_path):
    args = ["run", "--problem", "elli:rot=1", "--dim", "10", "--seeds", "4,9", "--max-fes", "3000"]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--out", str(tmp_path / "b")])
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_parallel_equals_sequential(tmp_path, monkeypatch):
    args = ["run", "--problem", "cigar", "--dim", "8", "--trials", "4"]
    monkeypatch.setenv("MMES_THREADS", "1")
    cli.main(args + ["--out", str(tmp_path / "seq")])
    monkeypatch.setenv("MMES_THREADS", "3")
    monkeypatch.setattr(cli.os, "cpu_count", lambda: 4)
    assert cli.worker_count(4) == 3
    cli.main(args + ["--out", str(tmp_path / "par")])
    for f in (tmp_path / "seq").iterdir():
        assert f.read_bytes() == (tmp_path / "par" / f.name).read_bytes()


def test_worker_count_cap(monkeypatch):
    monkeypatch.setattr(cli.os, "cpu_count", lambda: 8)
    monkeypatch.delenv("MMES_THREADS", raising=False)
    assert cli.worker_count(3) == 3
    monkeypatch.setenv("MMES_THREADS", "2")
    assert cli.worker_count(10) == 2


def test_sweep_l_layout(tmp_path):
    rc = cli.main(["sweep-l", "--problem", "sphere", "--dims", "8,12", "--l-values", "1,4",
                   "--trials", "2", "--out", str(tmp_path)])
    assert rc == 0
    _, header, rows = read_csv(tmp_path / "sweep_l_sphere.csv")
    assert tuple(header) == cli.SWEEP_COLUMNS
    assert [(r[0], r[1]) for r in rows] == [("1", "8"), ("4", "8"), ("1", "12"), ("4", "12")]
    assert all(r[3] == "2" and r[4] == "2" for r in rows)


def test_timing_single_dim_has_no_slope(tmp_path):
    rc = cli.main(["timing", "--dims", "64", "--generations", "5", "--out", str(tmp_path)])
    assert rc == 0
    comments, header, rows = read_csv(tmp_path / "timing.csv")
    assert tuple(header) == cli.TIMING_COLUMNS
    assert len(rows) == 1 and float(rows[0][4]) > 0
    assert not any("loglog_slope" in c for c in comments)


def test_timing_reports_slope(tmp_path):
    cli.main(["timing", "--dims", "32,64", "--generations", "5", "--out", str(tmp_path)])
    comments, _, rows = read_csv(tmp_path / "timing.csv")
    assert len(rows) == 2
    assert any(c.startswith("# loglog_slope=") for c in comments)


def test_loglog_slope():
    assert cli.loglog_slope([1, 10, 100], [2, 20, 200]) == pytest.approx(1.0)


def test_verify_exit_codes(tmp_path, monkeypatch):
    rc = cli.main(["verify", "--l-values", "4", "--samples", "5000", "--out", str(tmp_path)])
    assert rc == 0
    _, header, rows = read_csv(tmp_path / "verify.csv")
    assert tuple(header) == cli.VERIFY_COLUMNS and rows[0][0] == "4"

    def failing(*args, **kwargs):
        return [], [Check("x", False, "forced")]

    monkeypatch.setattr(cli, "run_verification", failing)
    assert cli.main(["verify", "--out", str(tmp_path)]) == 1


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[mmes]\nproblem = discus\ndim = 8\ntrials = 2\nmax-fes = 300\n")
    out = tmp_path / "o"
    assert cli.main(["run", "--config", str(cfg), "--trials", "3", "--out", str(out)]) == 0
    comments, _, rows = read_csv(out / "summary_discus_n8.csv")
    assert len(rows) == 4
    assert "# max_fes=300" in comments


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[mmes]\ncolour = blue\n")
    assert cli.main(["run", "--config", str(cfg), "--dim", "8"]) == 2


def test_parameter_errors_exit_two(tmp_path, capsys):
    assert cli.main(["run", "--problem", "sphere", "--out", str(tmp_path)]) == 2
    assert cli.main(["run", "--problem", "elli:rot=1", "--dim", "8000", "--out", str(tmp_path)]) == 2
    assert "rotation" in capsys.readouterr().err


def test_bad_seed_rejected():
    with pytest.raises(SystemExit):
        cli.main(["run", "--seed", "-3", "--dim", "8"])


def test_fmt_round_trips():
    assert cli.fmt(0.1) == "0.1"
    assert float(cli.fmt(1 / 3)) == 1 / 3
    assert cli.fmt(None) == ""


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "mmes", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
