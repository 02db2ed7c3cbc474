import csv
import subprocess
import sys

import pytest

from echolearn.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main

CONFIG = """\
[experiment]
protocol = gp
max_iterations = 8
num_trials = 10
eval_words = 500
final_max_bits = 2000
final_min_errors = 5
num_checkpoints = 4

[agent1]
preset = neural-fast

[agent2]
preset = neural-fast
stepsize_cross_entropy = 0.01
"""


@pytest.fixture(scope="module")
def results(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "exp.cfg").write_text(CONFIG)
    assert main(["run", "--config", str(root / "exp.cfg"), "--out", str(root / "results"), "--save-models"]) == EXIT_OK
    return root


def _rows(path):
    return list(csv.reader(l for l in open(path) if not l.startswith("#")))


def test_run_writes_files(results):
    out = results / "results"
    for name in ("records.csv", "summary.csv", "convergence.csv", "config.ini"):
        assert (out / name).exists()
    assert len(list((out / "models").iterdir())) == 20
    header = _rows(out / "records.csv")[0]
    assert header == ["trial", "stage", "iteration", "symbols", "snr_db", "n_bits", "n_errors", "ber", "db_off"]


def test_plot_data_ber_curve(results, capsys):
    assert main(["plot-data", "--results", str(results / "results"), "--kind", "ber-curve"]) == EXIT_OK
    rows = _rows(results / "results" / "ber_curve.csv")
    assert rows[0] == ["snr_db", "p10", "p50", "p90"]
    assert len(rows) == 6
    for _, a, b, c in rows[1:]:
        assert float(a) <= float(b) <= float(c)


def test_plot_data_convergence(results, tmp_path):
    assert main(["plot-data", "--results", str(results / "results"), "--kind", "convergence", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "results" / "convergence_curve.csv")
    assert rows[0] == ["symbols", "fraction"]


def test_summarize(results, capsys):
    assert main(["summarize", "--results", str(results)]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("experiment,protocol")
    assert out[1].startswith("results,gp,")


def test_flag_overrides(tmp_path):
    assert main(["run", "--protocol", "lp", "--agents", "neural-fast,classic", "--trials", "1", "--iterations", "3",
                 "--seed", "4", "--out", str(tmp_path)]) == EXIT_OK
    text = (tmp_path / "config.ini").read_text()
    assert "protocol = lp" in text and "base_seed = 4" in text and "preset = classic" in text


def test_baseline_table(capsys):
    assert main(["baseline", "--scheme", "qpsk", "--snr-grid", "targets"]) == EXIT_OK
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["scheme", "snr_db", "ber", "target_ber", "rel_err"]
    assert [r[1] for r in rows[1:]] == ["4.2", "8.4", "10.4", "12", "13"]
    assert all(r[3] for r in rows[1:])


def test_baseline_custom_grid(capsys):
    assert main(["baseline", "--scheme", "16qam", "--snr-grid", "0:2:1"]) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 4


@pytest.mark.parametrize("argv", [
    ["run", "--protocol", "epp", "--agents", "classic,classic"],
    ["run", "--protocol", "epp", "--agents", "neural-fat,classic"],
    ["run", "--config", "/nonexistent/exp.cfg"],
    ["run"],
    ["baseline", "--scheme", "64qam"],
    ["summarize", "--results", "/nonexistent"],
])
def test_config_errors_exit_1(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] == "run" else argv) == EXIT_CONFIG


def test_unknown_key_exit_1(tmp_path):
    (tmp_path / "bad.cfg").write_text(CONFIG.replace("num_trials = 10", "num_trails = 10"))
    assert main(["run", "--config", str(tmp_path / "bad.cfg"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_selftest_subprocess():
    proc = subprocess.run([sys.executable, "-m", "echolearn", "selftest"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "FAIL" not in proc.stdout


def test_selftest_failure_exits_2(monkeypatch):
    import echolearn.selftest

    monkeypatch.setattr(echolearn.selftest, "run_selftest", lambda verbose=False: False)
    assert main(["selftest"]) == EXIT_FAILED
