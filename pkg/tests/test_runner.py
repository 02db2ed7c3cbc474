import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from echolearn.evaluation import BerMeasurement, TrainingRecord
from echolearn.presets import ConfigError
from echolearn.protocols import UnsupportedConfiguration
from echolearn.runner import (
    ExperimentConfig,
    ResultSet,
    TrialResult,
    config_from_ini,
    config_to_ini,
    read_results,
    run_experiment,
    summarize,
    write_results,
)


def small(protocol="esp", trials=2, **kw):
    kw.setdefault("max_iterations", 12)
    return ExperimentConfig(protocol, "neural-fast", "poly-fast", num_trials=trials, eval_words=500,
                            final_max_bits=4000, final_min_errors=10, num_checkpoints=5, **kw)


def _fingerprint(res: ResultSet):
    return [
        (t.trial, [(r.iteration, r.symbols, r.db_off, [(m.snr_db, m.n_bits, m.n_errors) for m in r.measurements])
                   for r in t.records], [(m.snr_db, m.n_bits, m.n_errors) for m in t.final])
        for t in res.trials
    ]


def test_defaults_resolve():
    cfg = ExperimentConfig("EPP", "neural-fast", "classic").resolved()
    assert cfg.protocol == "epp"
    assert cfg.train_snr_db == 8.4
    assert cfg.max_iterations == 3000
    assert cfg.test_snr_grid == (13.0, 12.0, 10.4, 8.4, 4.2)
    assert cfg.num_trials == 50 and cfg.preamble_length == 256 and cfg.num_checkpoints == 30
    cfg = ExperimentConfig("esp", "neural-fast", "neural-fast", bits_per_symbol=3).resolved()
    assert cfg.train_snr_db == 13.2 and cfg.max_iterations == 6000


@pytest.mark.parametrize("bad", [
    dict(protocol="xyz"), dict(agent1_preset="nope"), dict(bits_per_symbol=5), dict(num_trials=0),
    dict(agent2_overrides={"stepsize": 1.0}),
])
def test_invalid_configs(bad):
    kw = dict(protocol="epp", agent1_preset="neural-fast", agent2_preset="classic")
    kw.update(bad)
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw).resolved()


def test_classic_pair_rejected_before_running():
    with pytest.raises(UnsupportedConfiguration):
        run_experiment(ExperimentConfig("epp", "classic", "classic", num_trials=1))


def test_ini_round_trip_example():
    cfg = ExperimentConfig("epp", "neural-fast", "poly-slow", num_trials=7, base_seed=3,
                           test_snr_grid=(8.4, 4.2), train_snr_db=13.0,
                           agent1_overrides={"stepsize_mu": 1e-3, "hidden_layers": (40, 20), "restrict_energy": False},
                           agent2_overrides={"degree_polynomial": 2, "optimizer": "adam"})
    assert config_from_ini(config_to_ini(cfg)) == cfg


_floats = st.floats(1e-6, 10, allow_nan=False)


@given(
    st.sampled_from(["gp", "lp", "esp", "epp"]),
    st.sampled_from(["neural-fast", "neural-slow", "poly-fast", "classic"]),
    st.integers(0, 2**31),
    st.one_of(st.none(), st.lists(st.floats(-5, 30), min_size=1, max_size=5).map(tuple)),
    st.dictionaries(st.sampled_from(["stepsize_mu", "initial_std", "lambda_center", "max_amplitude"]), _floats),
    st.lists(st.integers(1, 64), min_size=1, max_size=3).map(tuple),
)
@settings(max_examples=60)
def test_ini_round_trip_property(protocol, preset, seed, grid, overrides, hidden):
    cfg = ExperimentConfig(protocol, preset, "neural-fast", base_seed=seed, test_snr_grid=grid,
                           agent1_overrides=dict(overrides), agent2_overrides={"hidden_layers": hidden})
    assert config_from_ini(config_to_ini(cfg)) == cfg


@pytest.mark.parametrize("text", [
    "[experiment]\nprotocol = epp\ncolour = red\n[agent1]\npreset = classic\n[agent2]\npreset = classic\n",
    "[experiment]\nprotocol = epp\n[agent1]\npreset = classic\nstepsize_muu = 1\n[agent2]\npreset = classic\n",
    "[experiment]\nprotocol = epp\n[agent1]\npreset = classic\n[agent2]\npreset = classic\n[agent3]\n",
    "[experiment]\nprotocol = epp\n[agent1]\npreset = classic\n",
    "[experiment]\n[agent1]\npreset = classic\n[agent2]\npreset = classic\n",
    "[experiment]\nprotocol = epp\nnum_trials = many\n[agent1]\npreset = classic\n[agent2]\npreset = classic\n",
    "not an ini file",
])
def test_bad_ini_rejected(text):
    with pytest.raises(ConfigError):
        config_from_ini(text)


def test_run_is_deterministic():
    a, b = run_experiment(small()), run_experiment(small())
    assert _fingerprint(a) == _fingerprint(b)


def test_parallelism_does_not_change_results():
    cfg = small(trials=3)
    assert _fingerprint(run_experiment(cfg, parallel=1)) == _fingerprint(run_experiment(cfg, parallel=3))


def test_parallel_env_cap(monkeypatch):
    from echolearn.runner import worker_count
    monkeypatch.setenv("ECHOLEARN_MAX_WORKERS", "2")
    assert worker_count(8) == 2
    monkeypatch.delenv("ECHOLEARN_MAX_WORKERS")
    assert worker_count(8) == 8 and worker_count(None) == 1


def test_trials_are_seeded_individually():
    three = run_experiment(small(trials=3))
    two = run_experiment(small(trials=2))
    assert _fingerprint(three)[:2] == _fingerprint(two)


def test_records_layout():
    res = run_experiment(small())
    t = res.trials[0]
    assert [r.iteration for r in t.records] == [1, 2, 3, 6, 12]
    assert [r.symbols for r in t.records] == [256, 512, 768, 1536, 3072]
    assert all(len(r.measurements) == 5 for r in t.records)
    assert [m.snr_db for m in t.final] == [13.0, 12.0, 10.4, 8.4, 4.2]


def test_results_round_trip_through_csv(tmp_path):
    res = run_experiment(small(trials=2))
    paths = write_results(res, tmp_path)
    assert "summary" not in paths
    back = read_results(paths["records"])
    assert back.config == res.config.expanded()
    assert back.config.agent_specs() == res.config.agent_specs()
    assert _fingerprint(back) == _fingerprint(res)
    text = paths["records"].read_text()
    assert text.startswith("# [experiment]")
    assert "# stepsize_mu = 0.008" in text  # presets are expanded in the embedded config


def test_embedded_config_reruns_identically(tmp_path):
    res = run_experiment(small(trials=1))
    paths = write_results(res, tmp_path)
    again = run_experiment(read_results(paths["records"]).config)
    assert _fingerprint(again) == _fingerprint(res)


def test_model_files(tmp_path):
    run_experiment(small(trials=1), model_dir=tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["trial000_agent1.bin", "trial000_agent2.bin"]


# --- summaries ---------------------------------------------------------------------

def _fake(db_rows, grid=(8.4,)):
    cfg = ExperimentConfig("epp", "neural-fast", "classic", test_snr_grid=grid).resolved()
    trials = []
    for i, dbs in enumerate(db_rows):
        recs = [TrainingRecord(k + 1, 256 * (k + 1), [], d) for k, d in enumerate(dbs)]
        trials.append(TrialResult(i, recs, [BerMeasurement(8.4, 1000, 10 + i)]))
    return ResultSet(cfg, trials)


def test_summary_first_checkpoint():
    s = summarize(_fake([[0.5, 0.1]] * 10))
    assert s.symbols_to_90 == 256 and s.median_symbols == 256 and s.converged_trials == 10


def test_summary_never():
    s = summarize(_fake([[5, 1]] * 5 + [[5, 5]] * 5))
    assert s.symbols_to_90 == math.inf
    assert s.converged_trials == 5


def test_summary_needs_ten_trials():
    with pytest.raises(ValueError):
        summarize(_fake([[1]] * 9))


def test_summary_percentiles():
    s = summarize(_fake([[1]] * 10))
    (snr, p10, p50, p90), = s.ber_curve
    assert snr == 8.4 and p10 <= p50 <= p90


def test_summary_file(tmp_path):
    res = _fake([[5, 2]] * 10)
    paths = write_results(res, tmp_path)
    lines = [l for l in paths["summary"].read_text().splitlines() if not l.startswith("#")]
    assert lines[0].split(",")[-3:] == ["symbols_to_90pct", "median_symbols_to_3db", "converged_trials"]
    assert lines[1].split(",")[-3:] == ["512.0", "512.0", "10"]


def test_bpsk_defaults_come_from_the_baseline():
    from echolearn.classic import exact_round_trip_ber, make_scheme

    cfg = ExperimentConfig("esp", "neural-fast", "neural-fast", bits_per_symbol=1).resolved()
    assert cfg.train_snr_db == cfg.test_snr_db == cfg.test_snr_grid[3]
    ber = exact_round_trip_ber(make_scheme(1), cfg.train_snr_db)
    assert 0.008 < ber < 0.0125
    # BPSK carries one bit per symbol, so it sits 3 dB below the QPSK crossing
    qpsk = ExperimentConfig("esp", "neural-fast", "neural-fast").resolved()
    assert abs(qpsk.train_snr_db - cfg.train_snr_db - 3.0) < 0.4
