"""Experiment configuration, multi-seed orchestration and result files.

Config files are INI: an ``[experiment]`` section plus ``[agent1]`` and
``[agent2]`` sections, each naming a ``preset`` and optionally overriding
hyperparameters by field name::

    [experiment]
    protocol = epp
    bits_per_symbol = 2
    num_trials = 20

    [agent1]
    preset = neural-fast

    [agent2]
    preset = classic

Results are plain CSV. Every file starts with ``#`` lines holding the fully
resolved config (presets expanded), so a result file alone is enough to
rerun or re-plot the experiment.

``records.csv``: one row per (trial, checkpoint, test SNR), plus rows with
``stage = final`` for the longer end-of-training measurement.
``summary.csv``: one row per experiment.
``convergence.csv``: fraction of trials within the threshold per checkpoint.
"""
from __future__ import annotations

import configparser
import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .agents import make_agent, save_agent
from .channel import TARGET_BER, TARGET_SNR_DB
from .classic import load_baseline
from .core import check_bps, make_rng
from .evaluation import (
    NOT_CONVERGED,
    BerMeasurement,
    TrainingRecord,
    ber_percentiles,
    convergence_fraction,
    db_off_optimal,
    round_trip_ber,
    round_trip_ber_adaptive,
    symbols_to_fraction,
    symbols_to_threshold,
)
from .presets import HYPERPARAM_FIELDS, ConfigError, Hyperparams, resolve_preset
from .protocols import (
    ProtocolKind,
    UnsupportedConfiguration,
    checkpoint_schedule,
    default_max_iterations,
    train,
)

PARALLEL_ENV = "ECHOLEARN_MAX_WORKERS"
CONVERGENCE_DB = 3.0
CONVERGED_FRACTION = 0.9
MIN_SUMMARY_TRIALS = 10


def default_snr_grid(b: int) -> tuple[float, ...]:
    """Tabulated SNRs for each round-trip BER target, highest SNR first.

    Orders without a table (BPSK) get the baseline's own crossings, rounded to 0.1 dB.
    """
    if b in TARGET_SNR_DB:
        return TARGET_SNR_DB[b]
    curve = load_baseline(b)
    return tuple(round(curve.snr_for_ber(t), 1) for t in TARGET_BER)


@dataclass
class ExperimentConfig:
    protocol: str
    agent1_preset: str
    agent2_preset: str
    bits_per_symbol: int = 2
    train_snr_db: float | None = None
    preamble_length: int = 256
    max_iterations: int | None = None
    num_trials: int = 50
    base_seed: int = 0
    test_snr_grid: tuple[float, ...] | None = None
    num_checkpoints: int = 30
    eval_words: int = 10**4
    final_min_errors: int = 100
    final_max_bits: int = 10**6
    agent1_overrides: dict = field(default_factory=dict)
    agent2_overrides: dict = field(default_factory=dict)

    def resolved(self) -> "ExperimentConfig":
        """Fill defaults that depend on protocol and order; validate everything."""
        try:
            protocol = ProtocolKind(str(self.protocol).lower()).value
        except ValueError:
            raise ConfigError(f"unknown protocol {self.protocol!r}") from None
        try:
            b = check_bps(int(self.bits_per_symbol))
        except ValueError as e:
            raise ConfigError(str(e)) from None
        for name in ("preamble_length", "num_trials", "num_checkpoints", "eval_words", "final_max_bits"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ConfigError("max_iterations must be positive")
        cfg = replace(
            self,
            protocol=protocol,
            bits_per_symbol=b,
            train_snr_db=default_snr_grid(b)[3] if self.train_snr_db is None else float(self.train_snr_db),
            max_iterations=self.max_iterations or default_max_iterations(protocol, b),
            test_snr_grid=tuple(float(x) for x in (self.test_snr_grid or default_snr_grid(b))),
            agent1_overrides=dict(self.agent1_overrides),
            agent2_overrides=dict(self.agent2_overrides),
        )
        if not cfg.test_snr_grid:
            raise ConfigError("test_snr_grid is empty")
        s1, s2 = cfg.agent_specs()
        if s1.kind == "classic" and s2.kind == "classic":
            raise UnsupportedConfiguration(f"{protocol}: neither agent has anything to learn")
        return cfg

    def agent_specs(self):
        b = int(self.bits_per_symbol)
        return (
            resolve_preset(self.agent1_preset, self.protocol, b, self.agent1_overrides),
            resolve_preset(self.agent2_preset, self.protocol, b, self.agent2_overrides),
        )

    @property
    def test_snr_db(self) -> float:
        """SNR at which dB-off-optimal is measured: the 1% BER column."""
        return default_snr_grid(int(self.bits_per_symbol))[3]

    def expanded(self) -> "ExperimentConfig":
        """Resolved config with every hyperparameter written out as an override."""
        cfg = self.resolved()
        s1, s2 = cfg.agent_specs()
        full = lambda spec: {k: getattr(spec.hp, k) for k in HYPERPARAM_FIELDS if k != "bits_per_symbol"}
        return replace(cfg, agent1_overrides=full(s1), agent2_overrides=full(s2))


# --- INI serialisation ------------------------------------------------------

_EXPERIMENT_KEYS = [f.name for f in fields(ExperimentConfig) if not f.name.endswith(("_preset", "_overrides"))]
_HP_DEFAULTS = Hyperparams()


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_hp(key: str, text: str):
    default = getattr(_HP_DEFAULTS, key)
    try:
        if isinstance(default, bool):
            return _parse_bool(text)
        if isinstance(default, tuple):
            return tuple(int(x) for x in text.replace(",", " ").split())
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text.strip()


def _parse_experiment(key: str, text: str):
    text = text.strip()
    try:
        if key in ("protocol",):
            return text
        if key == "test_snr_grid":
            return None if text.lower() in ("", "none", "targets") else tuple(float(x) for x in text.replace(",", " ").split())
        if key in ("train_snr_db",):
            return None if text.lower() in ("", "none") else float(text)
        if key == "max_iterations":
            return None if text.lower() in ("", "none") else int(text)
        return int(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def config_to_ini(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["experiment"] = {k: _fmt(getattr(cfg, k)) for k in _EXPERIMENT_KEYS if getattr(cfg, k) is not None}
    for i in (1, 2):
        sec = {"preset": getattr(cfg, f"agent{i}_preset")}
        sec.update({k: _fmt(v) for k, v in getattr(cfg, f"agent{i}_overrides").items()})
        cp[f"agent{i}"] = sec
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def config_from_ini(text: str) -> ExperimentConfig:
    """Parse a config; unknown sections or keys are errors, not warnings."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse config: {e}") from None
    extra = set(cp.sections()) - {"experiment", "agent1", "agent2"}
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    for sec in ("experiment", "agent1", "agent2"):
        if sec not in cp:
            raise ConfigError(f"missing [{sec}] section")
    exp = dict(cp["experiment"])
    bad = set(exp) - set(_EXPERIMENT_KEYS)
    if bad:
        raise ConfigError(f"unknown [experiment] key(s): {', '.join(sorted(bad))}")
    if "protocol" not in exp:
        raise ConfigError("[experiment] needs a protocol")
    kwargs = {k: _parse_experiment(k, v) for k, v in exp.items()}
    for i in (1, 2):
        sec = dict(cp[f"agent{i}"])
        if "preset" not in sec:
            raise ConfigError(f"[agent{i}] needs a preset")
        kwargs[f"agent{i}_preset"] = sec.pop("preset").strip()
        bad = set(sec) - set(HYPERPARAM_FIELDS)
        if bad:
            raise ConfigError(f"unknown [agent{i}] key(s): {', '.join(sorted(bad))}")
        kwargs[f"agent{i}_overrides"] = {k: _parse_hp(k, v) for k, v in sec.items()}
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    return config_from_ini(Path(path).read_text())


# --- running ----------------------------------------------------------------

@dataclass
class TrialResult:
    trial: int
    records: list[TrainingRecord]
    final: list[BerMeasurement]

    @property
    def symbols_to_threshold(self) -> float:
        return symbols_to_threshold(self.records, CONVERGENCE_DB)


@dataclass
class ResultSet:
    config: ExperimentConfig
    trials: list[TrialResult]


def run_trial(config: ExperimentConfig, trial: int, model_dir=None) -> TrialResult:
    """Train one pair of agents; seeded by ``(base_seed, trial)`` only."""
    cfg = config.resolved()
    b = cfg.bits_per_symbol
    spec1, spec2 = cfg.agent_specs()
    rng = make_rng(cfg.base_seed, trial)
    eval_rng = make_rng(cfg.base_seed, trial, 1)
    a1, a2 = make_agent(spec1, rng), make_agent(spec2, rng)
    baseline = load_baseline(b)
    test_snr = cfg.test_snr_db

    def evaluate(x, y) -> TrainingRecord:
        ms = [round_trip_ber(x, y, snr, cfg.eval_words, eval_rng) for snr in cfg.test_snr_grid]
        at_test = [m for m in ms if np.isclose(m.snr_db, test_snr)]
        probe = at_test[0] if at_test else round_trip_ber(x, y, test_snr, cfg.eval_words, eval_rng)
        return TrainingRecord(0, 0, ms, db_off_optimal(probe, baseline))

    records = train(
        cfg.protocol, a1, a2,
        train_snr_db=cfg.train_snr_db,
        max_iterations=cfg.max_iterations,
        rng=rng,
        evaluate=evaluate,
        preamble_length=cfg.preamble_length,
        checkpoints=checkpoint_schedule(cfg.max_iterations, cfg.num_checkpoints),
    )
    final = [
        round_trip_ber_adaptive(a1, a2, snr, eval_rng, cfg.final_min_errors, cfg.final_max_bits, cfg.eval_words)
        for snr in cfg.test_snr_grid
    ]
    if model_dir is not None:
        model_dir = Path(model_dir)
        model_dir.mkdir(parents=True, exist_ok=True)
        save_agent(a1, model_dir / f"trial{trial:03d}_agent1.bin")
        save_agent(a2, model_dir / f"trial{trial:03d}_agent2.bin")
    return TrialResult(trial, records, final)


def worker_count(requested: int | None) -> int:
    n = max(1, int(requested or 1))
    cap = os.environ.get(PARALLEL_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_experiment(config: ExperimentConfig, parallel: int = 1, model_dir=None) -> ResultSet:
    """Run every trial; the result does not depend on ``parallel``."""
    cfg = config.resolved()
    idx = list(range(cfg.num_trials))
    n = worker_count(parallel)
    if n == 1:
        trials = [run_trial(cfg, i, model_dir) for i in idx]
    else:
        load_baseline(cfg.bits_per_symbol)  # fill the disk cache once, before workers start
        with ProcessPoolExecutor(max_workers=n) as pool:
            trials = list(pool.map(run_trial, [cfg] * len(idx), idx, [model_dir] * len(idx)))
    trials.sort(key=lambda t: t.trial)
    return ResultSet(cfg, trials)


# --- summaries --------------------------------------------------------------

@dataclass
class Summary:
    num_trials: int
    symbols_to_90: float
    median_symbols: float
    converged_trials: int
    checkpoint_symbols: np.ndarray
    fraction: np.ndarray
    ber_curve: list[tuple[float, float, float, float]]


def summarize(results: ResultSet, min_trials: int = MIN_SUMMARY_TRIALS) -> Summary:
    """Symbols before 90% of trials are within 3 dB of optimal (``inf`` = never)."""
    trials = results.trials
    if len(trials) < min_trials:
        raise ValueError(f"a summary needs at least {min_trials} trials, got {len(trials)}")
    symbols, frac = convergence_fraction([t.records for t in trials], CONVERGENCE_DB)
    per_trial = [t.symbols_to_threshold for t in trials]
    return Summary(
        num_trials=len(trials),
        symbols_to_90=symbols_to_fraction(symbols, frac, CONVERGED_FRACTION),
        median_symbols=float(np.median(per_trial)),
        converged_trials=int(sum(math.isfinite(s) for s in per_trial)),
        checkpoint_symbols=symbols,
        fraction=frac,
        ber_curve=ber_percentiles([t.final for t in trials], results.config.test_snr_grid),
    )


# --- result files -----------------------------------------------------------

RECORD_HEADER = ["trial", "stage", "iteration", "symbols", "snr_db", "n_bits", "n_errors", "ber", "db_off"]
SUMMARY_HEADER = ["protocol", "agent1", "agent2", "bits_per_symbol", "train_snr_db", "num_trials",
                  "symbols_to_90pct", "median_symbols_to_3db", "converged_trials"]


def _num(x: float) -> str:
    return "never" if x == math.inf else repr(float(x))


def _config_comment(cfg: ExperimentConfig) -> str:
    return "".join(f"# {line}\n" if line else "#\n" for line in config_to_ini(cfg.expanded()).splitlines())


def _open_csv(path: Path, cfg: ExperimentConfig):
    f = open(path, "w", newline="")
    f.write(_config_comment(cfg))
    return f, csv.writer(f)


def write_results(results: ResultSet, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = results.config
    paths = {"records": out / "records.csv", "config": out / "config.ini"}
    (out / "config.ini").write_text(config_to_ini(cfg.expanded()))
    f, w = _open_csv(paths["records"], cfg)
    with f:
        w.writerow(RECORD_HEADER)
        for t in results.trials:
            for r in t.records:
                for m in r.measurements:
                    w.writerow([t.trial, "checkpoint", r.iteration, r.symbols, m.snr_db, m.n_bits, m.n_errors,
                                repr(m.ber), _num(r.db_off)])
            last = t.records[-1] if t.records else None
            for m in t.final:
                w.writerow([t.trial, "final", last.iteration if last else 0, last.symbols if last else 0,
                            m.snr_db, m.n_bits, m.n_errors, repr(m.ber), ""])
    if len(results.trials) >= MIN_SUMMARY_TRIALS:
        s = summarize(results)
        paths["summary"] = out / "summary.csv"
        f, w = _open_csv(paths["summary"], cfg)
        with f:
            w.writerow(SUMMARY_HEADER)
            w.writerow([cfg.protocol, cfg.agent1_preset, cfg.agent2_preset, cfg.bits_per_symbol, cfg.train_snr_db,
                        s.num_trials, _num(s.symbols_to_90), _num(s.median_symbols), s.converged_trials])
        paths["convergence"] = out / "convergence.csv"
        f, w = _open_csv(paths["convergence"], cfg)
        with f:
            w.writerow(["symbols", "fraction"])
            for sym, fr in zip(s.checkpoint_symbols, s.fraction):
                w.writerow([int(sym), repr(float(fr))])
    return paths


def _split_comment(path) -> tuple[str, list[str]]:
    head, body = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") and not body:
            head.append(line[2:] if line.startswith("# ") else line[1:])
        else:
            body.append(line)
    return "\n".join(head), body


def read_results(path) -> ResultSet:
    """Rebuild a :class:`ResultSet` from a ``records.csv`` file alone."""
    head, body = _split_comment(path)
    cfg = config_from_ini(head).resolved()
    trials: dict[int, TrialResult] = {}
    checkpoints: dict[tuple[int, int], TrainingRecord] = {}
    for row in csv.DictReader(body):
        t = int(row["trial"])
        tr = trials.setdefault(t, TrialResult(t, [], []))
        m = BerMeasurement(float(row["snr_db"]), int(row["n_bits"]), int(row["n_errors"]))
        if row["stage"] == "final":
            tr.final.append(m)
            continue
        key = (t, int(row["iteration"]))
        if key not in checkpoints:
            db = NOT_CONVERGED if row["db_off"] == "never" else float(row["db_off"])
            checkpoints[key] = TrainingRecord(key[1], int(row["symbols"]), [], db)
            tr.records.append(checkpoints[key])
        checkpoints[key].measurements.append(m)
    return ResultSet(cfg, [trials[k] for k in sorted(trials)])


def find_records(root) -> list[Path]:
    root = Path(root)
    if root.is_file():
        return [root]
    return sorted(root.rglob("records.csv"))
