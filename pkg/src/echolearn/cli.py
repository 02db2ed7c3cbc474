"""Command line entry point: ``python -m echolearn <verb> ...``.

Exit codes: 0 success, 1 configuration error, 2 self-test failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .channel import TARGET_BER, TARGET_SNR_DB
from .classic import baseline_ber_curve, make_scheme
from .core import make_rng
from .evaluation import ber_percentiles
from .presets import ConfigError
from .protocols import UnsupportedConfiguration
from .runner import (
    ExperimentConfig,
    config_to_ini,
    find_records,
    load_config,
    read_results,
    run_experiment,
    summarize,
    write_results,
)

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2


def _snr_grid(text: str, scheme) -> np.ndarray:
    if text == "targets":
        return np.array(sorted(TARGET_SNR_DB.get(scheme.b, TARGET_SNR_DB[2])), dtype=float)
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        return np.round(np.arange(lo, hi + step / 2, step), 6)
    return np.array(sorted(float(x) for x in text.split(",")), dtype=float)


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        if not args.protocol or not args.agents:
            raise ConfigError("give --config, or both --protocol and --agents")
        a1, _, a2 = args.agents.partition(",")
        cfg = ExperimentConfig(args.protocol, a1.strip(), (a2 or a1).strip())
    if args.protocol:
        cfg.protocol = args.protocol
    if args.agents and args.config:
        a1, _, a2 = args.agents.partition(",")
        cfg.agent1_preset, cfg.agent2_preset = a1.strip(), (a2 or a1).strip()
    if args.bps is not None:
        cfg.bits_per_symbol = args.bps
    if args.trials is not None:
        cfg.num_trials = args.trials
    if args.seed is not None:
        cfg.base_seed = args.seed
    if args.iterations is not None:
        cfg.max_iterations = args.iterations
    return cfg.resolved()


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out)
    models = out / "models" if args.save_models else None
    results = run_experiment(cfg, parallel=args.parallel, model_dir=models)
    paths = write_results(results, out)
    for name, p in paths.items():
        print(f"{name}: {p}")
    if "summary" not in paths:
        print(f"note: fewer than 10 trials, no summary written", file=sys.stderr)
    return EXIT_OK


def cmd_baseline(args) -> int:
    try:
        scheme = make_scheme(args.scheme)
        grid = _snr_grid(args.snr_grid, scheme)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    curve = baseline_ber_curve(scheme, grid, method=args.method, rng=make_rng(args.seed or 0))
    table = dict(zip(TARGET_SNR_DB.get(scheme.b, ()), TARGET_BER))
    w = csv.writer(sys.stdout)
    w.writerow(["scheme", "snr_db", "ber", "target_ber", "rel_err"])
    for snr, ber in zip(curve.snr_db, curve.ber):
        ref = table.get(round(float(snr), 6))
        w.writerow([scheme.name, f"{snr:g}", f"{ber:.6g}", "" if ref is None else f"{ref:g}",
                    "" if ref is None else f"{ber / ref - 1:+.4f}"])
    return EXIT_OK


def cmd_plot_data(args) -> int:
    files = find_records(args.results)
    if not files:
        raise ConfigError(f"no records.csv under {args.results}")
    for path in files:
        res = read_results(path)
        dest = Path(args.out) / path.parent.name if args.out else path.parent
        dest.mkdir(parents=True, exist_ok=True)
        if args.kind == "ber-curve":
            rows = ber_percentiles([t.final for t in res.trials], res.config.test_snr_grid)
            target = dest / "ber_curve.csv"
            with open(target, "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["snr_db", "p10", "p50", "p90"])
                w.writerows([[f"{s:g}", repr(a), repr(b), repr(c)] for s, a, b, c in rows])
        else:
            s = summarize(res, min_trials=1)
            target = dest / "convergence_curve.csv"
            with open(target, "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["symbols", "fraction"])
                w.writerows([[int(a), repr(float(b))] for a, b in zip(s.checkpoint_symbols, s.fraction)])
        print(target)
    return EXIT_OK


def cmd_summarize(args) -> int:
    files = find_records(args.results)
    if not files:
        raise ConfigError(f"no records.csv under {args.results}")
    w = csv.writer(sys.stdout)
    w.writerow(["experiment", "protocol", "agents", "bps", "trials", "symbols_to_90pct", "median_symbols", "converged"])
    for path in files:
        res = read_results(path)
        cfg = res.config
        try:
            s = summarize(res)
        except ValueError as e:
            print(f"{path}: {e}", file=sys.stderr)
            continue
        fmt = lambda x: "never" if x == math.inf else f"{x:g}"
        w.writerow([path.parent.name, cfg.protocol, f"{cfg.agent1_preset},{cfg.agent2_preset}", cfg.bits_per_symbol,
                    s.num_trials, fmt(s.symbols_to_90), fmt(s.median_symbols), s.converged_trials])
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return EXIT_OK if run_selftest(verbose=True) else EXIT_FAILED


def cmd_show_config(args) -> int:
    sys.stdout.write(config_to_ini(_config_from_args(args).expanded()))
    return EXIT_OK


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI experiment file")
    p.add_argument("--protocol", choices=["gp", "lp", "esp", "epp"])
    p.add_argument("--agents", help="two preset names, e.g. neural-fast,classic")
    p.add_argument("--bps", type=int, choices=[1, 2, 3, 4])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int, help="override the maximum iteration count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echolearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="train trial pairs and write result CSVs")
    _add_experiment_flags(p)
    p.add_argument("--out", default="results")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--save-models", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("baseline", help="print the classic round-trip BER curve")
    p.add_argument("--scheme", default="qpsk")
    p.add_argument("--snr-grid", default="targets", help="'targets', 'lo:hi:step' or a comma list")
    p.add_argument("--method", choices=["exact", "mc"], default="exact")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("plot-data", help="write tidy CSVs for plotting")
    p.add_argument("--results", required=True)
    p.add_argument("--kind", choices=["ber-curve", "convergence"], default="ber-curve")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("summarize", help="symbols to 90%% convergence per experiment")
    p.add_argument("--results", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("selftest", help="gradient checks and training invariants")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("show-config", help="print the fully resolved config")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_show_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UnsupportedConfiguration, configparser.Error, FileNotFoundError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
