"""Shared helpers for the experiment scripts."""
from __future__ import annotations

import math
from pathlib import Path

from echolearn.runner import ExperimentConfig, run_experiment, summarize, write_results


def run_and_report(cfg: ExperimentConfig, out: Path, parallel: int) -> None:
    res = run_experiment(cfg, parallel=parallel)
    write_results(res, out)
    if len(res.trials) >= 10:
        s = summarize(res)
        fmt = lambda x: "never" if x == math.inf else f"{x:g}"
        print(f"{out.name:40s} 90% at {fmt(s.symbols_to_90):>8}  median {fmt(s.median_symbols):>8}  "
              f"converged {s.converged_trials}/{s.num_trials}", flush=True)
    else:
        print(f"{out.name:40s} done ({len(res.trials)} trials, too few for a summary)", flush=True)
