"""Same agent pairing under all four protocols (GP, LP, ESP, EPP).

    python scripts/info_sharing.py --agents neural-fast,neural-fast --trials 50 --out results/info
"""
import argparse
from pathlib import Path

from _common import run_and_report
from echolearn.runner import ExperimentConfig

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--agents", default="neural-fast,neural-fast")
parser.add_argument("--protocols", default="gp,lp,esp,epp")
parser.add_argument("--trials", type=int, default=50)
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--parallel", type=int, default=1)
parser.add_argument("--out", type=Path, default=Path("results/info_sharing"))
args = parser.parse_args()

a1, a2 = args.agents.split(",")
for protocol in args.protocols.split(","):
    cfg = ExperimentConfig(protocol, a1, a2, num_trials=args.trials, base_seed=args.seed)
    run_and_report(cfg, args.out / f"{protocol}_{a1}_{a2}", args.parallel)
