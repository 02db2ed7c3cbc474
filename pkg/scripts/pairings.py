"""EPP/ESP with clones, a fixed Classic partner, and alien partners.

    python scripts/pairings.py --protocol epp --trials 50 --out results/pairings
"""
import argparse
from pathlib import Path

from _common import run_and_report
from echolearn.runner import ExperimentConfig

PAIRS = [
    ("neural-fast", "neural-fast"), ("neural-fast", "classic"),
    ("neural-slow", "neural-slow"), ("neural-fast", "neural-slow"),
    ("poly-fast", "poly-fast"), ("poly-fast", "classic"), ("poly-slow", "poly-slow"),
    ("neural-slow", "poly-fast"), ("neural-fast", "poly-slow"), ("poly-fast", "poly-slow"),
]

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--protocol", default="epp", choices=["gp", "lp", "esp", "epp"])
parser.add_argument("--trials", type=int, default=50)
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--parallel", type=int, default=1)
parser.add_argument("--out", type=Path, default=Path("results/pairings"))
args = parser.parse_args()

for a1, a2 in PAIRS:
    cfg = ExperimentConfig(args.protocol, a1, a2, num_trials=args.trials, base_seed=args.seed)
    run_and_report(cfg, args.out / f"{args.protocol}_{a1}_{a2}", args.parallel)
