"""Neural clones at 2, 3 and 4 bits per symbol (16QAM under EPP takes hours).

    python scripts/mod_order.py --protocols esp,epp --bps 2,3 --trials 10
"""
import argparse
from pathlib import Path

from _common import run_and_report
from echolearn.runner import ExperimentConfig

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--protocols", default="esp,epp")
parser.add_argument("--bps", default="2,3,4")
parser.add_argument("--trials", type=int, default=50)
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--parallel", type=int, default=1)
parser.add_argument("--out", type=Path, default=Path("results/mod_order"))
args = parser.parse_args()

for protocol in args.protocols.split(","):
    for b in (int(x) for x in args.bps.split(",")):
        cfg = ExperimentConfig(protocol, "neural-fast", "neural-fast", bits_per_symbol=b,
                               num_trials=args.trials, base_seed=args.seed)
        run_and_report(cfg, args.out / f"{protocol}_bps{b}", args.parallel)
