"""EPP neural clones (neural-snr preset) trained at each QPSK table SNR, tested at 8.4 dB.

    python scripts/train_snr.py --trials 50 --out results/train_snr
"""
import argparse
from pathlib import Path

from _common import run_and_report
from echolearn.channel import TARGET_SNR_DB
from echolearn.runner import ExperimentConfig

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--snrs", default=",".join(str(s) for s in TARGET_SNR_DB[2]))
parser.add_argument("--trials", type=int, default=50)
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--parallel", type=int, default=1)
parser.add_argument("--out", type=Path, default=Path("results/train_snr"))
args = parser.parse_args()

for snr in (float(x) for x in args.snrs.split(",")):
    cfg = ExperimentConfig("epp", "neural-snr", "neural-snr", train_snr_db=snr,
                           num_trials=args.trials, base_seed=args.seed)
    run_and_report(cfg, args.out / f"epp_train{snr:g}dB", args.parallel)
