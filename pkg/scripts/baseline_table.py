"""Classic round-trip BER at the tabulated SNRs: exact value and a Monte-Carlo estimate.

    python scripts/baseline_table.py --bits 10000000
"""
import argparse

from echolearn.channel import TARGET_BER, TARGET_SNR_DB
from echolearn.classic import exact_round_trip_ber, load_baseline, make_scheme, monte_carlo_round_trip_ber
from echolearn.core import make_rng

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--bits", type=int, default=10**7)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

rng = make_rng(args.seed)
print("scheme,snr_db,target_ber,exact_ber,exact_rel,mc_ber,mc_rel,snr_for_target")
for b in (2, 3, 4):
    scheme = make_scheme(b)
    curve = load_baseline(b)
    for snr, target in zip(TARGET_SNR_DB[b], TARGET_BER):
        exact = exact_round_trip_ber(scheme, snr)
        n_bits, n_err = monte_carlo_round_trip_ber(scheme, snr, rng, min_errors=10**12, max_bits=args.bits)
        mc = n_err / n_bits
        print(f"{scheme.name},{snr},{target:g},{exact:.4g},{exact / target - 1:+.3f},{mc:.4g},{mc / target - 1:+.3f},"
              f"{curve.snr_for_ber(target):.2f}")
