"""Quick health check: gradient checks plus one monitored training run."""
from __future__ import annotations

import numpy as np

from .agents import make_agent
from .core import make_rng
from .gradcheck import CHECKS, TOLERANCE
from .presets import resolve_preset
from .protocols import InvariantMonitor, InvariantViolation, train


def _monitored_run(protocol: str, presets=("neural-fast", "neural-fast"), iterations: int = 60, seed: int = 0):
    rng = make_rng(seed)
    agents = [make_agent(resolve_preset(p, protocol, 2), rng) for p in presets]
    monitor = InvariantMonitor(protocol)
    train(protocol, *agents, train_snr_db=8.4, max_iterations=iterations, rng=rng, monitor=monitor)
    return agents, monitor


def _constellations(agents):
    return [a.mod.constellation() for a in agents]


def run_selftest(verbose: bool = False) -> bool:
    ok = True

    def report(name, passed, detail=""):
        nonlocal ok
        ok &= bool(passed)
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")

    for name, fn in CHECKS.items():
        err = fn(0)
        report(f"gradient {name}", err < TOLERANCE, f"rel err {err:.2e}")
    for protocol in ("gp", "lp", "esp", "epp"):
        try:
            _, mon = _monitored_run(protocol)
            report(f"invariants {protocol}", mon.steps_checked == 60)
        except InvariantViolation as e:
            report(f"invariants {protocol}", False, str(e))
    a, _ = _monitored_run("epp", seed=3)
    b, _ = _monitored_run("epp", seed=3)
    same = all(np.array_equal(x, y) for x, y in zip(_constellations(a), _constellations(b)))
    report("determinism under a fixed seed", same)
    return ok
