"""Round-trip BER, dB-off-optimal, and statistics over trial populations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import AwgnChannel
from .classic import BaselineCurve
from .core import all_words, bit_errors, random_preamble

NOT_CONVERGED = math.inf


@dataclass(frozen=True)
class BerMeasurement:
    snr_db: float
    n_bits: int
    n_errors: int

    def __post_init__(self):
        if self.n_bits <= 0:
            raise ValueError("a BER measurement needs at least one bit")
        if not 0 <= self.n_errors <= self.n_bits:
            raise ValueError("error count out of range")

    @property
    def ber(self) -> float:
        return self.n_errors / self.n_bits


@dataclass
class TrainingRecord:
    iteration: int
    symbols: int
    measurements: list[BerMeasurement] = field(default_factory=list)
    db_off: float = NOT_CONVERGED


def round_trip_words(agent1, agent2, words, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Send ``words`` out from agent1 and back; both modulators use their means."""
    ch = AwgnChannel.from_snr(snr_db)
    s_hat = ch.transmit(agent1.mod.modulate_eval(words), rng)
    p_hat = agent2.dem.decide(s_hat)
    s_til = ch.transmit(agent2.mod.modulate_eval(p_hat), rng)
    return agent1.dem.decide(s_til)


def round_trip_ber(agent1, agent2, snr_db: float, n_words: int, rng: np.random.Generator) -> BerMeasurement:
    if agent1.b != agent2.b:
        raise ValueError("agents disagree on bits per symbol")
    p = random_preamble(rng, n_words, agent1.b)
    p_til = round_trip_words(agent1, agent2, p, snr_db, rng)
    return BerMeasurement(float(snr_db), n_words * agent1.b, bit_errors(p, p_til, agent1.b)[1])


def round_trip_ber_adaptive(
    agent1,
    agent2,
    snr_db: float,
    rng: np.random.Generator,
    min_errors: int = 100,
    max_bits: int = 10**6,
    chunk_words: int = 10**4,
) -> BerMeasurement:
    """Keep measuring until ``min_errors`` bit errors are seen or ``max_bits`` are sent."""
    n_bits = n_err = 0
    while n_err < min_errors and n_bits < max_bits:
        m = round_trip_ber(agent1, agent2, snr_db, chunk_words, rng)
        n_bits += m.n_bits
        n_err += m.n_errors
    return BerMeasurement(float(snr_db), n_bits, n_err)


def half_trip_map(agent1, agent2) -> np.ndarray:
    """Noiseless ``D2(M1(w))`` for every word ``w``."""
    w = all_words(agent1.b)
    return agent2.dem.decide(agent1.mod.modulate_eval(w))


def db_off_optimal(measured: BerMeasurement, baseline: BaselineCurve, test_snr_db: float | None = None) -> float:
    """Extra SNR the baseline would need to do as badly as ``measured``.

    A zero error count is replaced by ``1 / (2 n_bits)``. Returns
    :data:`NOT_CONVERGED` (``inf``) when the measured BER is no better than
    the baseline at the bottom of its SNR range.
    """
    test = measured.snr_db if test_snr_db is None else test_snr_db
    ber = measured.ber if measured.n_errors > 0 else 1.0 / (2 * measured.n_bits)
    snr = baseline.snr_for_ber(ber)
    if snr == -math.inf:
        return NOT_CONVERGED
    return float(test - snr)


def symbols_to_threshold(records: list[TrainingRecord], threshold_db: float = 3.0) -> float:
    """Symbols sent before this trial's first checkpoint within the threshold (``inf`` if none)."""
    for r in records:
        if r.db_off <= threshold_db:
            return float(r.symbols)
    return math.inf


def convergence_fraction(trials: list[list[TrainingRecord]], threshold_db: float = 3.0):
    """Fraction of trials within ``threshold_db`` at each checkpoint.

    A trial is judged only by its measurement at that checkpoint, so the
    curve can dip. All trials must share one checkpoint schedule.
    """
    if not trials:
        raise ValueError("no trials")
    symbols = np.array([r.symbols for r in trials[0]], dtype=np.int64)
    for t in trials[1:]:
        if [r.symbols for r in t] != list(symbols):
            raise ValueError("trials have different checkpoint schedules")
    ok = np.array([[r.db_off <= threshold_db for r in t] for t in trials], dtype=float)
    return symbols, ok.mean(axis=0)


def symbols_to_fraction(symbols, fraction, target: float = 0.9) -> float:
    """First checkpoint at which ``fraction >= target``; ``inf`` if never."""
    hit = np.nonzero(np.asarray(fraction) >= target - 1e-12)[0]
    return float(symbols[hit[0]]) if hit.size else math.inf


def nearest_rank(values, q: float) -> float:
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("no values")
    k = max(1, math.ceil(q / 100.0 * v.size))
    return float(v[k - 1])


def ber_percentiles(final_measurements: list[list[BerMeasurement]], snr_grid) -> list[tuple[float, float, float, float]]:
    """Per SNR: ``(snr, p10, p50, p90)`` of the trials' final BERs (nearest rank)."""
    if not final_measurements:
        raise ValueError("no trials")
    out = []
    for snr in snr_grid:
        bers = []
        for trial in final_measurements:
            match = [m.ber for m in trial if np.isclose(m.snr_db, snr)]
            if not match:
                raise ValueError(f"trial has no measurement at {snr} dB")
            bers.append(match[0])
        out.append((float(snr), nearest_rank(bers, 10), nearest_rank(bers, 50), nearest_rank(bers, 90)))
    return out
