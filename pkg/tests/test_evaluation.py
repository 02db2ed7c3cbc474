import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from echolearn.agents import make_agent
from echolearn.channel import AwgnChannel
from echolearn.classic import load_baseline, make_scheme
from echolearn.core import make_rng
from echolearn.evaluation import (
    NOT_CONVERGED,
    BerMeasurement,
    TrainingRecord,
    ber_percentiles,
    convergence_fraction,
    db_off_optimal,
    half_trip_map,
    nearest_rank,
    round_trip_ber,
    round_trip_ber_adaptive,
    symbols_to_fraction,
    symbols_to_threshold,
)
from echolearn.presets import resolve_preset


def _classic(b=2):
    return make_agent(resolve_preset("classic", "epp", b), make_rng(0))


def _exact_measurement(snr, ber, n_bits=10**9):
    return BerMeasurement(snr, n_bits, int(round(ber * n_bits)))


def test_measurement_validation():
    with pytest.raises(ValueError):
        BerMeasurement(8.4, 0, 0)
    with pytest.raises(ValueError):
        BerMeasurement(8.4, 10, 11)
    assert BerMeasurement(8.4, 200, 3).ber == 0.015


def test_classic_round_trip_at_one_percent():
    m = round_trip_ber(_classic(), _classic(), 8.4, 10**6, make_rng(0))
    assert m.n_bits == 2 * 10**6
    exact = load_baseline("qpsk").ber_at(8.4)
    assert m.ber == pytest.approx(exact, rel=0.06)


def test_16qam_round_trip_at_ten_percent():
    m = round_trip_ber(_classic(4), _classic(4), 10.4, 2 * 10**5, make_rng(0))
    assert m.ber == pytest.approx(0.1, rel=0.15)


def test_noiseless_round_trip_is_perfect():
    m = round_trip_ber(_classic(3), _classic(3), 300.0, 10**4, make_rng(0))
    assert m.n_errors == 0


def test_round_trip_rejects_mixed_orders():
    with pytest.raises(ValueError):
        round_trip_ber(_classic(2), _classic(3), 8.4, 10, make_rng(0))


def test_adaptive_stops_on_errors():
    m = round_trip_ber_adaptive(_classic(), _classic(), 4.2, make_rng(0), min_errors=500, chunk_words=1000)
    assert m.n_errors >= 500 and m.n_bits <= 10**5
    m = round_trip_ber_adaptive(_classic(), _classic(), 30.0, make_rng(0), max_bits=20_000, chunk_words=1000)
    assert m.n_bits == 20_000


def test_half_trip_map_identity_for_classic():
    assert half_trip_map(_classic(4), _classic(4)).tolist() == list(range(16))


# --- dB off optimal ---------------------------------------------------------------

def test_db_off_zero_at_baseline():
    base = load_baseline("qpsk")
    for snr in (13.0, 10.4, 8.4, 4.2):
        assert db_off_optimal(_exact_measurement(snr, float(base.ber_at(snr))), base) == pytest.approx(0.0, abs=1e-3)


def test_db_off_three_db():
    base = load_baseline("qpsk")
    m = _exact_measurement(8.4, float(base.ber_at(5.4)))
    assert db_off_optimal(m, base) == pytest.approx(3.0, abs=1e-3)


def test_db_off_random_guessing():
    assert db_off_optimal(BerMeasurement(8.4, 1000, 500), load_baseline("qpsk")) == NOT_CONVERGED


def test_db_off_zero_errors_clamped():
    base = load_baseline("qpsk")
    m = BerMeasurement(8.4, 10**4, 0)
    expected = 8.4 - base.snr_for_ber(1 / (2 * 10**4))
    assert db_off_optimal(m, base) == pytest.approx(expected)
    assert db_off_optimal(m, base) < 0


@given(st.floats(1e-7, 0.2), st.floats(1e-7, 0.2))
def test_db_off_monotone_in_ber(a, b):
    base = load_baseline("qpsk")
    lo, hi = sorted((a, b))
    assert db_off_optimal(_exact_measurement(8.4, lo), base) <= db_off_optimal(_exact_measurement(8.4, hi), base) + 1e-9


def test_db_off_explicit_test_snr():
    base = load_baseline("qpsk")
    m = _exact_measurement(0.0, float(base.ber_at(8.4)))
    assert db_off_optimal(m, base, test_snr_db=9.4) == pytest.approx(1.0, abs=1e-3)


def test_baseline_against_itself_monte_carlo():
    base = load_baseline("qpsk")
    for snr in (12.0, 10.4, 8.4, 4.2):
        m = round_trip_ber(_classic(), _classic(), snr, 4 * 10**5, make_rng(int(snr * 10)))
        assert abs(db_off_optimal(m, base)) < 0.2


# --- populations ---------------------------------------------------------------------

def _trial(db_offs, step=256):
    return [TrainingRecord(i + 1, (i + 1) * step, [], d) for i, d in enumerate(db_offs)]


def test_symbols_to_threshold():
    assert symbols_to_threshold(_trial([9, 5, 2.5, 4])) == 768
    assert symbols_to_threshold(_trial([9, 5])) == math.inf


def test_convergence_fraction_no_latching():
    sym, frac = convergence_fraction([_trial([1, 5, 1]), _trial([5, 1, 1])])
    assert sym.tolist() == [256, 512, 768]
    assert frac.tolist() == [0.5, 0.5, 1.0]


def test_convergence_fraction_all_converged():
    _, frac = convergence_fraction([_trial([0, 0, 0])] * 4)
    assert frac.tolist() == [1.0, 1.0, 1.0]


def test_convergence_fraction_errors():
    with pytest.raises(ValueError):
        convergence_fraction([])
    with pytest.raises(ValueError):
        convergence_fraction([_trial([1, 1]), _trial([1, 1], step=100)])


def test_symbols_to_fraction():
    sym = np.array([10, 20, 30])
    assert symbols_to_fraction(sym, [0.1, 0.9, 1.0]) == 20
    assert symbols_to_fraction(sym, [0.1, 0.5, 0.8]) == math.inf


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40))
def test_nearest_rank_order(values):
    p = [nearest_rank(values, q) for q in (10, 50, 90)]
    assert p == sorted(p)
    assert all(v in values for v in p)


def test_percentiles_identical_trials():
    trial = [BerMeasurement(8.4, 1000, 10), BerMeasurement(4.2, 1000, 100)]
    rows = ber_percentiles([trial] * 5, [8.4, 4.2])
    assert rows == [(8.4, 0.01, 0.01, 0.01), (4.2, 0.1, 0.1, 0.1)]


def test_percentiles_missing_snr():
    with pytest.raises(ValueError):
        ber_percentiles([[BerMeasurement(8.4, 10, 1)]], [4.2])
    with pytest.raises(ValueError):
        ber_percentiles([], [4.2])
