"""Fixed Gray-coded schemes and the round-trip BER baseline they define.

The baseline is what learned agents are compared against: the
round-trip BER of two identical Classic agents over the AWGN channel.
It is computed exactly from the half-trip symbol transition matrix
(Q-functions for the rectangular grid, the phase density for PSK), with
a Monte-Carlo estimator kept alongside as an independent check.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .channel import AwgnChannel, sigma_from_snr
from .core import all_words, bit_errors, check_bps, word_to_bits

SCHEME_BY_BPS = {1: "bpsk", 2: "qpsk", 3: "8psk", 4: "16qam"}


def gray(n):
    return n ^ (n >> 1)


@dataclass(frozen=True, eq=False)
class ClassicScheme:
    name: str
    b: int
    points: np.ndarray  # (2**b, 2), row w is the point for word w
    family: str  # "psk" or "qam"

    @property
    def order(self) -> int:
        return 2**self.b


def _psk(name: str, b: int, phase0: float) -> ClassicScheme:
    m = 2**b
    pts = np.zeros((m, 2))
    for k in range(m):
        ang = phase0 + 2 * np.pi * k / m
        pts[gray(k)] = np.cos(ang), np.sin(ang)
    return ClassicScheme(name, b, pts, "psk")


def _qam16() -> ClassicScheme:
    levels = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)
    pts = np.zeros((16, 2))
    for i in range(4):
        for q in range(4):
            pts[(gray(i) << 2) | gray(q)] = levels[i], levels[q]
    return ClassicScheme("16qam", 4, pts, "qam")


def make_scheme(key) -> ClassicScheme:
    """Scheme by name (``"qpsk"``) or by bits per symbol (``2``)."""
    name = SCHEME_BY_BPS[check_bps(key)] if isinstance(key, (int, np.integer)) else str(key).lower()
    if name == "bpsk":
        return _psk("bpsk", 1, 0.0)
    if name == "qpsk":
        return _psk("qpsk", 2, np.pi / 4)
    if name == "8psk":
        return _psk("8psk", 3, 0.0)
    if name == "16qam":
        return _qam16()
    raise ValueError(f"unknown classic scheme {key!r}")


def modulate_classic(scheme: ClassicScheme, words) -> np.ndarray:
    words = np.asarray(words, dtype=np.int64)
    if np.any(words < 0) or np.any(words >= scheme.order):
        raise ValueError(f"word out of range for {scheme.name}")
    return scheme.points[words]


def _sq_dist(scheme: ClassicScheme, received) -> np.ndarray:
    r = np.asarray(received, dtype=float).reshape(-1, 2)
    diff = r[:, None, :] - scheme.points[None, :, :]
    return np.einsum("nkc,nkc->nk", diff, diff)


def demodulate_classic(scheme: ClassicScheme, received) -> np.ndarray:
    # argmin returns the first minimum: ties go to the lowest word
    return np.argmin(_sq_dist(scheme, received), axis=1).astype(np.int64)


def soft_logits(scheme: ClassicScheme, received) -> np.ndarray:
    return -_sq_dist(scheme, received)


def demodulate_classic_soft(scheme: ClassicScheme, received) -> np.ndarray:
    z = soft_logits(scheme, received)
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# --- exact baseline ---------------------------------------------------------

def _psk_sector_probs(m: int, sigma: float) -> np.ndarray:
    """P(decision lands k sectors away) for M-PSK, k = 0..m-1."""
    if sigma == 0:
        out = np.zeros(m)
        out[0] = 1.0
        return out
    rho = 1.0 / (2 * sigma**2)
    half = np.pi / m
    probs = np.empty(m)
    for k in range(1, m):
        lo, hi = 2 * half * k - half, 2 * half * k + half
        probs[k] = integrate.quad(
            _stable_phase_pdf, lo, hi, args=(rho,), epsabs=0, epsrel=1e-11, limit=200
        )[0]
    probs[0] = max(0.0, 1.0 - probs[1:].sum())
    return probs


def _stable_phase_pdf(theta, rho):
    """Density of the received phase for a unit point at angle 0, rho = A^2 / (2 sigma^2)."""
    c = np.cos(theta)
    x = np.sqrt(2 * rho) * c
    # exp(-rho) * exp(rho c^2) = exp(-rho sin^2)
    return (np.exp(-rho) + np.sqrt(4 * np.pi * rho) * c * np.exp(-rho * np.sin(theta) ** 2) * ndtr(x)) / (2 * np.pi)


def _pam_transitions(levels: np.ndarray, sigma: float) -> np.ndarray:
    order = np.argsort(levels)
    srt = levels[order]
    edges = np.concatenate([[-np.inf], (srt[1:] + srt[:-1]) / 2, [np.inf]])
    n = len(levels)
    p = np.zeros((n, n))
    for i in range(n):
        if sigma == 0:
            p[i, i] = 1.0
            continue
        cdf = ndtr((edges - srt[i]) / sigma)
        p[i] = np.diff(cdf)
    # back to the caller's level ordering
    inv = np.empty(n, dtype=int)
    inv[order] = np.arange(n)
    return p[np.ix_(inv, inv)]


def transition_matrix(scheme: ClassicScheme, sigma: float) -> np.ndarray:
    """``P[i, j]`` = probability that word i is decided as word j after one channel use."""
    m = scheme.order
    if scheme.family == "psk":
        ang = np.arctan2(scheme.points[:, 1], scheme.points[:, 0])
        step = np.rint((ang - ang[0]) / (2 * np.pi / m)).astype(int) % m
        sector = _psk_sector_probs(m, sigma)
        return sector[(step[None, :] - step[:, None]) % m]
    ilev, iidx = np.unique(np.round(scheme.points[:, 0], 12), return_inverse=True)
    qlev, qidx = np.unique(np.round(scheme.points[:, 1], 12), return_inverse=True)
    pi = _pam_transitions(ilev, sigma)
    pq = _pam_transitions(qlev, sigma)
    return pi[iidx][:, iidx] * pq[qidx][:, qidx]


def exact_round_trip_ber(scheme: ClassicScheme, snr_db: float) -> float:
    p = transition_matrix(scheme, sigma_from_snr(snr_db))
    rt = p @ p
    w = all_words(scheme.b)
    ham = np.array([bit_errors(np.full(len(w), i), w, scheme.b)[0] for i in w])
    return float((rt * ham).sum() / (scheme.order * scheme.b))


def monte_carlo_round_trip_ber(
    scheme: ClassicScheme,
    snr_db: float,
    rng: np.random.Generator,
    min_errors: int = 100,
    max_bits: int = 10**7,
    chunk_words: int = 2**18,
) -> tuple[int, int]:
    """Simulate Classic-to-Classic round trips until ``min_errors`` bit errors or ``max_bits``.

    Returns ``(n_bits, n_errors)``.
    """
    ch = AwgnChannel.from_snr(snr_db)
    n_bits = n_err = 0
    while n_err < min_errors and n_bits < max_bits:
        p = rng.integers(0, scheme.order, size=chunk_words)
        p_hat = demodulate_classic(scheme, ch.transmit(modulate_classic(scheme, p), rng))
        p_til = demodulate_classic(scheme, ch.transmit(modulate_classic(scheme, p_hat), rng))
        n_err += bit_errors(p, p_til, scheme.b)[1]
        n_bits += chunk_words * scheme.b
    return n_bits, n_err


# --- baseline curve ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BaselineCurve:
    scheme: str
    snr_db: np.ndarray
    ber: np.ndarray
    n_bits: np.ndarray
    n_errors: np.ndarray

    def _usable(self):
        keep = self.ber > 0
        return self.snr_db[keep], np.log10(self.ber[keep])

    def ber_at(self, snr_db) -> np.ndarray:
        x, y = self._usable()
        return 10.0 ** np.interp(snr_db, x, y)

    def snr_for_ber(self, ber: float) -> float:
        """Smallest SNR at which the baseline reaches ``ber``.

        Interpolates linearly in (dB, log10 BER); below the lowest tabulated
        BER the last segment is extended. Returns ``-inf`` if ``ber`` is at or
        above the BER at the lowest tabulated SNR.
        """
        x, y = self._usable()
        t = np.log10(ber)
        if t >= y[0]:
            return -np.inf
        if t < y[-1]:
            slope = (x[-1] - x[-2]) / (y[-1] - y[-2])
            return float(x[-1] + (t - y[-1]) * slope)
        # y is non-increasing; interp wants increasing abscissae
        yr, xr = y[::-1], x[::-1]
        i = np.searchsorted(yr, t)
        if i < len(yr) and yr[i] == t:
            j = np.nonzero(yr == t)[0]
            return float(xr[j].min())
        lo, hi = i - 1, i
        frac = (t - yr[lo]) / (yr[hi] - yr[lo])
        return float(xr[lo] + frac * (xr[hi] - xr[lo]))


DEFAULT_GRID = np.round(np.arange(-10.0, 30.0 + 1e-9, 0.1), 10)


def baseline_ber_curve(
    scheme: ClassicScheme,
    snr_grid=None,
    method: str = "exact",
    rng: np.random.Generator | None = None,
    min_errors: int = 100,
    max_bits: int = 10**7,
) -> BaselineCurve:
    grid = DEFAULT_GRID if snr_grid is None else np.asarray(snr_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty SNR grid")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("SNR grid must be strictly increasing")
    if method == "exact":
        ber = np.array([exact_round_trip_ber(scheme, s) for s in grid])
        zeros = np.zeros(len(grid), dtype=np.int64)
        return BaselineCurve(scheme.name, grid, ber, zeros, zeros)
    if method != "mc":
        raise ValueError(f"unknown baseline method {method!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    counts = [monte_carlo_round_trip_ber(scheme, s, rng, min_errors, max_bits) for s in grid]
    n_bits = np.array([c[0] for c in counts], dtype=np.int64)
    n_err = np.array([c[1] for c in counts], dtype=np.int64)
    # Monte-Carlo wiggle is flattened so the curve stays invertible
    ber = np.minimum.accumulate(n_err / n_bits)
    return BaselineCurve(scheme.name, grid, ber, n_bits, n_err)


CACHE_HEADER = ["scheme", "snr_db", "ber", "n_bits", "n_errors"]


def cache_dir() -> Path:
    return Path(os.environ.get("ECHOLEARN_CACHE", Path.home() / ".cache" / "echolearn"))


def write_baseline_csv(curve: BaselineCurve, path) -> None:
    """One row per SNR point. ``n_bits == 0`` marks an exact (non-simulated) value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # write then rename, so concurrent workers never read a half-written cache
    tmp = path.with_name(f"{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CACHE_HEADER)
        for s, b, nb, ne in zip(curve.snr_db, curve.ber, curve.n_bits, curve.n_errors):
            w.writerow([curve.scheme, f"{s:.4f}", repr(float(b)), int(nb), int(ne)])
    os.replace(tmp, path)


def read_baseline_csv(path) -> BaselineCurve:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ValueError(f"{path}: empty baseline file")
    return BaselineCurve(
        rows[0]["scheme"],
        np.array([float(r["snr_db"]) for r in rows]),
        np.array([float(r["ber"]) for r in rows]),
        np.array([int(r["n_bits"]) for r in rows], dtype=np.int64),
        np.array([int(r["n_errors"]) for r in rows], dtype=np.int64),
    )


_MEMO: dict[str, BaselineCurve] = {}


def load_baseline(scheme_key) -> BaselineCurve:
    """Exact baseline on the default grid, memoised in-process and cached on disk."""
    scheme = make_scheme(scheme_key)
    if scheme.name in _MEMO:
        return _MEMO[scheme.name]
    path = cache_dir() / f"baseline_{scheme.name}.csv"
    curve = None
    if path.exists():
        try:
            curve = read_baseline_csv(path)
            if len(curve.snr_db) != len(DEFAULT_GRID) or not np.allclose(curve.snr_db, DEFAULT_GRID):
                curve = None
        except (OSError, ValueError, KeyError):
            curve = None
    if curve is None:
        curve = baseline_ber_curve(scheme)
        try:
            write_baseline_csv(curve, path)
        except OSError:
            pass
    _MEMO[scheme.name] = curve
    return curve


def hamming_neighbours(scheme: ClassicScheme) -> list[tuple[int, int]]:
    """Pairs of words whose points are nearest neighbours in the plane."""
    pts = scheme.points
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    out = []
    for i in range(scheme.order):
        for j in np.nonzero(np.isclose(d[i], d[i].min()))[0]:
            out.append((i, int(j)))
    return out


def bits_of(scheme: ClassicScheme) -> np.ndarray:
    return word_to_bits(all_words(scheme.b), scheme.b)
