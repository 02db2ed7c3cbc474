"""Unit-gain complex AWGN channel.

SNR is Es/N0 with unit average symbol energy, so each of the real and
imaginary noise components has variance ``N0 / 2 = 1 / (2 * 10**(snr/10))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Round-trip BER targets of the Classic baselines and the SNR (dB) at which
# each is reached, per bits-per-symbol.
TARGET_BER = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
TARGET_SNR_DB = {
    2: (13.0, 12.0, 10.4, 8.4, 4.2),
    3: (18.2, 17.0, 15.4, 13.2, 8.4),
    4: (20.0, 18.8, 17.2, 15.0, 10.4),
}


def train_snr_db(b: int) -> float:
    """Default training SNR: the 1% round-trip BER point."""
    return TARGET_SNR_DB[b][3]


def sigma_from_snr(snr_db: float) -> float:
    return float(np.sqrt(1.0 / (2.0 * 10.0 ** (snr_db / 10.0))))


@dataclass(frozen=True)
class AwgnChannel:
    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"noise std must be non-negative, got {self.sigma}")

    @classmethod
    def from_snr(cls, snr_db: float) -> "AwgnChannel":
        return cls(sigma_from_snr(snr_db))

    def noise(self, shape, rng: np.random.Generator) -> np.ndarray:
        """Real-valued ``shape + (2,)`` noise, one column per I/Q component."""
        return self.sigma * rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))

    def transmit(self, s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Add noise to an ``(n, 2)`` array of I/Q samples."""
        s = np.asarray(s, dtype=float)
        if self.sigma == 0:
            return s.copy()
        return s + self.noise(s.shape[:-1], rng)
