"""BPSK over the memoryless AWGN channel and channel L-values."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def ebno_db_to_sigma2(ebno_db: float, rate: float) -> float:
    """Noise variance per real dimension for unit-energy BPSK at a given Eb/N0."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    return 1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0))


def design_rate(dv: int, dc: int) -> float:
    """Design rate 1 - dv/dc of a regular ensemble (0.5 for (3,6))."""
    return 1.0 - dv / dc


@dataclass(frozen=True)
class ChannelParams:
    """Eb/N0 operating point; sigma2 is derived on construction."""

    ebno_db: float
    rate: float
    sigma2: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma2", ebno_db_to_sigma2(self.ebno_db, self.rate))

    @property
    def llr_mean(self) -> float:
        """Mean of the channel L-value given X=0 (= 2/sigma2)."""
        return 2.0 / self.sigma2

    @property
    def llr_std(self) -> float:
        """Std deviation of the channel L-value (= 2/sqrt(sigma2))."""
        return 2.0 / np.sqrt(self.sigma2)


def transmit(bits, params: ChannelParams, rng) -> np.ndarray:
    """Map bits 0/1 to symbols +1/-1 and add white Gaussian noise."""
    rng = np.random.default_rng(rng)
    bits = np.asarray(bits)
    symbols = 1.0 - 2.0 * bits
    return symbols + np.sqrt(params.sigma2) * rng.standard_normal(bits.shape)


def channel_llr(y, params: ChannelParams) -> np.ndarray:
    """Channel L-values 2*y/sigma2; positive values favor bit 0."""
    return 2.0 * np.asarray(y, dtype=float) / params.sigma2
