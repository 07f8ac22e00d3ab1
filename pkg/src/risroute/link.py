"""Adaptive modulation for direct hops.

The default table maps received SNR (dB) to a square/cross QAM constellation
for a target bit error rate of 1e-6.  Below the BPSK threshold the hop cannot
carry data; that row has constellation size 1 and rate 0.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

# lower SNR bound (dB) of each transmitting row and its constellation size
DEFAULT_THRESHOLDS = (
    (9.8554, 2),
    (12.8657, 4),
    (14.6266, 8),
    (15.8760, 16),
    (16.8451, 32),
    (17.6369, 64),
    (18.3063, 128),
    (18.8863, 256),
)
TARGET_BER = 1e-6


@dataclass(frozen=True)
class ModRow:
    lower_db: float
    upper_db: float
    m: int

    @property
    def rate(self):
        return math.log2(self.m)


class ModulationTable:
    """Half-open SNR intervals that partition the real line."""

    def __init__(self, thresholds=DEFAULT_THRESHOLDS):
        lows = [float(t) for t, _ in thresholds]
        ms = [int(m) for _, m in thresholds]
        if any(b <= a for a, b in zip(lows, lows[1:])):
            raise ParameterError("thresholds must be strictly increasing")
        if any(b <= a for a, b in zip(ms, ms[1:])) or ms[0] < 2:
            raise ParameterError("constellation sizes must increase from at least 2")
        bounds = [-math.inf] + lows + [math.inf]
        sizes = [1] + ms
        self.rows = tuple(ModRow(bounds[i], bounds[i + 1], sizes[i]) for i in range(len(sizes)))
        self._lows = np.array(lows)

    def row_index(self, snr_db):
        return int(np.searchsorted(self._lows, snr_db, side="right"))

    def select(self, snr_db):
        row = self.rows[self.row_index(snr_db)]
        return row.m, row.rate

    def row_for(self, m):
        for row in self.rows:
            if row.m == m:
                return row
        raise ParameterError(f"constellation {m} is not in the table")


DEFAULT_TABLE = ModulationTable()


def select_modulation(snr_db, table=DEFAULT_TABLE):
    """(m, bits per symbol) of the row containing ``snr_db``."""
    return table.select(snr_db)


@dataclass(frozen=True)
class BerModel:
    c1: float = 0.2
    c2: float = 1.5
    c3: float = 1.0
    c4: float = 1.0
    noise: float = 1.0
    target: float = TARGET_BER

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ParameterError("c1 and c2 must be positive")
        if not 0.0 < self.target < 1.0:
            raise ParameterError("target bit error rate must lie in (0, 1)")


def ber(p_rx, m, model):
    """Bit error rate ``c1 * exp(-c2 * p_rx / (noise * (m**c3 - c4)))``."""
    denom = m ** model.c3 - model.c4
    if denom <= 0:
        raise ParameterError(f"m**c3 - c4 must be positive (m={m})")
    if np.any(np.asarray(p_rx) < 0):
        raise ParameterError("received power cannot be negative")
    return model.c1 * np.exp(-model.c2 * np.asarray(p_rx) / (model.noise * denom))


def power_for_ber(target, m, model):
    """Received power at which ``ber`` equals ``target``."""
    denom = m ** model.c3 - model.c4
    if denom <= 0:
        raise ParameterError(f"m**c3 - c4 must be positive (m={m})")
    return model.noise * denom * math.log(model.c1 / target) / model.c2


def calibrated_models(table=DEFAULT_TABLE, noise=1.0, target=TARGET_BER, c1=0.2, c3=1.0, c4=1.0):
    """Per-constellation BER models whose error rate at the row's lower SNR
    bound equals ``target``.

    One exponential shape cannot meet the target at every bound at once, so
    ``c2`` is fitted for each transmitting row.
    """
    models = {}
    for row in table.rows[1:]:
        snr = 10.0 ** (row.lower_db / 10.0)
        c2 = math.log(c1 / target) * (row.m ** c3 - c4) / snr
        models[row.m] = BerModel(c1, c2, c3, c4, noise, target)
    return models


def slots_for_batch(packets, bits_per_packet, rate):
    """Slots needed to move the batch at ``rate`` bits per slot."""
    if not rate > 0:
        raise ParameterError("rate 0: the hop cannot carry data")
    bits = packets * bits_per_packet
    n = math.ceil(bits / rate)
    # guard against float ceil landing one short or long
    while n * rate < bits:
        n += 1
    while n > 1 and (n - 1) * rate >= bits:
        n -= 1
    return int(n)


def direct_snr(p, gain_sq, rho_l, alpha, distance, noise):
    """Linear SNR of a direct hop."""
    if not distance > 0:
        raise ParameterError("hop length must be positive")
    return p * gain_sq * rho_l * distance ** (-alpha) / noise
