"""Closed-form BER references and small statistics helpers."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import erfc


class OracleKind(str, enum.Enum):
    AWGN_BPSK = "awgn_bpsk"
    AWGN_QPSK = "awgn_qpsk"
    RAYLEIGH_BPSK = "rayleigh_bpsk"


@dataclass(frozen=True)
class OracleCurve:
    kind: OracleKind
    points: List[Tuple[float, float]]


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def qfunc(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def awgn_bpsk_ber(gamma_b):
    """Q(sqrt(2 gamma_b)); gamma_b is the linear Eb/N0."""
    return qfunc(np.sqrt(2.0 * np.asarray(gamma_b, dtype=float)))


def rayleigh_bpsk_ber(gamma):
    """Average BPSK BER over flat Rayleigh fading with mean SNR ``gamma`` (linear)."""
    gamma = np.asarray(gamma, dtype=float)
    return 0.5 * (1.0 - np.sqrt(gamma / (1.0 + gamma)))


def oracle_curve(kind, snr_grid: Sequence[float]) -> OracleCurve:
    """Reference BER at each SNR (dB).

    For the AWGN kinds the SNR axis is Eb/N0; gray-mapped QPSK has the same
    per-bit error rate as BPSK at equal Eb/N0.
    """
    kind = kind if isinstance(kind, OracleKind) else OracleKind(str(kind).lower())
    gamma = db_to_linear(snr_grid)
    if kind is OracleKind.RAYLEIGH_BPSK:
        ber = rayleigh_bpsk_ber(gamma)
    else:
        ber = awgn_bpsk_ber(gamma)
    return OracleCurve(kind, [(float(s), float(b)) for s, b in zip(snr_grid, np.atleast_1d(ber))])


def binomial_sigma(p: float, n: int) -> float:
    return float(np.sqrt(p * (1.0 - p) / n))


def snr_at_ber(snr_db: Sequence[float], ber: Sequence[float], target: float) -> float:
    """SNR where a BER curve crosses ``target``, interpolating log10(BER) linearly.

    Returns NaN when the curve never brackets the target.
    """
    snr = np.asarray(snr_db, dtype=float)
    logb = np.log10(np.maximum(np.asarray(ber, dtype=float), 1e-300))
    lt = np.log10(target)
    for i in range(snr.size - 1):
        a, b = logb[i], logb[i + 1]
        if (a - lt) * (b - lt) <= 0 and a != b:
            return float(snr[i] + (lt - a) * (snr[i + 1] - snr[i]) / (b - a))
    return float("nan")


def curve_gap_db(snr_db, ber_ref, ber_other, target: float) -> float:
    """Horizontal shift (dB) of ``ber_other`` relative to ``ber_ref`` at ``target``.

    Positive means ``ber_other`` needs more SNR for the same BER.
    """
    return snr_at_ber(snr_db, ber_other, target) - snr_at_ber(snr_db, ber_ref, target)
