"""Block-fading tapped-delay-line channel with AWGN.

Gains are effective baseband coefficients: the physical tap amplitude
times the carrier phase rotation exp(-j 2 pi f_c tau), so no passband
signal is ever generated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chirp import BasebandSignal, ChirpParams
from .errors import ConfigError

CARRIER_FREQUENCY = 100e3


@dataclass(frozen=True)
class ChannelProfile:
    """Power-delay profile; powers are normalized to unit sum on construction.

    With ``fading=False`` every draw returns the taps at their RMS amplitude,
    which turns a single-path profile into a pure AWGN channel.
    """

    delays: tuple
    mean_powers: tuple
    f_c: float = CARRIER_FREQUENCY
    fading: bool = True

    def __post_init__(self):
        delays = tuple(float(d) for d in self.delays)
        powers = np.asarray(self.mean_powers, dtype=float)
        if not delays or len(delays) != powers.size:
            raise ConfigError("delays and mean_powers must be equally long and non-empty", key="channel")
        if delays[0] != 0.0:
            raise ConfigError("first path must arrive at delay 0", key="delays")
        if np.any(np.diff(delays) <= 0):
            raise ConfigError("delays must be strictly increasing", key="delays")
        if np.any(powers <= 0) or not np.all(np.isfinite(powers)):
            raise ConfigError("path powers must be positive", key="mean_powers")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "mean_powers", tuple(float(p) for p in powers / powers.sum()))

    @property
    def n_paths(self) -> int:
        return len(self.delays)

    @property
    def max_delay(self) -> float:
        return self.delays[-1]

    def check_guard(self, t_zp: float):
        if self.max_delay >= t_zp:
            raise ConfigError(
                f"max path delay {self.max_delay * 1e3:.3f} ms does not fit the "
                f"{t_zp * 1e3:.3f} ms zero padding",
                key="delays",
            )

    def max_delay_samples(self, fs: float) -> int:
        return int(round(self.max_delay * fs))


def default_profile() -> ChannelProfile:
    """Four resolvable paths with exponentially decaying power."""
    return ChannelProfile(delays=(0.0, 0.5e-3, 1.0e-3, 1.8e-3), mean_powers=(0.57, 0.25, 0.12, 0.06))


def flat_profile(f_c: float = CARRIER_FREQUENCY, fading: bool = True) -> ChannelProfile:
    return ChannelProfile(delays=(0.0,), mean_powers=(1.0,), f_c=f_c, fading=fading)


@dataclass(frozen=True)
class ChannelRealization:
    delay_samples: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delay_samples, dtype=int)
        g = np.asarray(self.gains, dtype=complex)
        if d.shape != g.shape or d.ndim != 1 or d.size == 0:
            raise ValueError("taps need matching 1-D delay and gain arrays")
        if np.any(d < 0):
            raise ValueError("tap delays must be non-negative")
        if not np.all(np.isfinite(g)):
            raise ValueError("tap gains must be finite")
        object.__setattr__(self, "delay_samples", d)
        object.__setattr__(self, "gains", g)

    @classmethod
    def identity(cls) -> "ChannelRealization":
        return cls(np.array([0]), np.array([1.0 + 0j]))

    @property
    def taps(self):
        return list(zip(self.delay_samples.tolist(), self.gains.tolist()))

    @property
    def max_delay(self) -> int:
        return int(self.delay_samples.max())

    def impulse_response(self) -> np.ndarray:
        h = np.zeros(self.max_delay + 1, dtype=complex)
        np.add.at(h, self.delay_samples, self.gains)
        return h


def _carrier_rotation(profile: ChannelProfile) -> np.ndarray:
    # exact physical delay, before rounding to samples
    return np.exp(-2j * np.pi * profile.f_c * np.asarray(profile.delays))


def draw_channel(profile: ChannelProfile, fs: float, rng: np.random.Generator) -> ChannelRealization:
    """One Rayleigh block-fading realization of ``profile``."""
    if not profile.fading:
        return mean_channel(profile, fs)
    powers = np.asarray(profile.mean_powers)
    z = rng.standard_normal((2, profile.n_paths))
    gains = np.sqrt(powers / 2) * (z[0] + 1j * z[1])
    delays = np.rint(np.asarray(profile.delays) * fs).astype(int)
    return ChannelRealization(delays, gains * _carrier_rotation(profile))


def mean_channel(profile: ChannelProfile, fs: float) -> ChannelRealization:
    """Deterministic channel with each tap at its RMS amplitude.

    Used as the known multipath channel in noiseless end-to-end checks.
    """
    gains = np.sqrt(np.asarray(profile.mean_powers)) * _carrier_rotation(profile)
    delays = np.rint(np.asarray(profile.delays) * fs).astype(int)
    return ChannelRealization(delays, gains)


def apply_channel(x: BasebandSignal, ch: ChannelRealization) -> BasebandSignal:
    """Tapped delay line; the output grows by the largest tap delay."""
    xs = x.samples
    y = np.zeros(xs.size + ch.max_delay, dtype=complex)
    for d, g in zip(ch.delay_samples, ch.gains):
        y[d:d + xs.size] += g * xs
    return BasebandSignal(y, x.fs)


def noise_variance(snr_db: float, signal_power_ref: float) -> float:
    if not signal_power_ref > 0:
        raise ValueError("reference signal power must be positive")
    if np.isposinf(snr_db):
        return 0.0
    return signal_power_ref / 10.0 ** (snr_db / 10.0)


def complex_noise(n: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((2, n))
    return np.sqrt(variance / 2) * (z[0] + 1j * z[1])


def add_awgn(x: BasebandSignal, snr_db: float, signal_power_ref: float, rng: np.random.Generator) -> BasebandSignal:
    """Add circular white Gaussian noise of variance ``signal_power_ref / snr``.

    ``snr_db = inf`` leaves the signal untouched and draws nothing.
    """
    var = noise_variance(snr_db, signal_power_ref)
    if var == 0.0:
        return x
    return BasebandSignal(x.samples + complex_noise(len(x), var, rng), x.fs)


def insert_offset(x: BasebandSignal, offset: int, rng: np.random.Generator, noise_var: float = 0.0) -> BasebandSignal:
    """Prepend ``offset`` noise-only samples, emulating an unknown arrival time."""
    if offset < 0:
        raise ValueError("offset must be non-negative")
    if offset == 0:
        return x
    lead = complex_noise(offset, noise_var, rng) if noise_var > 0 else np.zeros(offset, dtype=complex)
    return BasebandSignal(np.concatenate([lead, x.samples]), x.fs)


def frequency_response(ch: ChannelRealization, K: int) -> np.ndarray:
    """K-point DFT of the tap impulse response."""
    k = np.arange(K)
    return np.exp(-2j * np.pi * np.outer(k, ch.delay_samples) / K) @ ch.gains


def chirp_domain_response(ch: ChannelRealization, params: ChirpParams, fold=None, offset: int = 0) -> np.ndarray:
    """Diagonal of the channel as seen by the chirp-domain receiver.

    The receiver window starts ``offset`` samples after the first path and
    folds ``fold`` trailing samples back onto the symbol (None: enough to
    cover every tap). A delay of e samples also shifts a chirp in frequency
    by mu*e/fs, so each tap is scaled by the mean of that residual tone over
    the samples the window keeps. With mu = 0, offset 0 and full folding the
    result is the plain DFT of the taps. Off-diagonal leakage is not
    represented.
    """
    N = params.N
    alpha = params.mu / params.fs ** 2
    rel = ch.delay_samples - offset
    if fold is None:
        fold = max(int(rel.max()), 0)
    factors = np.empty(ch.gains.size, dtype=complex)
    for i, e in enumerate(rel):
        n = np.arange(max(e, 0), min(N + e, N + fold))
        factors[i] = np.exp(1j * np.pi * alpha * (e * e - 2.0 * n * e)).sum() / N
    k = np.arange(params.K)
    return np.exp(-2j * np.pi * np.outer(k, rel) / N) @ (ch.gains * factors)


def chirp_domain_matrix(ch: ChannelRealization, params: ChirpParams, fold=None, offset: int = 0) -> np.ndarray:
    """Full K x K map from transmitted to received chirp coefficients.

    Same window conventions as :func:`chirp_domain_response`, whose output
    is this matrix's diagonal. Built as ``F D C D* F^H`` with C the sparse
    windowed tapped delay line and D the chirp, so the cost is O(K^2 log K).
    """
    N = params.N
    alpha = params.mu / params.fs ** 2
    rel = ch.delay_samples - offset
    if fold is None:
        fold = max(int(rel.max()), 0)
    # M[n, n'] = conj(c[n mod N]) * folded channel * c[n'] in the de-chirped domain
    M = np.zeros((N, N), dtype=complex)
    src = np.arange(N)
    for e, g in zip(rel, ch.gains):
        dst = src + e
        keep = (dst >= 0) & (dst < N + fold)
        n, n_src = dst[keep], src[keep]
        # re-chirping the folded tail with c[n mod N] and de-chirping with c[n] leave c[n']/c[n]
        phase = np.exp(1j * np.pi * alpha * (n_src.astype(float) ** 2 - n.astype(float) ** 2))
        np.add.at(M, (n % N, n_src), g * phase)
    FM = np.fft.fft(M, axis=0, norm="ortho")
    return np.fft.fft(FM.conj().T, axis=0, norm="ortho").conj().T
