"""Orthogonal linear-chirp basis and the discrete chirp transform pair.

Every subcarrier shares one chirp rate, so the quadratic phase factors out
of the basis and the transform is a pointwise de-chirp followed by a DFT.
The direct O(N^2) forms are kept as reference paths for testing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import DimensionError, PrecisionError

#: Sample rate shared by all standard configurations (K * delta_f is constant).
DEFAULT_FS = 65280.0

#: Chirp rates (Hz/s) paired with the subcarrier counts they are used with.
STANDARD_CHIRP_RATES = {128: 7.15e4, 256: 3.58e4, 512: 1.79e4, 1024: 8.94e3}


@dataclass(frozen=True)
class ChirpParams:
    """Critically sampled chirp multicarrier numerology.

    Only ``K``, ``fs`` and ``mu`` are stored; the spacing, symbol duration
    and transform length follow from ``delta_f = fs / K = 1 / T`` and
    ``N = K``, so the orthogonality condition holds by construction.
    """

    K: int
    fs: float = DEFAULT_FS
    mu: float = 0.0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f"K must be an integer >= 2, got {self.K}")
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        if not np.isfinite(self.mu):
            raise ValueError("chirp rate must be finite")
        object.__setattr__(self, "K", int(self.K))

    @classmethod
    def standard(cls, K: int, fs: float = DEFAULT_FS) -> "ChirpParams":
        """Numerology of the simulated system for K in {128, 256, 512, 1024}."""
        try:
            mu = STANDARD_CHIRP_RATES[K]
        except KeyError:
            raise ValueError(f"no tabulated chirp rate for K={K}") from None
        return cls(K=K, fs=fs, mu=mu)

    @property
    def N(self) -> int:
        return self.K

    @property
    def delta_f(self) -> float:
        return self.fs / self.K

    @property
    def T(self) -> float:
        return self.K / self.fs

    @property
    def chirp_bandwidth(self) -> float:
        """Frequency swept by one subcarrier over a symbol (mu * T)."""
        return self.mu * self.T

    def with_mu(self, mu: float) -> "ChirpParams":
        return ChirpParams(K=self.K, fs=self.fs, mu=mu)


@dataclass(frozen=True)
class BasebandSignal:
    """Complex baseband samples at rate ``fs``."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=complex)
        if samples.ndim != 1:
            raise DimensionError("baseband signal must be one-dimensional")
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("baseband signal contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    def energy(self) -> float:
        return float(np.vdot(self.samples, self.samples).real)


def _as_samples(x) -> np.ndarray:
    if isinstance(x, BasebandSignal):
        return x.samples
    return np.asarray(x, dtype=complex)


def chirp_phase(params: ChirpParams, n) -> np.ndarray:
    """Common quadratic phase term exp(j*pi*mu*(n/fs)^2) at sample indices ``n``.

    Indices outside ``[0, N)`` are allowed; the receiver uses the continued
    chirp to de-chirp the zero-padding tail.
    """
    t = np.asarray(n, dtype=float) / params.fs
    return np.exp(1j * np.pi * params.mu * t * t)


def chirp_waveform(params: ChirpParams, m: int) -> BasebandSignal:
    """Sampled, unit-energy chirp of subcarrier ``m``."""
    if not 0 <= m < params.K:
        raise IndexError(f"subcarrier index {m} outside [0, {params.K})")
    n = np.arange(params.N)
    samples = np.exp(2j * np.pi * m * n / params.N) * chirp_phase(params, n)
    return BasebandSignal(samples / np.sqrt(params.N), params.fs)


def chirp_continuous(params: ChirpParams, m: int, t) -> np.ndarray:
    """Continuous-time chirp of subcarrier ``m`` evaluated at times ``t`` (s)."""
    t = np.asarray(t, dtype=float)
    phase = 2 * np.pi * m * params.delta_f * t + np.pi * params.mu * t * t
    return np.exp(1j * phase) / np.sqrt(params.T)


def basis_matrix(params: ChirpParams) -> np.ndarray:
    """K x N matrix whose row k is the sampled chirp of subcarrier k."""
    n = np.arange(params.N)
    k = np.arange(params.K)[:, None]
    return np.exp(2j * np.pi * k * n / params.N) * chirp_phase(params, n) / np.sqrt(params.N)


def doct_matrix(params: ChirpParams) -> np.ndarray:
    """Analysis matrix G with ``doct(x) == G @ x``; G is unitary."""
    return basis_matrix(params).conj()


def cross_correlation(params: ChirpParams, k: int, l: int) -> complex:
    """Inner product of sampled chirps k and l (conjugate on l)."""
    psi_k = chirp_waveform(params, k).samples
    psi_l = chirp_waveform(params, l).samples
    return complex(np.vdot(psi_l, psi_k))


def _check_length(x: np.ndarray, expected: int, what: str):
    if x.ndim != 1 or x.size != expected:
        raise DimensionError(f"{what} must have {expected} entries, got shape {x.shape}")


def doct(x, params: ChirpParams) -> np.ndarray:
    """Direct O(N^2) discrete orthogonal chirp transform."""
    x = _as_samples(x)
    _check_length(x, params.N, "time-domain input")
    return doct_matrix(params) @ x


def idoct(X, params: ChirpParams) -> BasebandSignal:
    """Direct O(N^2) inverse transform: synthesis from chirp coefficients."""
    X = np.asarray(X, dtype=complex)
    _check_length(X, params.K, "coefficient vector")
    return BasebandSignal(basis_matrix(params).T @ X, params.fs)


def fast_path_available(params: ChirpParams) -> bool:
    """Whether the FFT factorization is used for this transform length."""
    N = params.N
    return N & (N - 1) == 0


def doct_fast(x, params: ChirpParams) -> np.ndarray:
    """De-chirp then DFT; falls back to :func:`doct` when N is not a power of two."""
    x = _as_samples(x)
    _check_length(x, params.N, "time-domain input")
    if not fast_path_available(params):
        return doct(x, params)
    n = np.arange(params.N)
    return np.fft.fft(x * chirp_phase(params, n).conj(), norm="ortho")


def idoct_fast(X, params: ChirpParams) -> BasebandSignal:
    X = np.asarray(X, dtype=complex)
    _check_length(X, params.K, "coefficient vector")
    if not fast_path_available(params):
        return idoct(X, params)
    n = np.arange(params.N)
    return BasebandSignal(np.fft.ifft(X, norm="ortho") * chirp_phase(params, n), params.fs)


def oct_quadrature(x: BasebandSignal, f: float, params: ChirpParams, min_oversample: float = 2.0) -> complex:
    """Continuous chirp transform at frequency ``f`` by the trapezoid rule.

    ``x`` holds samples of a continuous signal at ``t = n / x.fs`` and is
    taken as zero outside the sampled support. Reference path for the
    discrete transform, not meant for production use.
    """
    if x.fs < min_oversample * params.fs:
        raise PrecisionError(
            f"input rate {x.fs:g} Hz is below {min_oversample:g} x fs ({params.fs:g} Hz)"
        )
    t = np.arange(len(x)) / x.fs
    kernel = np.exp(-1j * (2 * np.pi * f * t + np.pi * params.mu * t * t))
    return complex(trapezoid(x.samples * kernel, t) / np.sqrt(params.T))
