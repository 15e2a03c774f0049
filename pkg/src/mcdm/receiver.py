"""Coherent receiver: preamble sync, chirp demodulation, pilot channel
estimation, linear interpolation and per-subcarrier ML detection."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .channel import ChannelRealization, apply_channel, chirp_domain_matrix, chirp_domain_response
from .chirp import BasebandSignal, ChirpParams, chirp_phase, doct_fast
from .errors import AlignmentError, DimensionError, PacketLost, SearchError, SingularityError
from .transmitter import (
    FrameConfig,
    Modulation,
    PacketLayout,
    UserAllocation,
    gray_demap,
    pilot_symbols,
    preamble_for,
)


@dataclass(frozen=True)
class SyncResult:
    t_hat: int
    metric_peak: float
    metric_trace: np.ndarray


@dataclass(frozen=True)
class ChannelEstimate:
    h_pilot: np.ndarray
    h_full: np.ndarray


@dataclass(frozen=True)
class DetectionResult:
    s_soft: np.ndarray
    s_hard: np.ndarray
    bits: Dict[int, np.ndarray]
    erasures: Dict[int, np.ndarray]
    sync: Optional[SyncResult] = None
    estimate: Optional[ChannelEstimate] = None


EQUALIZERS = ("diagonal", "full")


@dataclass(frozen=True)
class ReceiverOptions:
    """Tunable receiver behaviour.

    Timing is the correlation argmax unless ``first_path_ratio`` is set, in
    which case the earliest lag reaching both ``first_path_ratio * peak``
    and ``floor_factor * median(metric)`` wins. ``fold`` zero-pad samples
    are folded back onto the symbol before the transform (None folds the
    whole pad). A packet whose peak is under ``lost_ratio`` times the mean
    metric is reported lost.

    ``equalizer="full"`` solves the complete K x K least-squares problem
    instead of the per-subcarrier division, which removes the leakage a
    path delay causes between chirped subcarriers. It needs the true
    channel realization as CSI.
    """

    first_path_ratio: Optional[float] = None
    floor_factor: float = 10.0
    lost_ratio: float = 5.0
    fold: Optional[int] = 0
    window: Optional[int] = None
    equalizer: str = "diagonal"

    def __post_init__(self):
        if self.equalizer not in EQUALIZERS:
            raise ValueError(f"equalizer must be one of {EQUALIZERS}, got {self.equalizer!r}")


def synchronize(
    rx: BasebandSignal,
    preamble: BasebandSignal,
    window: int,
    first_path_ratio: Optional[float] = None,
    floor_factor: float = 0.0,
) -> SyncResult:
    """Correlate against the known preamble over lags ``[0, window)``.

    The metric is ``|sum_n p[n] conj(rx[n + tau])|^2``. With the default
    arguments ``t_hat`` is its first maximum.
    """
    p = preamble.samples
    r = rx.samples
    if window < 1:
        raise SearchError(f"search window must be positive, got {window}")
    if window + p.size - 1 > r.size:
        raise SearchError(f"window {window} + preamble {p.size} overruns {r.size} received samples")
    corr = np.correlate(r[: window + p.size - 1], p, mode="valid")
    trace = corr.real ** 2 + corr.imag ** 2
    peak_at = int(np.argmax(trace))
    peak = float(trace[peak_at])
    t_hat = peak_at
    if first_path_ratio is not None:
        threshold = max(first_path_ratio * peak, floor_factor * float(np.median(trace)))
        if threshold <= peak:
            t_hat = int(np.argmax(trace >= threshold))
    return SyncResult(t_hat=t_hat, metric_peak=peak, metric_trace=trace)


def demodulate(
    rx: BasebandSignal,
    layout: PacketLayout,
    t_hat: int,
    params: ChirpParams,
    fold: int = 0,
) -> np.ndarray:
    """Chirp-domain vector of the symbol located at ``t_hat``.

    The first ``fold`` samples after the symbol carry the multipath tail.
    They are de-chirped with the continued chirp and added back modulo N
    before the DFT stage. With ``fold=0`` this is ``doct_fast`` of the
    N-sample symbol segment.
    """
    N = params.N
    start = t_hat + layout.symbol.start
    if start < 0 or start + N > len(rx):
        raise AlignmentError(f"symbol span [{start}, {start + N}) outside {len(rx)} received samples")
    stop = min(start + N + max(fold, 0), len(rx))
    seg = rx.samples[start:stop]
    if seg.size == N:
        return doct_fast(seg, params)
    n = np.arange(seg.size)
    dechirped = seg * chirp_phase(params, n).conj()
    folded = np.bincount(n % N, weights=dechirped.real, minlength=N) + 1j * np.bincount(
        n % N, weights=dechirped.imag, minlength=N
    )
    return doct_fast(folded * chirp_phase(params, n[:N]), params)


def estimate_pilot_channel(y_p, s_p) -> np.ndarray:
    """Least-squares (ML under AWGN) estimate with a diagonal pilot matrix."""
    y_p = np.asarray(y_p, dtype=complex)
    s_p = np.asarray(s_p, dtype=complex)
    if y_p.shape != s_p.shape or y_p.ndim != 1:
        raise DimensionError("pilot observations and symbols must be equal-length vectors")
    power = np.abs(s_p) ** 2
    if np.any(power == 0):
        raise SingularityError("pilot symbol with zero amplitude")
    return y_p * s_p.conj() / power


def interpolate_channel(h_pilot, K: int, L: int) -> np.ndarray:
    """Linear interpolation between comb pilots at k = 0, L, 2L, ...

    Subcarriers past the last pilot hold its value.
    """
    h_pilot = np.asarray(h_pilot, dtype=complex)
    Kp = h_pilot.size
    if Kp * L != K:
        raise DimensionError(f"K={K} is not {Kp} pilots x spacing {L}")
    k = np.arange(K)
    m = k // L
    frac = (k % L) / L
    nxt = np.minimum(m + 1, Kp - 1)
    h = (1 - frac) * h_pilot[m] + frac * h_pilot[nxt]
    tail = m == Kp - 1
    h[tail] = h_pilot[-1]
    return h


def slice_symbols(s_soft, modulation: Modulation) -> np.ndarray:
    """Gray labels of the nearest constellation points (ties to the lower label)."""
    points = Modulation(modulation).constellation
    dist = np.abs(np.asarray(s_soft)[:, None] - points[None, :])
    return np.argmin(dist, axis=1)


def detect(
    y,
    h_full,
    modulation: Modulation,
    allocation: UserAllocation,
    energy: float = 1.0,
) -> DetectionResult:
    """Zero-forcing per subcarrier, which is ML for the diagonal model."""
    modulation = Modulation(modulation)
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h_full, dtype=complex)
    if y.shape != h.shape:
        raise DimensionError("received vector and channel must have the same length")
    power = np.abs(h) ** 2
    dead = power == 0
    s_soft = np.zeros_like(y)
    ok = ~dead
    s_soft[ok] = y[ok] * h[ok].conj() / power[ok] / np.sqrt(energy)
    return _decide(s_soft, dead, modulation, allocation)


def detect_full(y, H, modulation: Modulation, allocation: UserAllocation, energy: float = 1.0) -> DetectionResult:
    """Least-squares ``(H^H H)^-1 H^H y`` with a full channel matrix, then slicing."""
    y = np.asarray(y, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if H.shape != (y.size, y.size):
        raise DimensionError(f"channel matrix must be {y.size} x {y.size}, got {H.shape}")
    try:
        s_soft = np.linalg.solve(H, y)
    except np.linalg.LinAlgError:
        s_soft = np.linalg.lstsq(H, y, rcond=None)[0]
    s_soft = s_soft / np.sqrt(energy)
    return _decide(s_soft, np.zeros(y.size, dtype=bool), Modulation(modulation), allocation)


def _decide(s_soft, dead, modulation: Modulation, allocation: UserAllocation) -> DetectionResult:
    labels = slice_symbols(s_soft, modulation)
    s_hard = modulation.constellation[labels]
    bps = modulation.bits_per_symbol
    bits, erasures = {}, {}
    for u, idx in allocation.users.items():
        bits[u] = gray_demap(labels[idx], modulation)
        erasures[u] = np.repeat(dead[idx], bps)
    return DetectionResult(s_soft=s_soft, s_hard=s_hard, bits=bits, erasures=erasures)


def cancel_preamble_echo(rx: BasebandSignal, preamble: BasebandSignal, ch: ChannelRealization, start: int = 0) -> BasebandSignal:
    """Subtract the known preamble as seen through a known channel.

    Paths longer than the pause drag the preamble into the symbol window;
    with perfect channel knowledge that echo can be removed exactly.
    """
    echo = apply_channel(preamble, ch).samples
    out = np.array(rx.samples)
    stop = min(start + echo.size, out.size)
    if stop > start:
        out[start:stop] -= echo[: stop - start]
    return BasebandSignal(out, rx.fs)


def receive_packet(
    rx: BasebandSignal,
    config: FrameConfig,
    allocation: UserAllocation,
    preamble: Optional[BasebandSignal] = None,
    csi=None,
    options: ReceiverOptions = ReceiverOptions(),
    true_start: int = 0,
) -> DetectionResult:
    """Full receive chain for one packet.

    ``csi`` switches to perfect channel knowledge and replaces pilot
    estimation. It is either a length-K coefficient array, or the true
    :class:`ChannelRealization` with the packet starting at ``true_start``
    in ``rx``; the coefficients are then computed for the synchronized
    window, and the preamble echo is cancelled before demodulation. Raises
    :class:`PacketLost` when the sync peak is not convincing.
    """
    params = config.chirp
    layout = PacketLayout.for_config(config)
    preamble = preamble_for(config) if preamble is None else preamble
    window = options.window
    if window is None:
        window = max(len(rx) - layout.symbol.start - params.N + 1, 1)
    sync = synchronize(rx, preamble, window, options.first_path_ratio, options.floor_factor)
    mean_metric = float(np.mean(sync.metric_trace))
    if sync.metric_peak < options.lost_ratio * mean_metric:
        raise PacketLost(sync.metric_peak, mean_metric, options.lost_ratio)
    if isinstance(csi, ChannelRealization):
        rx = cancel_preamble_echo(rx, preamble, csi, true_start)
    fold = config.zp_samples if options.fold is None else options.fold
    y = demodulate(rx, layout, sync.t_hat, params, fold=fold)
    scale = np.sqrt(config.energy)
    if options.equalizer == "full":
        if isinstance(csi, ChannelRealization):
            csi = chirp_domain_matrix(csi, params, fold=fold, offset=sync.t_hat - true_start)
        if csi is None or np.ndim(csi) != 2:
            raise DimensionError("the full equalizer needs the channel realization or a K x K matrix")
        det = detect_full(y, csi, config.modulation, allocation, config.energy)
        H = np.asarray(csi)
        return dataclasses.replace(
            det, sync=sync, estimate=ChannelEstimate(h_pilot=np.diag(H)[allocation.pilot_indices], h_full=np.diag(H))
        )
    if csi is None:
        pilots = allocation.pilot_indices
        h_p = estimate_pilot_channel(y[pilots] / scale, pilot_symbols(config))
        h_full = interpolate_channel(h_p, params.K, config.pilot_spacing)
    else:
        if isinstance(csi, ChannelRealization):
            csi = chirp_domain_response(csi, params, fold=fold, offset=sync.t_hat - true_start)
        h_full = np.asarray(csi, dtype=complex)
        h_p = h_full[allocation.pilot_indices]
    det = detect(y, h_full, config.modulation, allocation, config.energy)
    return DetectionResult(
        s_soft=det.s_soft,
        s_hard=det.s_hard,
        bits=det.bits,
        erasures=det.erasures,
        sync=sync,
        estimate=ChannelEstimate(h_pilot=h_p, h_full=h_full),
    )
