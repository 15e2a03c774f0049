"""Monte Carlo engine: seeded packet trials, SNR sweeps and adaptive runs.

Every trial draws its randomness from streams keyed by
``(master_seed, trial_index, role)``. Results therefore do not depend on
how trials are split across worker processes. The same trial index also
sees the same channel realization in every configuration, so curves can be
compared packet by packet.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import adaptation
from .channel import (
    ChannelProfile,
    ChannelRealization,
    add_awgn,
    apply_channel,
    default_profile,
    draw_channel,
)
from .chirp import ChirpParams, DEFAULT_FS
from .errors import ConfigError, IncompleteProbeError, MCDMError, PacketLost
from .receiver import ReceiverOptions, receive_packet
from .transmitter import (
    GUARD_DURATION,
    PAUSE_DURATION,
    Access,
    FrameConfig,
    Modulation,
    allocate_subcarriers,
    preamble_for,
    random_user_bits,
    transmit,
)

log = logging.getLogger(__name__)

CSV_HEADER = ("config_id", "K", "Kp", "modulation", "access", "n_users", "snr_db", "user_id", "bits", "errors", "ber")
TRACE_HEADER = ("repetition", "packet_index", "phase", "config_id", "K", "snr_db", "bits", "errors", "ber")

_ROLE_BITS, _ROLE_CHANNEL, _ROLE_NOISE = 0, 1, 2


class Mode(str, enum.Enum):
    SWEEP = "sweep"
    ADAPT = "adapt"
    LOOPBACK = "loopback"


class CSI(str, enum.Enum):
    ESTIMATED = "estimated"
    PERFECT = "perfect"


@dataclass(frozen=True)
class FrameGrid:
    """Lists of values for each adaptive knob; ``configs()`` is their product."""

    K: Tuple[int, ...] = (128, 256, 512, 1024)
    pilot_portions: Tuple[float, ...] = (0.25,)
    modulations: Tuple[Modulation, ...] = (Modulation.BPSK,)
    accesses: Tuple[Access, ...] = (Access.BLOCK,)
    n_users: Tuple[int, ...] = (1,)
    mu: Optional[float] = None
    fs: float = DEFAULT_FS
    preamble_len: Optional[int] = None
    t_pause: float = PAUSE_DURATION
    t_zp: float = GUARD_DURATION
    seed: int = 0
    energy: float = 1.0

    def chirp(self, K: int) -> ChirpParams:
        if self.mu is None:
            return ChirpParams.standard(K, self.fs)
        return ChirpParams(K=K, fs=self.fs, mu=self.mu)

    def make(self, K, pilot_portion, modulation, access, n_users) -> FrameConfig:
        count = K * pilot_portion
        if abs(count - round(count)) > 1e-9:
            raise ConfigError(f"pilot portion {pilot_portion} of K={K} is not an integer", key="pilot_portion")
        return FrameConfig(
            chirp=self.chirp(K),
            modulation=modulation,
            pilot_count=int(round(count)),
            n_users=n_users,
            access=access,
            preamble_len=self.preamble_len,
            t_pause=self.t_pause,
            t_zp=self.t_zp,
            seed=self.seed,
            energy=self.energy,
        )

    def configs(self) -> List[FrameConfig]:
        product = itertools.product(self.K, self.pilot_portions, self.modulations, self.accesses, self.n_users)
        return [self.make(*combo) for combo in product]

    def candidates(self) -> List[FrameConfig]:
        """One configuration per K, other knobs at their first value."""
        first = (self.pilot_portions[0], self.modulations[0], self.accesses[0], self.n_users[0])
        return [self.make(K, *first) for K in self.K]


@dataclass(frozen=True)
class ExperimentSpec:
    frame: FrameGrid = field(default_factory=FrameGrid)
    channel: ChannelProfile = field(default_factory=default_profile)
    snr_grid: Tuple[float, ...] = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0)
    n_packets: int = 1000
    master_seed: int = 0
    mode: Mode = Mode.SWEEP
    csi: CSI = CSI.ESTIMATED
    receiver: ReceiverOptions = ReceiverOptions()
    probe_packets: int = adaptation.STANDARD_PROBE_PACKETS
    post_packets: int = 10

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "csi", CSI(self.csi))
        object.__setattr__(self, "snr_grid", tuple(float(s) for s in self.snr_grid))
        if not self.snr_grid:
            raise ConfigError("empty SNR grid", key="snr_db")
        if self.n_packets < 1:
            raise ConfigError("need at least one packet", key="n_packets")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer", key="master_seed")
        for values, key in ((self.frame.K, "K"), (self.frame.pilot_portions, "pilot_portion"),
                            (self.frame.modulations, "modulation"), (self.frame.accesses, "access"),
                            (self.frame.n_users, "n_users")):
            if not values:
                raise ConfigError("empty grid", key=key)
        self.channel.check_guard(self.frame.t_zp)

    def configs(self) -> List[FrameConfig]:
        return self.frame.configs()


@dataclass
class TrialReport:
    config_id: str
    snr_db: float
    trial_index: int
    per_user: Dict[int, Tuple[int, int]]
    sync_failures: int = 0
    failure: Optional[str] = None

    @property
    def errors(self) -> int:
        return sum(e for e, _ in self.per_user.values())

    @property
    def bits(self) -> int:
        return sum(b for _, b in self.per_user.values())


def trial_rng(master_seed: int, trial_index: int, role: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index, role))
    return np.random.default_rng(ss)


def run_trial(spec: ExperimentSpec, config: FrameConfig, snr_db: float, trial_index: int) -> TrialReport:
    """Transmit one random packet through a fresh channel and score it per user."""
    allocation = allocate_subcarriers(config)
    bits = random_user_bits(config, allocation, trial_rng(spec.master_seed, trial_index, _ROLE_BITS))
    packet = transmit(config, allocation, bits)
    fs = config.chirp.fs

    if spec.mode is Mode.LOOPBACK:
        channel = ChannelRealization.identity()
        snr_db = float("inf")
    else:
        channel = draw_channel(spec.channel, fs, trial_rng(spec.master_seed, trial_index, _ROLE_CHANNEL))
    rx = apply_channel(packet.signal, channel)
    sym = packet.signal.samples[packet.layout.symbol.start:packet.layout.symbol.stop]
    # average received power over the symbol span (expectation over fading)
    power_ref = float(np.mean(np.abs(sym) ** 2)) * float(np.sum(spec.channel.mean_powers))
    rx = add_awgn(rx, snr_db, power_ref, trial_rng(spec.master_seed, trial_index, _ROLE_NOISE))

    csi = channel if spec.csi is CSI.PERFECT else None
    report = TrialReport(config.config_id, snr_db, trial_index, {})
    try:
        det = receive_packet(rx, config, allocation, preamble_for(config), csi, spec.receiver)
    except MCDMError as exc:
        # lost packet: every bit counts as an error
        report.per_user = {u: (b.size, b.size) for u, b in bits.items()}
        report.sync_failures = int(isinstance(exc, PacketLost))
        report.failure = f"{type(exc).__name__}: {exc}"
        log.info("event=trial_failure config=%s snr_db=%g trial=%d reason=%s",
                 config.config_id, snr_db, trial_index, type(exc).__name__)
        return report
    for u, tx in bits.items():
        wrong = (det.bits[u] != tx) | det.erasures[u]
        report.per_user[u] = (int(np.count_nonzero(wrong)), int(tx.size))
    return report


@dataclass
class PointResult:
    """Aggregate of all trials at one (configuration, SNR) point."""

    config: FrameConfig
    snr_db: float
    user_errors: Dict[int, int]
    user_bits: Dict[int, int]
    trial_errors: np.ndarray
    trial_bits: np.ndarray
    sync_failures: int = 0

    @property
    def errors(self) -> int:
        return sum(self.user_errors.values())

    @property
    def bits(self) -> int:
        return sum(self.user_bits.values())

    @property
    def ber(self) -> float:
        return self.errors / self.bits

    def user_ber(self, user: int) -> float:
        return self.user_errors[user] / self.user_bits[user]

    @property
    def trial_ber(self) -> np.ndarray:
        return self.trial_errors / self.trial_bits


def _aggregate(config: FrameConfig, snr_db: float, reports: Sequence[TrialReport]) -> PointResult:
    users = sorted(reports[0].per_user)
    return PointResult(
        config=config,
        snr_db=snr_db,
        user_errors={u: sum(r.per_user[u][0] for r in reports) for u in users},
        user_bits={u: sum(r.per_user[u][1] for r in reports) for u in users},
        trial_errors=np.array([r.errors for r in reports], dtype=np.int64),
        trial_bits=np.array([r.bits for r in reports], dtype=np.int64),
        sync_failures=sum(r.sync_failures for r in reports),
    )


def _run_block(args):
    spec, config, snr_db, start, stop = args
    return [run_trial(spec, config, snr_db, i) for i in range(start, stop)]


def _work_units(spec: ExperimentSpec, chunk: int):
    for config in spec.configs():
        for snr in spec.snr_grid:
            for start in range(0, spec.n_packets, chunk):
                yield spec, config, snr, start, min(start + chunk, spec.n_packets)


@dataclass
class SweepResult:
    points: List[PointResult]

    def point(self, config_id: str, snr_db: float) -> PointResult:
        for p in self.points:
            if p.config.config_id == config_id and p.snr_db == float(snr_db):
                return p
        raise KeyError((config_id, snr_db))

    def curve(self, config_id: str) -> List[PointResult]:
        return [p for p in self.points if p.config.config_id == config_id]

    def rows(self):
        for p in self.points:
            c = p.config
            head = (c.config_id, c.K, c.pilot_count, c.modulation.value, c.access.value, c.n_users, f"{p.snr_db:g}")
            for u in sorted(p.user_errors):
                yield head + (u, p.user_bits[u], p.user_errors[u], repr(p.user_ber(u)))
            yield head + ("all", p.bits, p.errors, repr(p.ber))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(self.rows())
        return buf.getvalue()


def sweep(spec: ExperimentSpec, jobs: int = 1, chunk: int = 100) -> SweepResult:
    """BER at every (configuration, SNR) grid point, ``n_packets`` trials each."""
    units = list(_work_units(spec, chunk))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(_run_block, units))
    else:
        blocks = [_run_block(u) for u in units]

    points, pending = [], []
    for unit, reports in zip(units, blocks):
        pending.extend(reports)
        _, config, snr, _, stop = unit
        if stop == spec.n_packets:
            points.append(_aggregate(config, snr, pending))
            pending = []
    return SweepResult(points)


def loopback(spec: ExperimentSpec, jobs: int = 1) -> SweepResult:
    """Identity channel, no noise: every packet must come back error free."""
    lb = ExperimentSpec(
        frame=spec.frame, channel=spec.channel, snr_grid=(float("inf"),), n_packets=spec.n_packets,
        master_seed=spec.master_seed, mode=Mode.LOOPBACK, csi=spec.csi, receiver=spec.receiver,
    )
    return sweep(lb, jobs=jobs)


def paired_difference(a: PointResult, b: PointResult) -> Tuple[float, float]:
    """Mean and standard error of ``BER_a - BER_b`` over packets with equal trial index."""
    d = a.trial_ber - b.trial_ber
    return float(d.mean()), float(d.std(ddof=1) / np.sqrt(d.size)) if d.size > 1 else 0.0


@dataclass
class PacketRecord:
    repetition: int
    packet_index: int
    phase: str
    config: FrameConfig
    snr_db: float
    errors: int
    bits: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits


@dataclass
class AdaptRun:
    decision: adaptation.AdaptationDecision
    trace: List[PacketRecord]

    @property
    def chosen(self) -> FrameConfig:
        return self.decision.chosen

    def post_ber(self) -> float:
        post = [r for r in self.trace if r.phase == "post"]
        bits = sum(r.bits for r in post)
        return sum(r.errors for r in post) / bits if bits else float("nan")


def adapt_run(spec: ExperimentSpec, repetition: int = 0, snr_db: Optional[float] = None) -> AdaptRun:
    """Probe each candidate, pick the lowest BER, then keep transmitting with it."""
    snr = spec.snr_grid[0] if snr_db is None else snr_db
    candidates = spec.frame.candidates()
    schedule = adaptation.default_schedule(candidates, spec.probe_packets)
    probed = set(schedule.candidates)
    if any(c not in probed for c in candidates):
        raise IncompleteProbeError(
            f"{len(candidates)} candidates cannot share {spec.probe_packets} probe packets"
        )
    per_run = spec.probe_packets + spec.post_packets
    base = repetition * per_run
    trace, tally = [], {c: [0, 0] for c in candidates}
    for index, config in schedule:
        r = run_trial(spec, config, snr, base + index - 1)
        tally[config][0] += r.errors
        tally[config][1] += r.bits
        trace.append(PacketRecord(repetition, index, "probe", config, snr, r.errors, r.bits))

    decision = adaptation.select_config({c: tuple(v) for c, v in tally.items()}, candidates)
    log.info("event=adapt_decision repetition=%d snr_db=%g %s", repetition, snr, decision.rationale)
    chosen = adaptation.feedback(decision)
    for j in range(spec.post_packets):
        index = spec.probe_packets + j + 1
        r = run_trial(spec, chosen, snr, base + index - 1)
        trace.append(PacketRecord(repetition, index, "post", chosen, snr, r.errors, r.bits))
    return AdaptRun(decision, trace)


def trace_csv(runs: Sequence[AdaptRun]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for run in runs:
        for r in run.trace:
            writer.writerow((r.repetition, r.packet_index, r.phase, r.config.config_id, r.config.K,
                             f"{r.snr_db:g}", r.bits, r.errors, repr(r.ber)))
    return buf.getvalue()
