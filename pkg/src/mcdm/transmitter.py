"""Frame configuration, bit mapping, subcarrier allocation and packet assembly."""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional

import numpy as np

from .chirp import BasebandSignal, ChirpParams, idoct_fast
from .errors import CapacityError, ConfigError, FramingError

#: Preamble length in seconds and the pause/guard durations of the simulated system.
PREAMBLE_DURATION = 1.31e-3
PAUSE_DURATION = 1.54e-3
GUARD_DURATION = 2.56e-3

#: User id that carries dummy symbols on remainder subcarriers (never scored).
NULL_USER = 0


class Modulation(str, enum.Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"

    @property
    def bits_per_symbol(self) -> int:
        return 1 if self is Modulation.BPSK else 2

    @property
    def constellation(self) -> np.ndarray:
        """Points ordered by gray label, i.e. ``constellation[int(bits)]``."""
        if self is Modulation.BPSK:
            return np.array([1.0 + 0j, -1.0 + 0j])
        # label b0 b1 -> b0 selects the imaginary sign, b1 the real sign
        return np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) / np.sqrt(2)


class Access(str, enum.Enum):
    BLOCK = "BLOCK"
    COMB = "COMB"


@dataclass(frozen=True)
class FrameConfig:
    """Everything the transmitter needs to build one packet."""

    chirp: ChirpParams
    modulation: Modulation = Modulation.BPSK
    pilot_count: int = 0
    n_users: int = 1
    access: Access = Access.BLOCK
    preamble_len: Optional[int] = None
    t_pause: float = PAUSE_DURATION
    t_zp: float = GUARD_DURATION
    seed: int = 0
    energy: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "modulation", Modulation(self.modulation))
        object.__setattr__(self, "access", Access(self.access))
        K = self.chirp.K
        if self.pilot_count == 0:
            object.__setattr__(self, "pilot_count", K // 4)
        if not 1 <= self.pilot_count <= K or K % self.pilot_count:
            raise ConfigError(f"pilot count {self.pilot_count} must divide K={K}", key="pilot_count")
        if self.preamble_len is None:
            object.__setattr__(self, "preamble_len", int(round(PREAMBLE_DURATION * self.chirp.fs)))
        if self.preamble_len < 1:
            raise ConfigError("preamble needs at least one chip", key="preamble_len")
        if self.n_users < 1:
            raise ConfigError("at least one user is required", key="n_users")
        if self.n_users > K - self.pilot_count:
            raise CapacityError(
                f"{self.n_users} users exceed {K - self.pilot_count} data subcarriers"
            )
        if self.t_pause < 0 or self.t_zp < 0:
            raise ConfigError("durations must be non-negative", key="t_pause/t_zp")
        if not self.energy > 0:
            raise ConfigError("symbol energy must be positive", key="energy")

    @classmethod
    def standard(cls, K: int, pilot_portion: float = 0.25, **kwargs) -> "FrameConfig":
        pilot_count = K * pilot_portion
        if pilot_count != int(pilot_count):
            raise ConfigError(f"pilot portion {pilot_portion} gives non-integer count", key="pilot_portion")
        return cls(chirp=ChirpParams.standard(K), pilot_count=int(pilot_count), **kwargs)

    @property
    def K(self) -> int:
        return self.chirp.K

    @property
    def pilot_spacing(self) -> int:
        return self.K // self.pilot_count

    @property
    def pilot_portion(self) -> float:
        return self.pilot_count / self.K

    @property
    def pause_samples(self) -> int:
        return int(round(self.t_pause * self.chirp.fs))

    @property
    def zp_samples(self) -> int:
        return int(round(self.t_zp * self.chirp.fs))

    @property
    def config_id(self) -> str:
        return (
            f"K{self.K}-Kp{self.pilot_count}-{self.modulation.value}"
            f"-{self.access.value}-U{self.n_users}"
        )

    def replace(self, **changes) -> "FrameConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class UserAllocation:
    pilot_indices: np.ndarray
    users: Dict[int, np.ndarray]
    null_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def user_ids(self):
        return sorted(self.users)

    def data_subcarrier_count(self) -> int:
        return sum(v.size for v in self.users.values())


@dataclass(frozen=True)
class Segment:
    start: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class PacketLayout:
    preamble: Segment
    pause: Segment
    symbol: Segment
    zero_pad: Segment

    @classmethod
    def for_config(cls, config: FrameConfig) -> "PacketLayout":
        lengths = [config.preamble_len, config.pause_samples, config.chirp.N, config.zp_samples]
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        return cls(*(Segment(int(s), int(n)) for s, n in zip(starts, lengths)))

    @property
    def total(self) -> int:
        return self.zero_pad.stop


@dataclass(frozen=True)
class Packet:
    signal: BasebandSignal
    layout: PacketLayout
    tx_bits: Dict[int, np.ndarray]
    tx_symbols: np.ndarray


def gray_map(bits, modulation: Modulation) -> np.ndarray:
    """Map bits onto unit-energy gray-coded symbols."""
    modulation = Modulation(modulation)
    bits = np.asarray(bits, dtype=np.int64)
    bps = modulation.bits_per_symbol
    if bits.size % bps:
        raise FramingError(f"{bits.size} bits do not fill whole {modulation.value} symbols")
    labels = bits.reshape(-1, bps) @ (1 << np.arange(bps - 1, -1, -1))
    return modulation.constellation[labels]


def gray_demap(labels, modulation: Modulation) -> np.ndarray:
    """Inverse of the label computation in :func:`gray_map`."""
    bps = Modulation(modulation).bits_per_symbol
    labels = np.asarray(labels, dtype=np.int64)
    shifts = np.arange(bps - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).astype(np.int8).ravel()


def assign_users(data_indices, n_users: int, access: Access):
    """Split ascending data subcarriers among users 1..n_users.

    Returns ``(users, remainder)``; every user gets the same count and the
    leftover indices go to the null user.
    """
    data = np.sort(np.asarray(data_indices, dtype=int))
    if n_users < 1:
        raise CapacityError("need at least one user")
    if n_users > data.size:
        raise CapacityError(f"{n_users} users exceed {data.size} data subcarriers")
    per_user = data.size // n_users
    used = per_user * n_users
    if Access(access) is Access.BLOCK:
        users = {u + 1: data[u * per_user:(u + 1) * per_user] for u in range(n_users)}
    else:
        users = {u + 1: data[u:used:n_users] for u in range(n_users)}
    return users, data[used:]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@functools.lru_cache(maxsize=256)
def allocate_subcarriers(config: FrameConfig) -> UserAllocation:
    """Comb pilots at multiples of L, data subcarriers split per access scheme."""
    K, L = config.K, config.pilot_spacing
    pilots = np.arange(config.pilot_count) * L
    data = np.setdiff1d(np.arange(K), pilots)
    users, remainder = assign_users(data, config.n_users, config.access)
    return UserAllocation(
        pilot_indices=_frozen(pilots),
        users={u: _frozen(v) for u, v in users.items()},
        null_indices=_frozen(remainder),
    )


@functools.lru_cache(maxsize=256)
def gen_preamble(n_chips: int, seed: int = 0, fs: float = 1.0) -> BasebandSignal:
    """Pseudo-random antipodal preamble, one chip per sample."""
    rng = np.random.default_rng([seed, 0])
    chips = 1.0 - 2.0 * rng.integers(0, 2, n_chips)
    return BasebandSignal(chips, fs)


@functools.lru_cache(maxsize=256)
def pilot_symbols(config: FrameConfig) -> np.ndarray:
    """Known BPSK pilot values, deterministic in the config seed."""
    rng = np.random.default_rng([config.seed, 1])
    return _frozen((1.0 - 2.0 * rng.integers(0, 2, config.pilot_count)).astype(complex))


def preamble_for(config: FrameConfig) -> BasebandSignal:
    return gen_preamble(config.preamble_len, config.seed, config.chirp.fs)


def random_user_bits(config: FrameConfig, allocation: UserAllocation, rng) -> Dict[int, np.ndarray]:
    bps = config.modulation.bits_per_symbol
    return {
        u: rng.integers(0, 2, idx.size * bps, dtype=np.int8)
        for u, idx in sorted(allocation.users.items())
    }


def assemble_frequency_vector(
    config: FrameConfig,
    allocation: UserAllocation,
    user_bits: Mapping[int, np.ndarray],
    pilots: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Place pilots, user symbols and null-user dummies on the K subcarriers."""
    s = np.full(config.K, np.nan, dtype=complex)
    s[allocation.pilot_indices] = pilot_symbols(config) if pilots is None else pilots
    # null-user dummies are fixed +1 so the receiver never needs them
    s[allocation.null_indices] = 1.0
    bps = config.modulation.bits_per_symbol
    for u, idx in allocation.users.items():
        bits = np.asarray(user_bits[u])
        if bits.size != idx.size * bps:
            raise FramingError(f"user {u} supplied {bits.size} bits, needs {idx.size * bps}")
        s[idx] = gray_map(bits, config.modulation)
    if np.isnan(s).any():
        raise FramingError("allocation left subcarriers unassigned")
    return s


def build_packet(config: FrameConfig, s, tx_bits: Optional[Mapping[int, np.ndarray]] = None) -> Packet:
    """Preamble, pause, scaled chirp symbol and trailing zero padding."""
    s = np.asarray(s, dtype=complex)
    layout = PacketLayout.for_config(config)
    samples = np.zeros(layout.total, dtype=complex)
    samples[: layout.preamble.length] = preamble_for(config).samples
    sym = idoct_fast(s, config.chirp).samples
    samples[layout.symbol.start:layout.symbol.stop] = np.sqrt(config.energy) * sym
    return Packet(
        signal=BasebandSignal(samples, config.chirp.fs),
        layout=layout,
        tx_bits=dict(tx_bits or {}),
        tx_symbols=s,
    )


def transmit(config: FrameConfig, allocation: UserAllocation, user_bits) -> Packet:
    s = assemble_frequency_vector(config, allocation, user_bits)
    return build_packet(config, s, user_bits)
