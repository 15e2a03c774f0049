"""INI experiment files.

Sections mirror the library types: ``[chirp]``, ``[frame]``, ``[channel]``,
``[experiment]`` and ``[receiver]``. List values are comma separated,
durations are in milliseconds and the pilot portion accepts fractions
such as ``1/8``. Pass ``"default"`` to load the bundled file.
"""

from __future__ import annotations

import configparser
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, List, Union

from .channel import ChannelProfile
from .errors import ConfigError
from .harness import CSI, ExperimentSpec, FrameGrid
from .receiver import EQUALIZERS, ReceiverOptions
from .transmitter import Access, Modulation

DEFAULT = "default"

_KNOWN = {
    "chirp": {"fs", "mu"},
    "frame": {"k", "pilot_portion", "modulation", "access", "n_users", "preamble_len",
              "t_pause_ms", "t_zp_ms", "seed", "energy"},
    "channel": {"delays_ms", "mean_powers", "f_c", "fading"},
    "experiment": {"snr_db", "n_packets", "master_seed", "csi", "probe_packets", "post_packets"},
    "receiver": {"lost_ratio", "fold", "first_path_ratio", "equalizer"},
}


def default_text() -> str:
    return resources.files("mcdm").joinpath("default.ini").read_text(encoding="utf-8")


def _parse(key: str, raw: str, conv: Callable):
    try:
        return conv(raw.strip())
    except (ValueError, ZeroDivisionError, KeyError) as exc:
        raise ConfigError(f"cannot parse {raw!r} ({exc})", key=key) from None


def _list(key: str, raw: str, conv: Callable) -> List:
    items = [s for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError("empty list", key=key)
    return [_parse(key, s, conv) for s in items]


def _fraction(s: str) -> float:
    return float(Fraction(s))


def _optional(conv: Callable) -> Callable:
    return lambda s: None if s.lower() in ("none", "") else conv(s)


def _enum(cls):
    return lambda s: cls(s.upper())


def _fading(s: str) -> bool:
    return {"rayleigh": True, "none": False}[s.lower()]


def _choice(s: str, allowed) -> str:
    if s not in allowed:
        raise ValueError(f"expected one of {', '.join(allowed)}")
    return s


def _int(s: str) -> int:
    return int(s, 0)


class _Section:
    """Typed accessor that tags every error with ``section.key``."""

    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.items: Dict[str, str] = dict(parser.items(name)) if parser.has_section(name) else {}

    def get(self, key: str, conv: Callable, default=None):
        if key not in self.items:
            return default
        return _parse(f"{self.name}.{key}", self.items[key], conv)

    def get_list(self, key: str, conv: Callable, default=None):
        if key not in self.items:
            return default
        return _list(f"{self.name}.{key}", self.items[key], conv)


def parse_config(text: str) -> ExperimentSpec:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed file: {exc.message}", key="file") from None
    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError("unknown section", key=section)
        for key in parser.options(section):
            if key not in _KNOWN[section]:
                raise ConfigError("unknown key", key=f"{section}.{key}")

    chirp, frame = _Section(parser, "chirp"), _Section(parser, "frame")
    channel, exp = _Section(parser, "channel"), _Section(parser, "experiment")
    rx = _Section(parser, "receiver")

    grid_defaults = FrameGrid()
    mu = chirp.get("mu", lambda s: None if s.lower() == "table" else float(s))
    t_pause = frame.get("t_pause_ms", float)
    t_zp = frame.get("t_zp_ms", float)
    try:
        grid = FrameGrid(
            K=tuple(frame.get_list("k", _int, grid_defaults.K)),
            pilot_portions=tuple(frame.get_list("pilot_portion", _fraction, grid_defaults.pilot_portions)),
            modulations=tuple(frame.get_list("modulation", _enum(Modulation), grid_defaults.modulations)),
            accesses=tuple(frame.get_list("access", _enum(Access), grid_defaults.accesses)),
            n_users=tuple(frame.get_list("n_users", _int, grid_defaults.n_users)),
            mu=mu,
            fs=chirp.get("fs", float, grid_defaults.fs),
            preamble_len=frame.get("preamble_len", _int),
            t_pause=grid_defaults.t_pause if t_pause is None else t_pause * 1e-3,
            t_zp=grid_defaults.t_zp if t_zp is None else t_zp * 1e-3,
            seed=frame.get("seed", _int, 0),
            energy=frame.get("energy", float, 1.0),
        )
        if any(k < 2 for k in grid.K):
            raise ConfigError("subcarrier counts must be at least 2", key="frame.k")
        if not grid.fs > 0:
            raise ConfigError("sample rate must be positive", key="chirp.fs")
        # builds every configuration once so bad combinations surface here
        grid.configs()

        delays = channel.get_list("delays_ms", float)
        powers = channel.get_list("mean_powers", float)
        if (delays is None) != (powers is None):
            raise ConfigError("delays_ms and mean_powers must be given together", key="channel")
        kwargs = {}
        if delays is not None:
            kwargs["channel"] = ChannelProfile(
                delays=tuple(d * 1e-3 for d in delays),
                mean_powers=tuple(powers),
                f_c=channel.get("f_c", float, 100e3),
                fading=channel.get("fading", _fading, True),
            )
        elif channel.items:
            raise ConfigError("channel settings need delays_ms and mean_powers", key="channel")

        receiver = ReceiverOptions(
            first_path_ratio=rx.get("first_path_ratio", _optional(float)),
            lost_ratio=rx.get("lost_ratio", float, 5.0),
            fold=rx.get("fold", _optional(_int), 0),
            equalizer=rx.get("equalizer", lambda s: _choice(s.lower(), EQUALIZERS), "diagonal"),
        )
        return ExperimentSpec(
            frame=grid,
            snr_grid=tuple(exp.get_list("snr_db", float, ExperimentSpec.snr_grid)),
            n_packets=exp.get("n_packets", _int, 1000),
            master_seed=exp.get("master_seed", _int, 0),
            csi=exp.get("csi", lambda s: CSI(s.lower()), CSI.ESTIMATED),
            receiver=receiver,
            probe_packets=exp.get("probe_packets", _int, 10),
            post_packets=exp.get("post_packets", _int, 10),
            **kwargs,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        # capacity and framing violations from the library types
        raise ConfigError(str(exc), key="frame") from None


def load_config(source: Union[str, Path] = DEFAULT) -> ExperimentSpec:
    if str(source) == DEFAULT:
        return parse_config(default_text())
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", key="config") from None
    return parse_config(text)
