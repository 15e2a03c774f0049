"""Probe-then-commit configuration selection.

A link transmits a short schedule of probe packets, one contiguous block
per candidate configuration, measures the BER of each block and commits
to the candidate with the lowest BER. Feedback to the transmitter is
modelled as lossless and instantaneous.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Mapping, Sequence, Tuple

from .errors import ConfigError, IncompleteProbeError

log = logging.getLogger(__name__)

STANDARD_CANDIDATES = (128, 256, 512, 1024)
STANDARD_PROBE_PACKETS = 10


@dataclass(frozen=True)
class ProbeSchedule:
    """Ordered ``(packet range, candidate)`` blocks; packet indices start at 1."""

    entries: Tuple[Tuple[range, Any], ...]

    def __post_init__(self):
        expected = 1
        for packets, _ in self.entries:
            if packets.start != expected or packets.step != 1:
                raise ConfigError("probe ranges must be contiguous from packet 1", key="schedule")
            expected = packets.stop

    @property
    def n_packets(self) -> int:
        return self.entries[-1][0].stop - 1 if self.entries else 0

    @property
    def candidates(self) -> List[Any]:
        return [c for _, c in self.entries]

    def candidate_for(self, packet_index: int):
        for packets, c in self.entries:
            if packet_index in packets:
                return c
        raise IndexError(f"packet {packet_index} is outside the probe schedule")

    def __iter__(self):
        for packets, c in self.entries:
            for i in packets:
                yield i, c


def default_schedule(candidates: Sequence[Any] = STANDARD_CANDIDATES, n_packets: int = STANDARD_PROBE_PACKETS) -> ProbeSchedule:
    """Even split of the probe packets; the remainder goes to the first candidate.

    For the four standard candidates over ten packets this is 4/2/2/2. Candidates
    that end up with no packets are dropped from the schedule.
    """
    candidates = list(candidates)
    if not candidates:
        raise ConfigError("no candidate configurations", key="candidates")
    share, extra = divmod(n_packets, len(candidates))
    entries, start = [], 1
    for i, c in enumerate(candidates):
        count = share + (extra if i == 0 else 0)
        if count:
            entries.append((range(start, start + count), c))
            start += count
    return ProbeSchedule(tuple(entries))


def candidate_size(candidate) -> int:
    """Subcarrier count used for tie-breaking; plain ints are taken as K."""
    return candidate.K if hasattr(candidate, "K") else int(candidate)


@dataclass(frozen=True)
class AdaptationDecision:
    chosen: Any
    per_candidate_ber: Dict[Hashable, float]
    rationale: str = field(default="", compare=False)


def select_config(probe_results: Mapping[Hashable, Tuple[int, int]], candidates: Sequence[Hashable] = ()) -> AdaptationDecision:
    """Pick the lowest measured BER; equal BERs go to the larger K.

    ``probe_results`` maps candidate -> (bit errors, bits). Any candidate in
    ``candidates`` without probe bits raises :class:`IncompleteProbeError`.
    """
    missing = [c for c in candidates if probe_results.get(c, (0, 0))[1] <= 0]
    missing += [c for c, (_, bits) in probe_results.items() if bits <= 0 and c not in missing]
    if missing or not probe_results:
        raise IncompleteProbeError(f"no probe bits for candidates {missing!r}")

    best = None
    for c, (errors, bits) in probe_results.items():
        if best is None:
            best = c
            continue
        be, bb = probe_results[best]
        # exact rational comparison errors/bits
        lhs, rhs = errors * bb, be * bits
        if lhs < rhs or (lhs == rhs and candidate_size(c) > candidate_size(best)):
            best = c
    per_ber = {c: e / b for c, (e, b) in probe_results.items()}
    ranked = ", ".join(f"{_label(c)}:{per_ber[c]:.4g}" for c in probe_results)
    return AdaptationDecision(
        chosen=best,
        per_candidate_ber=per_ber,
        rationale=f"argmin BER over [{ranked}] -> {_label(best)}",
    )


def _label(candidate) -> str:
    return getattr(candidate, "config_id", str(candidate))


def feedback(decision: AdaptationDecision, logger: logging.Logger = log):
    """Deliver the decision to the transmitter over an ideal return link."""
    logger.info("event=feedback chosen=%s ber=%.6g", _label(decision.chosen),
                decision.per_candidate_ber[decision.chosen])
    return decision.chosen
