"""Multicarrier chirp-division multiplexing link simulator.

Chirp basis and transforms, packet transmitter, tapped-delay-line
channel, coherent receiver, probe-based configuration adaptation and a
seeded Monte Carlo harness.
"""

from .adaptation import AdaptationDecision, ProbeSchedule, default_schedule, feedback, select_config
from .channel import (
    chirp_domain_matrix,
    ChannelProfile,
    ChannelRealization,
    add_awgn,
    apply_channel,
    chirp_domain_response,
    default_profile,
    draw_channel,
    flat_profile,
    frequency_response,
    insert_offset,
    mean_channel,
)
from .chirp import (
    BasebandSignal,
    ChirpParams,
    basis_matrix,
    chirp_waveform,
    cross_correlation,
    doct,
    doct_fast,
    idoct,
    idoct_fast,
    oct_quadrature,
)
from .config import load_config, parse_config
from .errors import (
    MCDMError,
    DimensionError,
    FramingError,
    CapacityError,
    PrecisionError,
    SearchError,
    AlignmentError,
    SingularityError,
    PacketLost,
    ConfigError,
    IncompleteProbeError,
)
from .harness import CSI, ExperimentSpec, FrameGrid, Mode, TrialReport, adapt_run, loopback, run_trial, sweep
from .oracles import OracleCurve, OracleKind, oracle_curve
from .receiver import ReceiverOptions, demodulate, detect, detect_full, receive_packet, synchronize
from .transmitter import (
    Access,
    FrameConfig,
    Modulation,
    Packet,
    PacketLayout,
    UserAllocation,
    allocate_subcarriers,
    assemble_frequency_vector,
    build_packet,
    gen_preamble,
    gray_demap,
    gray_map,
    transmit,
)

__version__ = "0.1.0"
