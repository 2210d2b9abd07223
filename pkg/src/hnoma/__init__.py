"""Link-level simulation of downlink NOMA with bit-domain Hadamard spreading."""
from .analytic import AnalyticConfig, user1_average_ber, user2_average_ber
from .hadamard import build_hadamard, forward_transform, inverse_transform
from .montecarlo import ScenarioConfig, compare_schemes, run_scenario, snr_at_ber
from .noma import (
    PowerProfile,
    build_hnoma_codebook,
    hnoma_receive,
    hnoma_transmit,
    superpose,
)

__all__ = [
    "AnalyticConfig",
    "PowerProfile",
    "ScenarioConfig",
    "build_hadamard",
    "build_hnoma_codebook",
    "compare_schemes",
    "forward_transform",
    "hnoma_receive",
    "hnoma_transmit",
    "inverse_transform",
    "run_scenario",
    "snr_at_ber",
    "superpose",
    "user1_average_ber",
    "user2_average_ber",
]
