"""Squeezed-vacuum propagation through an EIT medium: spectra, channels, pulses."""

__version__ = "0.1.0"

from .eit import EitParams, analytic_group_delay, eit_transfer, group_delay  # noqa: E402
from .measurement import AnalyzerConfig, ChannelSpec, LoConfig, apply_channel, measure, noise_bi, noise_mono  # noqa: E402
from .opo import OpoParams, calibrate_opo, opo_spectrum  # noqa: E402
from .pulse import GateFunction, NoiseTrace, TimeGrid, extract_delay, mc_oracle, photon_flux, simulate_trace  # noqa: E402
from .spectral import (  # noqa: E402
    FrequencyGrid,
    PairCovariance,
    SqueezingSpectrum,
    UnphysicalStateError,
    check_physical,
    degenerate_noise,
    pair_noise,
)

__all__ = [
    "AnalyzerConfig",
    "ChannelSpec",
    "EitParams",
    "FrequencyGrid",
    "GateFunction",
    "LoConfig",
    "NoiseTrace",
    "OpoParams",
    "PairCovariance",
    "SqueezingSpectrum",
    "TimeGrid",
    "UnphysicalStateError",
    "analytic_group_delay",
    "apply_channel",
    "calibrate_opo",
    "check_physical",
    "degenerate_noise",
    "eit_transfer",
    "extract_delay",
    "group_delay",
    "mc_oracle",
    "measure",
    "noise_bi",
    "noise_mono",
    "opo_spectrum",
    "pair_noise",
    "photon_flux",
    "simulate_trace",
]
