"""
Passive Gaussian channels and the homodyne / spectrum-analyzer model.

With a monochromatic LO at the carrier the analyzer at frequency ``eps`` sees
the two-mode quadrature of the pair at +/-eps.  A bichromatic LO with tones at
+/-eps makes the same analyzer see the carrier mode and the +/-2 eps pair with
weight 1/2 each.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .eit import EitParams, transfer_function
from .spectral import (
    DegenerateCovariance,
    FrequencyGrid,
    NoiseResult,
    SqueezingSpectrum,
    _degenerate_s,
    _pair_s,
    degenerate_noise,
    pair_noise,
)

MONO = "monochromatic"
BI = "bichromatic"

Transfer = Callable[[np.ndarray], np.ndarray]


def unit_transfer(delta):
    return np.ones_like(np.asarray(delta, dtype=float), dtype=complex)


@dataclass(frozen=True)
class LoConfig:
    kind: str = BI
    epsilon: float = 1e6
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in (MONO, BI):
            raise ValueError(f"LO kind must be {MONO!r} or {BI!r}, got {self.kind!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class AnalyzerConfig:
    rbw: float = 100e3
    vbw: float = 100e3
    mode: str = "zero-span"

    def __post_init__(self):
        if not (self.rbw > 0 and self.vbw > 0):
            raise ValueError("rbw and vbw must be positive")
        if self.mode != "zero-span":
            raise ValueError(f"only zero-span mode is modeled, got {self.mode!r}")


@dataclass(frozen=True)
class ChannelSpec:
    """Frequency-dependent amplitude transfer followed by a flat efficiency."""

    transfer: Transfer = field(default=unit_transfer)
    eta_path: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eta_path <= 1.0:
            raise ValueError(f"eta_path must lie in (0, 1], got {self.eta_path}")

    def amplitude(self, delta) -> np.ndarray:
        u = np.sqrt(self.eta_path) * np.asarray(self.transfer(np.asarray(delta, dtype=float)), dtype=complex)
        if np.any(np.abs(u) > 1 + 1e-12):
            raise ValueError("channel is not passive (|u| > 1)")
        return u


def eit_channel(params: EitParams, eta_path: float = 1.0) -> ChannelSpec:
    return ChannelSpec(transfer_function(params), eta_path)


def apply_channel(spec: SqueezingSpectrum, ch: ChannelSpec) -> SqueezingSpectrum:
    """Propagate every sideband pair and the carrier through a passive channel."""
    delta = spec.grid.detunings
    up = ch.amplitude(delta)
    um = ch.amplitude(-delta)
    u0 = complex(ch.amplitude(0.0))
    n_plus = np.abs(up) ** 2 * spec.n_plus
    n_minus = np.abs(um) ** 2 * spec.n_minus
    m = up * um * spec.m
    carrier = DegenerateCovariance(abs(u0) ** 2 * spec.carrier.n0, u0 ** 2 * spec.carrier.m0)
    return SqueezingSpectrum(spec.grid, n_plus, n_minus, m, carrier)


# -- analyzer responses ----------------------------------------------------------

def mono_response(spec: SqueezingSpectrum, theta: float, phase_shift: float = 0.0):
    """Noise at analyzer frequency ``f`` for an LO at the carrier (vectorized in f)."""

    def fn(f):
        n_p, n_m, m = spec.pair_arrays(f)
        return _pair_s(n_p, n_m, m, theta + phase_shift)

    return fn


def bi_response(spec: SqueezingSpectrum, epsilon: float, theta: float, phase_shift: float = 0.0):
    """Noise at analyzer frequency ``f`` for LO tones at +/-epsilon (vectorized in f)."""
    c = spec.carrier

    def fn(f):
        f = np.asarray(f, dtype=float)
        offset = f - epsilon
        n_p, n_m, m = spec.pair_arrays(offset)
        near = _pair_s(n_p, n_m, m, theta + phase_shift)
        near = np.where(offset == 0.0, _degenerate_s(c.n0, c.m0, theta + phase_shift), near)
        n_p, n_m, m = spec.pair_arrays(f + epsilon)
        far = _pair_s(n_p, n_m, m, theta + phase_shift)
        return 0.5 * near + 0.5 * far

    return fn


def band_nodes(center: float, rbw: float, spacing: float) -> np.ndarray:
    """Grid multiples of ``spacing`` strictly inside the band, plus both edges."""
    lo, hi = center - rbw / 2, center + rbw / 2
    k = np.arange(np.floor(lo / spacing) + 1, np.ceil(hi / spacing))
    inner = k * spacing
    inner = inner[(inner > lo) & (inner < hi)]
    return np.concatenate(([lo], inner, [hi]))


def rbw_average(noise_fn, center: float, rbw: float, grid: FrequencyGrid, reach: float = 0.0) -> NoiseResult:
    """Band mean of ``noise_fn`` over ``center +/- rbw/2`` by the trapezoid rule.

    ``noise_fn`` maps an array of analyzer frequencies to shot-normalized
    noise.  ``reach`` is any extra detuning the response looks up beyond
    the band itself (``epsilon`` for a bichromatic LO).
    """
    if not rbw > 0:
        raise ValueError("rbw must be positive")
    top = center + rbw / 2 + reach
    if top > grid.max_detuning * (1 + 1e-12):
        raise ValueError(f"analyzer band reaches {top:g} Hz, beyond grid maximum {grid.max_detuning:g} Hz")
    nodes = band_nodes(center, rbw, grid.spacing)
    values = np.asarray(noise_fn(nodes), dtype=float)
    return NoiseResult(float(np.trapezoid(values, nodes) / rbw))


def noise_mono(
    spec: SqueezingSpectrum,
    lo: LoConfig,
    analyzer: AnalyzerConfig | None = None,
    phase_shift: float = 0.0,
) -> NoiseResult:
    """Two-mode quadrature noise at +/-epsilon; band-averaged when ``analyzer`` is given."""
    if analyzer is not None:
        return rbw_average(mono_response(spec, lo.theta, phase_shift), lo.epsilon, analyzer.rbw, spec.grid)
    return pair_noise(spec.pair(lo.epsilon), lo.theta, phase_shift)


def noise_bi(
    spec: SqueezingSpectrum,
    lo: LoConfig,
    analyzer: AnalyzerConfig | None = None,
    phase_shift: float = 0.0,
) -> NoiseResult:
    """Mean of the carrier single-mode noise and the +/-2 epsilon two-mode noise."""
    if analyzer is not None:
        fn = bi_response(spec, lo.epsilon, lo.theta, phase_shift)
        return rbw_average(fn, lo.epsilon, analyzer.rbw, spec.grid, reach=lo.epsilon)
    s0 = degenerate_noise(spec.carrier, lo.theta, phase_shift).s
    s2 = pair_noise(spec.pair(2 * lo.epsilon), lo.theta, phase_shift).s
    return NoiseResult(0.5 * s0 + 0.5 * s2)


def measure(spec: SqueezingSpectrum, lo: LoConfig, analyzer: AnalyzerConfig | None = None) -> NoiseResult:
    fn = noise_bi if lo.kind == BI else noise_mono
    return fn(spec, lo, analyzer)


def noise_scan_vs_control_detuning(
    source: SqueezingSpectrum,
    eit: EitParams,
    lo: LoConfig,
    analyzer: AnalyzerConfig,
    scan,
    eta_path: float = 1.0,
):
    """Quadrature noise at theta = 0 and pi/2 versus control detuning.

    ``scan`` holds two-photon control offsets in Hz.  Returns
    ``(delta_c_hz, s0, s90)`` arrays of shot-normalized noise.
    """
    scan = np.asarray(scan, dtype=float)
    s0 = np.empty_like(scan)
    s90 = np.empty_like(scan)
    lo0 = LoConfig(lo.kind, lo.epsilon, 0.0)
    lo90 = LoConfig(lo.kind, lo.epsilon, np.pi / 2)
    for i, dc in enumerate(scan):
        out = apply_channel(source, eit_channel(eit.with_control(delta_c=2 * np.pi * dc), eta_path))
        s0[i] = measure(out, lo0, analyzer).s
        s90[i] = measure(out, lo90, analyzer).s
    return scan, s0, s90
