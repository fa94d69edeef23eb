"""
Lambda-system EIT medium as a complex amplitude transfer function.

The probe is held on one-photon resonance and the two-photon detuning is set
by the control field.  Envelope convention: a filter ``t(f)`` multiplies the
spectrum of ``a(t) = sum_f A(f) exp(+2j pi f t)``, so a pure delay ``tau``
reads ``t(f) = exp(-2j pi f tau)`` and the group delay is ``-d arg t / d omega``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import partial

import numpy as np

#: half of the Rb D1 natural linewidth, rad/s
GAMMA_E_RB_D1 = 2 * np.pi * 2.9e6


class UndefinedDelayError(ValueError):
    """Group delay requested where no transparency window exists."""


@dataclass(frozen=True)
class EitParams:
    """Medium parameters; rates in rad/s, ``d`` is the intensity optical depth."""

    d: float = 4.0
    gamma_e: float = GAMMA_E_RB_D1
    gamma_0: float = 0.0
    omega_c: float = 0.0
    delta_c: float = 0.0

    def __post_init__(self):
        if not self.d >= 0:
            raise ValueError(f"optical depth must be >= 0, got {self.d}")
        if not self.gamma_e > 0:
            raise ValueError(f"gamma_e must be positive, got {self.gamma_e}")
        if not self.gamma_0 >= 0:
            raise ValueError(f"gamma_0 must be >= 0, got {self.gamma_0}")
        if not self.omega_c >= 0:
            raise ValueError(f"omega_c must be >= 0, got {self.omega_c}")

    def with_control(self, omega_c: float | None = None, delta_c: float | None = None) -> "EitParams":
        changes = {}
        if omega_c is not None:
            changes["omega_c"] = omega_c
        if delta_c is not None:
            changes["delta_c"] = delta_c
        return replace(self, **changes)


@dataclass(frozen=True)
class ControlCalibration:
    """omega_c**2 = kappa * power, kappa in (rad/s)**2 per W."""

    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")


def _exponent(params: EitParams, two_photon):
    two_photon = np.asarray(two_photon, dtype=float)
    if params.omega_c == 0:
        # control off: plain two-level absorption, also at z = 0
        return np.full(two_photon.shape, 0.5 * params.d, dtype=complex)
    z = params.gamma_e * (params.gamma_0 + 1j * two_photon)
    return 0.5 * params.d * z / (z + 0.25 * params.omega_c ** 2)


def eit_transfer(params: EitParams, delta):
    """Amplitude transmission at probe detuning ``delta`` (Hz); scalar or array."""
    two_photon = 2 * np.pi * np.asarray(delta, dtype=float) - params.delta_c
    t = np.exp(-_exponent(params, two_photon))
    return complex(t) if t.ndim == 0 else t


def transfer_function(params: EitParams):
    """``eit_transfer`` bound to ``params``, usable as a channel transfer."""
    return partial(eit_transfer, params)


def transmission_scan(params: EitParams, grid) -> tuple[np.ndarray, np.ndarray]:
    """Intensity transmission |t|**2 over the full symmetric axis of ``grid``."""
    delta = grid.axis
    return delta, np.abs(eit_transfer(params, delta)) ** 2


def window_halfwidth(params: EitParams) -> float:
    """Characteristic two-photon half-width of the window, rad/s."""
    return params.gamma_0 + params.omega_c ** 2 / (4 * params.gamma_e)


def window_fwhm(params: EitParams, n: int = 4001) -> float:
    """FWHM (Hz) of the |t|**2 transparency peak above the control-off floor.

    Half maximum is taken halfway between the peak and the e**-d background.
    """
    if params.omega_c == 0:
        return 0.0
    base = np.exp(-params.d)
    centre = params.delta_c / (2 * np.pi)
    peak = abs(eit_transfer(params, centre)) ** 2
    half = 0.5 * (peak + base)
    w = window_halfwidth(params) / (2 * np.pi)
    span = w * max(4.0, 4.0 * np.sqrt(max(params.d, 1.0)))
    f = np.linspace(0.0, span, n)
    tr = np.abs(eit_transfer(params, centre + f)) ** 2
    below = np.flatnonzero(tr < half)
    if below.size == 0:
        raise ValueError("window edge beyond search span")
    i = below[0]
    # linear interpolation between the bracketing samples
    f_edge = f[i - 1] + (half - tr[i - 1]) * (f[i] - f[i - 1]) / (tr[i] - tr[i - 1])
    return 2.0 * f_edge


def group_delay(params: EitParams) -> float:
    """Group delay (s) at two-photon resonance by central finite difference."""
    if params.omega_c <= 0:
        raise UndefinedDelayError("no control field, no transparency window")
    h = 1e-4 * window_halfwidth(params)
    centre = params.delta_c / (2 * np.pi)
    step = h / (2 * np.pi)
    ratio = eit_transfer(params, centre + step) / eit_transfer(params, centre - step)
    return -float(np.angle(ratio)) / (2 * h)


def analytic_group_delay(params: EitParams) -> float:
    """Small-detuning delay 2 d gamma_e / omega_c**2 (exact for gamma_0 = 0)."""
    if params.omega_c <= 0:
        raise UndefinedDelayError("no control field, no transparency window")
    return 2 * params.d * params.gamma_e / params.omega_c ** 2


def rabi_from_power(power: float, calib: ControlCalibration) -> float:
    if power < 0:
        raise ValueError(f"control power must be >= 0, got {power}")
    return float(np.sqrt(calib.kappa * power))
