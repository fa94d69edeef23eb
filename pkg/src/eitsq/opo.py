"""Sub-threshold OPO squeezed-vacuum source and its calibration."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .spectral import DegenerateCovariance, FrequencyGrid, SqueezingSpectrum, from_db, to_db

log = logging.getLogger(__name__)


class InfeasibleTargetError(ValueError):
    """No source parameters reproduce the requested squeezing levels."""


@dataclass(frozen=True)
class OpoParams:
    """Below-threshold OPO.

    x          : pump amplitude relative to threshold, 0 <= x < 1
    gamma_hwhm : cavity half-width at half maximum (Hz)
    eta_esc    : lumped escape and detection efficiency, 0 < eta_esc <= 1
    """

    x: float
    gamma_hwhm: float = 5e6
    eta_esc: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.x < 1.0:
            raise ValueError(f"pump ratio x must lie in [0, 1), got {self.x}")
        if not self.gamma_hwhm > 0:
            raise ValueError(f"gamma_hwhm must be positive, got {self.gamma_hwhm}")
        if not 0.0 < self.eta_esc <= 1.0:
            raise ValueError(f"eta_esc must lie in (0, 1], got {self.eta_esc}")


def opo_levels(params: OpoParams, delta):
    """Squeezed and anti-squeezed noise (S_minus, S_plus) at detuning ``delta`` in Hz."""
    om2 = (np.asarray(delta, dtype=float) / params.gamma_hwhm) ** 2
    x, eta = params.x, params.eta_esc
    s_minus = 1.0 - eta * 4.0 * x / ((1.0 + x) ** 2 + om2)
    s_plus = 1.0 + eta * 4.0 * x / ((1.0 - x) ** 2 + om2)
    return s_minus, s_plus


def opo_spectrum(params: OpoParams, grid: FrequencyGrid) -> SqueezingSpectrum:
    """Stationary OPO output on ``grid``; squeezing sits in the theta = 0 quadrature."""
    s_minus, s_plus = opo_levels(params, grid.detunings)
    n = (s_plus + s_minus - 2.0) / 4.0
    m = (s_minus - s_plus) / 4.0
    # floating-point guard: the pure (eta = 1) case sits exactly on the bound
    n = np.maximum(n, 0.0)
    m = -np.minimum(np.abs(m), np.sqrt(n * (n + 1.0)))
    carrier = DegenerateCovariance(float(n[0]), complex(m[0]))
    return SqueezingSpectrum(grid, n, n.copy(), m.astype(complex), carrier)


def _grid_search(s_minus, s_plus, om2, nx=400, neta=400):
    """Coarse (x, eta) scan minimizing the squared dB residual."""
    xs = np.linspace(0.0, 0.999, nx)[1:]
    etas = np.linspace(0.0, 1.0, neta + 1)[1:]
    X, E = np.meshgrid(xs, etas, indexing="ij")
    sm = 1.0 - E * 4 * X / ((1 + X) ** 2 + om2)
    sp = 1.0 + E * 4 * X / ((1 - X) ** 2 + om2)
    with np.errstate(divide="ignore", invalid="ignore"):
        res = (10 * np.log10(np.clip(sm, 1e-300, None)) - to_db(s_minus)) ** 2
        res += (10 * np.log10(sp) - to_db(s_plus)) ** 2
    i, j = np.unravel_index(np.nanargmin(res), res.shape)
    return float(xs[i]), float(etas[j]), float(np.sqrt(res[i, j]))


def calibrate_opo(
    target_sqz_db: float,
    target_antisqz_db: float,
    at_detuning: float = 1e6,
    gamma_hwhm: float = 5e6,
    tol_db: float = 0.02,
) -> OpoParams:
    """Find (x, eta_esc) reproducing the squeezing/anti-squeezing pair at ``at_detuning``.

    The ratio of anti-squeezing excess to squeezing depth depends on x alone,
    so x comes from a bracketed root and eta_esc follows in closed form.  A
    coarse grid search over (x, eta_esc) is the fallback when the bracket
    does not close.
    """
    if not (target_sqz_db < 0.0 < target_antisqz_db):
        raise InfeasibleTargetError("need target_sqz_db < 0 < target_antisqz_db")
    if abs(target_sqz_db) >= target_antisqz_db:
        raise InfeasibleTargetError(
            f"|{target_sqz_db}| dB squeezing with {target_antisqz_db} dB anti-squeezing "
            "is not reachable by a lossy squeezer"
        )
    s_minus, s_plus = from_db(target_sqz_db), from_db(target_antisqz_db)
    om2 = (at_detuning / gamma_hwhm) ** 2
    a, b = 1.0 - s_minus, s_plus - 1.0
    ratio = b / a

    def mismatch(x):
        return ((1 + x) ** 2 + om2) - ratio * ((1 - x) ** 2 + om2)

    x_hi = 1.0 - 1e-12
    if mismatch(0.0) < 0.0 < mismatch(x_hi):
        x = optimize.brentq(mismatch, 0.0, x_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        eta = a * ((1 + x) ** 2 + om2) / (4 * x)
    else:
        x, eta, _ = _grid_search(s_minus, s_plus, om2)
        log.debug("ratio bracket failed; grid optimum x=%g eta=%g", x, eta)
    if eta > 1.0 + 1e-12:
        raise InfeasibleTargetError(f"targets need escape efficiency {eta:.4g} > 1")
    params = OpoParams(x, gamma_hwhm, min(eta, 1.0))
    sm, sp = opo_levels(params, at_detuning)
    err = max(abs(to_db(sm) - target_sqz_db), abs(to_db(sp) - target_antisqz_db))
    if err > tol_db:
        raise InfeasibleTargetError(f"best OPO fit misses targets by {err:.3g} dB")
    return params
