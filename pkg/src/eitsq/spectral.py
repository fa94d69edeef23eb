"""
Second-moment description of squeezed light around an optical carrier.

A sideband pair at detuning +delta / -delta is described by the mean photon
numbers of the two modes and their anomalous correlation <a+ a->.  The carrier
(zero detuning) is a single mode with <a0^dag a0> and <a0^2>.  Noise powers are
shot-normalized: the vacuum gives 1 (0 dB).

Quadrature convention used by the 4x4 covariance matrices: x = a + a^dag,
p = -i(a - a^dag), so the vacuum covariance is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: absolute slack on the uncertainty conditions
PHYS_TOL = 1e-9


class UnphysicalStateError(ValueError):
    """A covariance record violates the uncertainty principle."""


def check_detuning(delta: float, max_detuning: float | None = None) -> float:
    delta = float(delta)
    if not np.isfinite(delta):
        raise ValueError(f"detuning must be finite, got {delta}")
    if max_detuning is not None and abs(delta) > max_detuning * (1 + 1e-12):
        raise ValueError(f"|detuning| {abs(delta):g} Hz exceeds grid maximum {max_detuning:g} Hz")
    return delta


@dataclass(frozen=True)
class FrequencyGrid:
    """Symmetric detuning grid ``k * spacing`` for ``k = -n/2 .. n/2``.

    ``n_points`` counts the nonzero points; zero detuning is the carrier and
    every positive point has its negative partner.
    """

    n_points: int
    spacing: float

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points <= 0 or self.n_points % 2:
            raise ValueError(f"n_points must be an even positive integer, got {self.n_points}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @property
    def detunings(self) -> np.ndarray:
        """Nonnegative detunings (Hz), starting at zero."""
        return np.arange(self.n_points // 2 + 1) * self.spacing

    @property
    def max_detuning(self) -> float:
        return (self.n_points // 2) * self.spacing

    @property
    def axis(self) -> np.ndarray:
        """Full symmetric axis including zero, ascending."""
        k = np.arange(-(self.n_points // 2), self.n_points // 2 + 1)
        return k * self.spacing

    @classmethod
    def covering(cls, max_detuning: float, spacing: float) -> "FrequencyGrid":
        half = int(np.ceil(max_detuning / spacing - 1e-9))
        return cls(2 * max(half, 1), spacing)


@dataclass(frozen=True)
class PairCovariance:
    """Second moments of the sideband pair at +delta / -delta."""

    n_plus: float
    n_minus: float
    m: complex

    def covariance_matrix(self) -> np.ndarray:
        return pair_covariance_matrix(self.n_plus, self.n_minus, self.m)


@dataclass(frozen=True)
class DegenerateCovariance:
    """Second moments of the single carrier mode."""

    n0: float
    m0: complex

    def is_physical(self) -> bool:
        return bool(self.n0 >= -PHYS_TOL and abs(self.m0) ** 2 <= self.n0 * (self.n0 + 1) + PHYS_TOL)


@dataclass(frozen=True)
class NoiseResult:
    """Shot-normalized symmetric noise power (vacuum = 1)."""

    s: float

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"noise power must be positive, got {self.s}")

    @property
    def db(self) -> float:
        return to_db(self.s)


def to_db(s):
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError("noise power must be positive to convert to dB")
    out = 10.0 * np.log10(s)
    return float(out) if out.ndim == 0 else out


def from_db(db):
    out = 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


# -- physicality -----------------------------------------------------------------

def pair_covariance_matrix(n_plus: float, n_minus: float, m: complex) -> np.ndarray:
    """4x4 quadrature covariance, ordering (x+, p+, x-, p-)."""
    a = 1.0 + 2.0 * n_plus
    b = 1.0 + 2.0 * n_minus
    re, im = 2.0 * np.real(m), 2.0 * np.imag(m)
    c = np.array([[re, im], [im, -re]])
    cov = np.zeros((4, 4))
    cov[:2, :2] = a * np.eye(2)
    cov[2:, 2:] = b * np.eye(2)
    cov[:2, 2:] = c
    cov[2:, :2] = c.T
    return cov


_OMEGA2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA4 = np.kron(np.eye(2), _OMEGA2)


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a 2n x 2n covariance matrix (each value once)."""
    n = cov.shape[0] // 2
    omega = np.kron(np.eye(n), _OMEGA2)
    ev = np.abs(np.linalg.eigvals(1j * omega @ cov))
    return np.sort(ev)[::2]


def pair_bound(n_plus, n_minus):
    """Largest physical |m|**2 for given occupations."""
    lo = np.minimum(n_plus, n_minus)
    hi = np.maximum(n_plus, n_minus)
    return lo * (1.0 + hi)


def pairs_physical(n_plus, n_minus, m, tol: float = PHYS_TOL) -> np.ndarray:
    """Vectorized closed-form physicality test."""
    n_plus = np.asarray(n_plus, dtype=float)
    n_minus = np.asarray(n_minus, dtype=float)
    return (
        (n_plus >= -tol)
        & (n_minus >= -tol)
        & (np.abs(m) ** 2 <= pair_bound(n_plus, n_minus) + tol)
    )


def check_physical(pair: PairCovariance, tol: float = PHYS_TOL) -> bool:
    """True iff the pair's covariance matrix obeys V + i Omega >= 0.

    Evaluated on the 4x4 matrix: nonnegative occupations, a positive
    definite covariance, and all symplectic eigenvalues >= 1.
    """
    if not (np.isfinite(pair.n_plus) and np.isfinite(pair.n_minus) and np.isfinite(pair.m)):
        return False
    if pair.n_plus < -tol or pair.n_minus < -tol:
        return False
    cov = pair.covariance_matrix()
    if np.linalg.eigvalsh(cov).min() < -tol:
        return False
    return bool(symplectic_eigenvalues(cov).min() >= 1.0 - tol)


# -- noise functionals -----------------------------------------------------------

def _pair_s(n_plus, n_minus, m, angle):
    return 1.0 + n_plus + n_minus + 2.0 * np.real(m * np.exp(-2j * angle))


def _degenerate_s(n0, m0, angle):
    return 1.0 + 2.0 * n0 + 2.0 * np.real(m0 * np.exp(-2j * angle))


def pair_noise(pair: PairCovariance, theta: float, phase_shift: float = 0.0) -> NoiseResult:
    """Two-mode quadrature noise of the +/-delta pair at LO phase ``theta``."""
    if not check_physical(pair):
        raise UnphysicalStateError(f"non-physical pair {pair}")
    return NoiseResult(float(_pair_s(pair.n_plus, pair.n_minus, pair.m, theta + phase_shift)))


def degenerate_noise(carrier: DegenerateCovariance, theta: float, phase_shift: float = 0.0) -> NoiseResult:
    """Single-mode quadrature noise of the carrier."""
    if not carrier.is_physical():
        raise UnphysicalStateError(f"non-physical carrier {carrier}")
    return NoiseResult(float(_degenerate_s(carrier.n0, carrier.m0, theta + phase_shift)))


# -- spectra ---------------------------------------------------------------------

def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SqueezingSpectrum:
    """Pair covariances on the nonnegative detunings of ``grid`` plus the carrier.

    Index 0 of the pair arrays is the zero-detuning limit of the pair records;
    the carrier mode itself is kept in ``carrier``.
    """

    grid: FrequencyGrid
    n_plus: np.ndarray
    n_minus: np.ndarray
    m: np.ndarray
    carrier: DegenerateCovariance = field(default_factory=lambda: DegenerateCovariance(0.0, 0j))

    def __post_init__(self):
        size = self.grid.n_points // 2 + 1
        object.__setattr__(self, "n_plus", _frozen(self.n_plus, float))
        object.__setattr__(self, "n_minus", _frozen(self.n_minus, float))
        object.__setattr__(self, "m", _frozen(self.m, complex))
        for name in ("n_plus", "n_minus", "m"):
            if getattr(self, name).shape != (size,):
                raise ValueError(f"{name} must have shape ({size},)")
        ok = pairs_physical(self.n_plus, self.n_minus, self.m)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise UnphysicalStateError(
                f"non-physical pair at {self.grid.detunings[bad]:g} Hz: "
                f"n+={self.n_plus[bad]:g}, n-={self.n_minus[bad]:g}, m={self.m[bad]:g}"
            )
        if not self.carrier.is_physical():
            raise UnphysicalStateError(f"non-physical carrier {self.carrier}")

    @classmethod
    def vacuum(cls, grid: FrequencyGrid) -> "SqueezingSpectrum":
        size = grid.n_points // 2 + 1
        return cls(grid, np.zeros(size), np.zeros(size), np.zeros(size, complex))

    def pair_arrays(self, delta):
        """Interpolated (n_plus, n_minus, m) at detunings ``delta`` (Hz).

        Negative detunings return the pair seen from the other side, i.e.
        with n_plus and n_minus swapped.
        """
        delta = np.asarray(delta, dtype=float)
        if np.any(~np.isfinite(delta)):
            raise ValueError("detuning must be finite")
        mag = np.abs(delta)
        if np.any(mag > self.grid.max_detuning * (1 + 1e-12)):
            raise ValueError(
                f"detuning {mag.max():g} Hz beyond grid maximum {self.grid.max_detuning:g} Hz"
            )
        x = self.grid.detunings
        n_p = np.interp(mag, x, self.n_plus)
        n_m = np.interp(mag, x, self.n_minus)
        m = np.interp(mag, x, self.m.real) + 1j * np.interp(mag, x, self.m.imag)
        flip = delta < 0
        return np.where(flip, n_m, n_p), np.where(flip, n_p, n_m), m

    def pair(self, delta: float) -> PairCovariance:
        n_p, n_m, m = self.pair_arrays(delta)
        return PairCovariance(float(n_p), float(n_m), complex(m))
