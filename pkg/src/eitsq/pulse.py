"""
Gated squeezed-vacuum pulses through a passive channel, seen by a zero-span
spectrum analyzer.

The probe is described on a periodic time grid of ``n_samples`` points.  One
linear pipeline maps the field to the analyzer's complex baseband output:

1. gate: a time-dependent beamsplitter ``g(t) a(t) + sqrt(1 - g**2) v(t)``
2. channel: per-frequency amplitude ``u(f)`` with vacuum through the other port
3. homodyne: quadrature ``a e^{-i theta} + a^dag e^{i theta}`` times the LO tones
4. analyzer: mix down by ``epsilon``, Gaussian RBW filter, square law,
   single-pole VBW smoother

Two evaluators share the pipeline.  ``mc_oracle`` draws Wigner samples and
averages; ``simulate_trace`` contracts the pipeline's impulse responses with
the source second moments.  Both normalize by the vacuum-fed pipeline.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import signal

from .eit import UndefinedDelayError
from .measurement import BI, AnalyzerConfig, ChannelSpec, LoConfig
from .spectral import SqueezingSpectrum, UnphysicalStateError, pairs_physical

log = logging.getLogger(__name__)

GATE_SHAPES = ("raised-cosine", "gaussian", "rectangular", "open", "closed")

# raised-cosine amplitude whose flux envelope g**2 has unit FWHM
_RC_WIDTH = np.pi / (4 * np.arccos(2 ** -0.25))


@dataclass(frozen=True)
class GateFunction:
    """Amplitude gate applied to the probe.

    ``fwhm`` is the full width at half maximum of the transmitted flux
    ``g(t)**2``.  ``floor`` is the residual amplitude transmission when
    closed.  ``open`` and ``closed`` are constant gates.
    """

    shape: str = "raised-cosine"
    fwhm: float = 10e-6
    center: float = 100e-6
    floor: float = 0.0

    def __post_init__(self):
        if self.shape not in GATE_SHAPES:
            raise ValueError(f"unknown gate shape {self.shape!r}; expected one of {GATE_SHAPES}")
        if not self.fwhm > 0:
            raise ValueError("gate fwhm must be positive")
        if not 0.0 <= self.floor < 1.0:
            raise ValueError("gate floor must lie in [0, 1)")

    def envelope(self, t) -> np.ndarray:
        x = np.asarray(t, dtype=float) - self.center
        if self.shape == "open":
            return np.ones_like(x)
        if self.shape == "closed":
            return np.full_like(x, self.floor)
        if self.shape == "rectangular":
            g = (np.abs(x) <= self.fwhm / 2).astype(float)
        elif self.shape == "gaussian":
            g = np.exp(-2 * np.log(2) * (x / self.fwhm) ** 2)
        else:
            w = self.fwhm * _RC_WIDTH
            g = np.where(np.abs(x) < w, 0.5 * (1 + np.cos(np.pi * x / w)), 0.0)
        return self.floor + (1.0 - self.floor) * g


@dataclass(frozen=True)
class TimeGrid:
    n_samples: int = 4096
    dt: float = 0.1e-6

    def __post_init__(self):
        n = int(self.n_samples)
        if n != self.n_samples or n < 2 or n & (n - 1):
            raise ValueError(f"n_samples must be a power of two, got {self.n_samples}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    @property
    def freqs(self) -> np.ndarray:
        return np.fft.fftfreq(self.n_samples, self.dt)

    @property
    def span(self) -> float:
        return self.n_samples * self.dt

    def check_nyquist(self, lo: LoConfig, analyzer: AnalyzerConfig):
        if not 1.0 / self.dt > 4 * (lo.epsilon + analyzer.rbw):
            raise ValueError(
                f"sample rate {1 / self.dt:g} Hz must exceed 4*(epsilon + rbw) = "
                f"{4 * (lo.epsilon + analyzer.rbw):g} Hz"
            )


@dataclass(frozen=True)
class NoiseTrace:
    """Time-resolved shot-normalized variances at theta = 0 and pi/2."""

    times: np.ndarray
    v0: np.ndarray
    v90: np.ndarray
    flux: np.ndarray
    sigma0: np.ndarray | None = None
    sigma90: np.ndarray | None = None


def make_trace(times, v0, v90, sigma0=None, sigma90=None) -> NoiseTrace:
    return NoiseTrace(times, v0, v90, (v0 + v90) / 2 - 1, sigma0, sigma90)


def photon_flux(trace: NoiseTrace) -> np.ndarray:
    """Excess photon flux (arbitrary units) from the two quadrature traces."""
    if np.shape(trace.v0) != np.shape(trace.v90) or np.shape(trace.v0) != np.shape(trace.times):
        raise ValueError("v0, v90 and times must share one time grid")
    flux = (np.asarray(trace.v0) + np.asarray(trace.v90)) / 2 - 1
    n_bad = int(np.count_nonzero(flux < -1e-3))
    if n_bad:
        log.debug("%d flux samples below -1e-3 (statistical artifacts)", n_bad)
    return flux


def _centroid(times, flux, threshold=0.05):
    if not np.sum(flux) > 0:
        raise UndefinedDelayError("trace carries no positive excess flux")
    sel = flux > threshold * flux.max()
    return float(np.sum(times[sel] * flux[sel]) / np.sum(flux[sel]))


def extract_delay(trace: NoiseTrace, reference: NoiseTrace, threshold: float = 0.05) -> float:
    """Flux-centroid delay of ``trace`` relative to ``reference`` (s)."""
    if not np.array_equal(trace.times, reference.times):
        raise ValueError("traces must share the same time grid")
    t = np.asarray(trace.times)
    return _centroid(t, photon_flux(trace), threshold) - _centroid(t, photon_flux(reference), threshold)


def flux_fwhm(trace: NoiseTrace) -> float:
    """Full width at half maximum of the flux pulse (s), edges linearly interpolated."""
    f = photon_flux(trace)
    t = np.asarray(trace.times)
    i = int(np.argmax(f))
    half = f[i] / 2
    left = i
    while left > 0 and f[left] > half:
        left -= 1
    right = i
    while right < len(f) - 1 and f[right] > half:
        right += 1

    def cross(a, b):
        return t[a] + (half - f[a]) * (t[b] - t[a]) / (f[b] - f[a])

    return cross(right - 1, right) - cross(left, left + 1)


# -- pipeline pieces ---------------------------------------------------------------

@dataclass(frozen=True)
class _Pipeline:
    gate: np.ndarray          # g(t)
    gate_vac: np.ndarray      # sqrt(1 - g**2)
    u: np.ndarray             # channel amplitude per bin
    u_vac: np.ndarray         # sqrt(1 - |u|**2)
    mix: np.ndarray           # LO(t) * exp(-2i pi eps t)
    rbw: np.ndarray           # analyzer filter per bin
    vbw_alpha: float

    def field_out(self, a):
        """Gate + channel acting on the time series ``a`` (rows are independent)."""
        spec = sfft.fft(self.gate * a, axis=-1, norm="ortho")
        return sfft.ifft(self.u * spec, axis=-1, norm="ortho")

    def analyzer(self, y):
        return sfft.ifft(self.rbw * sfft.fft(y * self.mix, axis=-1, norm="ortho"), axis=-1, norm="ortho")

    def video(self, p):
        """Single-pole smoother along time, started in its steady state."""
        b, a = [self.vbw_alpha], [1.0, self.vbw_alpha - 1.0]
        zi = signal.lfilter_zi(b, a) * p[..., :1]
        out, _ = signal.lfilter(b, a, p, axis=-1, zi=zi)
        return out


def snapped_epsilon(epsilon: float, grid: TimeGrid) -> float:
    """LO offset rounded to the nearest bin of the periodic grid.

    A tone that does not complete a whole number of cycles over the span
    wraps discontinuously, which breaks stationarity and leaks noise from
    unrelated bands into the trace.
    """
    eps = round(epsilon * grid.span) / grid.span
    if eps != epsilon:
        log.debug("LO offset %g Hz snapped to grid bin %g Hz", epsilon, eps)
    return eps


def _build_pipeline(gate: GateFunction, ch: ChannelSpec, lo: LoConfig, analyzer: AnalyzerConfig, grid: TimeGrid):
    grid.check_nyquist(lo, analyzer)
    t, f = grid.times, grid.freqs
    g = gate.envelope(t)
    u = ch.amplitude(f)
    eps = snapped_epsilon(lo.epsilon, grid)
    down = np.exp(-2j * np.pi * eps * t)
    lo_wave = 2 * np.cos(2 * np.pi * eps * t) if lo.kind == BI else np.ones_like(t)
    rbw = np.exp(-0.5 * np.log(2) * (2 * f / analyzer.rbw) ** 2)
    alpha = 1.0 - np.exp(-2 * np.pi * analyzer.vbw * grid.dt)
    return _Pipeline(
        g,
        np.sqrt(np.clip(1 - g ** 2, 0, None)),
        u,
        np.sqrt(np.clip(1 - np.abs(u) ** 2, 0, None)),
        lo_wave * down,
        rbw,
        alpha,
    )


def source_moments(source: SqueezingSpectrum, grid: TimeGrid):
    """Per-bin ``<A_k^dag A_k>`` and ``<A_k A_-k>`` on the FFT grid.

    The zero bin takes the carrier record; the Nyquist bin is its own
    partner and keeps only its occupation.
    """
    f = grid.freqs
    if np.abs(f).max() > source.grid.max_detuning * (1 + 1e-12):
        raise ValueError(
            f"source spectrum covers {source.grid.max_detuning:g} Hz, time grid needs {np.abs(f).max():g} Hz"
        )
    n, _, m = source.pair_arrays(f)
    n = np.array(n, dtype=float)
    m = np.array(m, dtype=complex)
    n[0], m[0] = source.carrier.n0, source.carrier.m0
    nyq = grid.n_samples // 2
    m[nyq] = 0.0
    partner = (-np.arange(grid.n_samples)) % grid.n_samples
    if not pairs_physical(n, n[partner], m).all():
        raise UnphysicalStateError("source moments on the time grid are not physical")
    return n, m


# -- deterministic evaluator ------------------------------------------------------

def _paired_order(n):
    """Bin indices ordered so that each k is followed by its partner -k."""
    half = n // 2
    order = [0, half]
    for k in range(1, half):
        order += [k, n - k]
    return np.array(order)


def _vacuum_reference(pipe: _Pipeline) -> np.ndarray:
    """Mean analyzer power for vacuum at the detector.

    The analyzer map is ``mix_j * c(t - j)`` with ``c`` the circular RBW
    kernel, so its squared row norms are a circular convolution.
    """
    kernel2 = np.abs(sfft.ifft(pipe.rbw)) ** 2
    mix2 = np.abs(pipe.mix) ** 2
    return np.real(sfft.ifft(sfft.fft(mix2) * sfft.fft(kernel2)))


def _deterministic(source, pipe: _Pipeline, grid: TimeGrid, chunk: int = 256):
    n_k, m_k = source_moments(source, grid)
    N = grid.n_samples
    t_idx = np.arange(N)
    order = _paired_order(N)
    pos = np.arange(N)
    # position of each bin's partner within ``order``
    partner_pos = np.where(pos < 2, pos, pos ^ 1)
    excess_n = np.zeros(N)
    excess_m = np.zeros(N, dtype=complex)
    chunk = max(2, chunk - chunk % 2)
    for start in range(0, N, chunk):
        ks = order[start:start + chunk]
        basis = np.exp(2j * np.pi * np.outer(ks, t_idx) / N) / np.sqrt(N)
        y = pipe.field_out(basis)
        R = pipe.analyzer(y)
        Q = pipe.analyzer(np.conj(y))
        excess_n += n_k[ks] @ (np.abs(R) ** 2 + np.abs(Q) ** 2)
        local = partner_pos[start:start + len(ks)] - start
        excess_m += m_k[ks] @ (R * np.conj(Q[local]))
    return excess_n, excess_m, _vacuum_reference(pipe)


def _normalized(pipe, excess_n, excess_m, ref, theta):
    excess = excess_n + 2 * np.real(np.exp(-2j * theta) * excess_m)
    return 1.0 + pipe.video(excess) / pipe.video(ref)


# -- Monte-Carlo evaluator --------------------------------------------------------

def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _sample_modes(rng, n_k, m_k, batch):
    """Wigner samples of the bin amplitudes, shape (batch, N)."""
    N = n_k.size
    half = N // 2
    A = np.empty((batch, N), dtype=complex)
    kp = np.arange(1, half)
    km = N - kp
    l11 = np.sqrt(n_k[kp] + 0.5)
    l21 = np.conj(m_k[kp]) / l11
    l22 = np.sqrt(np.clip(n_k[km] + 0.5 - np.abs(m_k[kp]) ** 2 / (n_k[kp] + 0.5), 0, None))
    xi1 = _complex_normal(rng, (batch, kp.size))
    xi2 = _complex_normal(rng, (batch, kp.size))
    A[:, kp] = l11 * xi1
    A[:, km] = np.conj(l21 * xi1 + l22 * xi2)
    for k in (0, half):
        vxx = 1 + 2 * n_k[k] + 2 * m_k[k].real
        vpp = 1 + 2 * n_k[k] - 2 * m_k[k].real
        vxp = 2 * m_k[k].imag
        c = np.linalg.cholesky(np.array([[vxx, vxp], [vxp, vpp]]) + 1e-300 * np.eye(2))
        xp = rng.standard_normal((batch, 2)) @ c.T
        A[:, k] = (xp[:, 0] + 1j * xp[:, 1]) / 2
    return A


def _mc_batch(pipe: _Pipeline, n_k, m_k, seed_seq, batch):
    rng = np.random.default_rng(seed_seq)
    N = n_k.size
    A = _sample_modes(rng, n_k, m_k, batch)
    a = sfft.ifft(A, axis=-1, norm="ortho")
    a1 = pipe.gate * a + pipe.gate_vac * _complex_normal(rng, (batch, N)) / np.sqrt(2)
    A1 = sfft.fft(a1, axis=-1, norm="ortho")
    A2 = pipe.u * A1 + pipe.u_vac * _complex_normal(rng, (batch, N)) / np.sqrt(2)
    a2 = sfft.ifft(A2, axis=-1, norm="ortho")
    pa = pipe.analyzer(a2)
    pc = pipe.analyzer(np.conj(a2))
    p0 = pipe.video(np.abs(pa + pc) ** 2)
    p90 = pipe.video(np.abs(pa - pc) ** 2)
    return p0.sum(0), (p0 ** 2).sum(0), p90.sum(0), (p90 ** 2).sum(0), (p0 * p90).sum(0)


def _mc_sums(pipe, n_k, m_k, jobs, workers):
    def run(job):
        size, seq = job
        return _mc_batch(pipe, n_k, m_k, seq, size)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    # summation in batch order keeps the result independent of scheduling
    return [sum(p[i] for p in parts) for i in range(5)]


def mc_oracle(
    source: SqueezingSpectrum,
    gate: GateFunction,
    ch: ChannelSpec,
    lo: LoConfig,
    analyzer: AnalyzerConfig,
    grid: TimeGrid,
    seed: int = 0,
    n_samples: int = 10_000,
    batch: int = 250,
    workers: int = 1,
) -> NoiseTrace:
    """Monte-Carlo estimate of the analyzer traces with 1-sigma errors."""
    if n_samples < 1000:
        raise ValueError("mc_oracle needs n_samples >= 1000")
    pipe = _build_pipeline(gate, ch, lo, analyzer, grid)
    n_k, m_k = source_moments(source, grid)
    sizes = [batch] * (n_samples // batch) + ([n_samples % batch] if n_samples % batch else [])
    streams = np.random.SeedSequence(seed).spawn(2 * len(sizes))
    s0, s0sq, s90, s90sq, _ = _mc_sums(pipe, n_k, m_k, list(zip(sizes, streams[: len(sizes)])), workers)
    vac_n, vac_m = np.zeros_like(n_k), np.zeros_like(m_k)
    r0, r0sq, r90, r90sq, r_cross = _mc_sums(pipe, vac_n, vac_m, list(zip(sizes, streams[len(sizes):])), workers)
    ns = float(n_samples)
    ref = (r0 + r90) / (2 * ns)
    # the vacuum estimator per sample is the mean of the two quadratures
    ref_var = (r0sq + 2 * r_cross + r90sq) / (4 * ns) - ref ** 2

    def ratio(s, ssq):
        mean = s / ns
        var = ssq / ns - mean ** 2
        v = mean / ref
        sigma = v * np.sqrt(var / (ns * mean ** 2) + ref_var / (ns * ref ** 2))
        return v, sigma

    v0, e0 = ratio(s0, s0sq)
    v90, e90 = ratio(s90, s90sq)
    return make_trace(grid.times, v0, v90, e0, e90)


def simulate_trace(
    source: SqueezingSpectrum,
    gate: GateFunction,
    ch: ChannelSpec,
    lo: LoConfig,
    analyzer: AnalyzerConfig,
    grid: TimeGrid,
    method: str = "deterministic",
    seed: int = 0,
    n_samples: int = 10_000,
    workers: int = 1,
) -> NoiseTrace:
    """Analyzer traces at theta = 0 and pi/2.

    ``method="deterministic"`` propagates second moments exactly;
    ``method="monte-carlo"`` defers to :func:`mc_oracle`.
    """
    if method == "monte-carlo":
        return mc_oracle(source, gate, ch, lo, analyzer, grid, seed, n_samples, workers=workers)
    if method != "deterministic":
        raise ValueError(f"unknown method {method!r}")
    pipe = _build_pipeline(gate, ch, lo, analyzer, grid)
    excess_n, excess_m, ref = _deterministic(source, pipe, grid)
    v0 = _normalized(pipe, excess_n, excess_m, ref, 0.0)
    v90 = _normalized(pipe, excess_n, excess_m, ref, np.pi / 2)
    return make_trace(grid.times, v0, v90)
