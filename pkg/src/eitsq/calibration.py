"""
Sequential fit of the model to the measured anchors.

1. OPO pump ratio and escape efficiency from the monochromatic squeezing and
   anti-squeezing levels.
2. Control calibration ``kappa`` from the pulse delay at the lowest control
   power.  The flux-centroid delay does not depend on ``eta_path``.
3. ``eta_path`` from the bichromatic squeezing on two-photon resonance.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy import optimize

from .config import Resolved, ScenarioConfig
from .eit import EitParams, analytic_group_delay, window_fwhm
from .measurement import ChannelSpec, apply_channel, eit_channel, measure
from .opo import InfeasibleTargetError, OpoParams, calibrate_opo, opo_levels, opo_spectrum
from .pulse import NoiseTrace, extract_delay, simulate_trace
from .spectral import to_db

log = logging.getLogger(__name__)


class CalibrationError(RuntimeError):
    """A calibration stage has no solution."""

    def __init__(self, stage: str, message: str, residual: float | None = None):
        self.stage = stage
        self.residual = residual
        text = f"stage {stage}: {message}"
        if residual is not None:
            text += f" (best residual {residual:.4g})"
        super().__init__(text)


@dataclass(frozen=True)
class CalibrationRecord:
    opo: OpoParams
    eta_path: float
    kappa: float
    gamma_0: float
    fitted_at: str
    residuals: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CalibrationRecord":
        data = json.loads(text)
        return cls(
            OpoParams(**data["opo"]),
            float(data["eta_path"]),
            float(data["kappa"]),
            float(data["gamma_0"]),
            str(data["fitted_at"]),
            dict(data["residuals"]),
        )

    def save(self, path: str | Path):
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(self.to_json(), encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "CalibrationRecord":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


# -- forward models shared with the scenarios -------------------------------------

def resonance_noise(cfg: ScenarioConfig, opo: OpoParams, eit: EitParams, eta_path: float, theta=0.0) -> float:
    """Band-averaged measured noise with the medium in the probe path."""
    out = apply_channel(opo_spectrum(opo, cfg.cw_grid()), eit_channel(eit, eta_path))
    return measure(out, cfg.lo(theta), cfg.analyzer()).s


def reference_trace(cfg: ScenarioConfig, opo: OpoParams, eta_path: float = 1.0, **kw) -> NoiseTrace:
    """Pulse without atoms."""
    source = opo_spectrum(opo, cfg.pulse_grid())
    return simulate_trace(
        source, cfg.gate(), ChannelSpec(eta_path=eta_path), cfg.lo(), cfg.analyzer(), cfg.time_grid(), **kw
    )


def medium_trace(cfg: ScenarioConfig, opo: OpoParams, eit: EitParams, eta_path: float = 1.0, **kw) -> NoiseTrace:
    source = opo_spectrum(opo, cfg.pulse_grid())
    return simulate_trace(
        source, cfg.gate(), eit_channel(eit, eta_path), cfg.lo(), cfg.analyzer(), cfg.time_grid(), **kw
    )


# -- stages -------------------------------------------------------------------------

def _fit_opo(cfg: ScenarioConfig) -> OpoParams:
    try:
        return calibrate_opo(
            cfg.get("source", "target_sqz"),
            cfg.get("source", "target_antisqz"),
            cfg.get("source", "target_detuning"),
            cfg.get("source", "gamma_hwhm"),
        )
    except InfeasibleTargetError as exc:
        raise CalibrationError("1 (OPO)", str(exc)) from None


def _fit_kappa(cfg: ScenarioConfig, opo: OpoParams, gamma_0: float) -> tuple[float, float]:
    target = cfg.get("calibration", "target_delay")
    power = cfg.get("calibration", "delay_power")
    base = cfg.eit_base(gamma_0)
    ref = reference_trace(cfg, opo)

    def delay(log_kappa):
        omega_c = np.sqrt(np.exp(log_kappa) * power)
        return extract_delay(medium_trace(cfg, opo, base.with_control(omega_c=omega_c)), ref)

    # the measured delay stays below the small-detuning group delay
    k0 = 2 * base.d * base.gamma_e / (target * power)
    lo, hi = np.log(k0 / 8), np.log(k0)
    f_lo, f_hi = delay(lo) - target, delay(hi) - target
    if f_lo * f_hi > 0:
        best = min(abs(f_lo), abs(f_hi))
        raise CalibrationError("2 (kappa)", f"delay {target:g} s not bracketed", best)
    log_k = optimize.brentq(lambda v: delay(v) - target, lo, hi, xtol=1e-6)
    kappa = float(np.exp(log_k))
    residual = delay(log_k) - target
    log.info("kappa = %.6g (rad/s)^2/W, delay residual %.3g s", kappa, residual)
    return kappa, residual


def _fit_eta_path(cfg: ScenarioConfig, opo: OpoParams, eit: EitParams) -> tuple[float, float]:
    target = cfg.get("calibration", "resonance_sqz")

    def miss(eta):
        return to_db(resonance_noise(cfg, opo, eit, eta)) - target

    top = miss(1.0)
    if top > 0:
        raise CalibrationError("3 (eta_path)", f"{target} dB not reachable even without path loss", top)
    eta = optimize.brentq(miss, 1e-6, 1.0, xtol=1e-13)
    return float(eta), float(miss(eta))


def calibrate(cfg: ScenarioConfig, now: datetime | None = None) -> CalibrationRecord:
    opo = _fit_opo(cfg)
    sm, sp = (to_db(v) for v in opo_levels(opo, cfg.get("source", "target_detuning")))
    gamma_0 = cfg.get("medium", "gamma_0")
    kappa, delay_res = _fit_kappa(cfg, opo, gamma_0)

    base = cfg.eit_base(gamma_0)
    widest = max(cfg.get("medium", "powers") + (cfg.get("medium", "control_power"),))
    fwhm = window_fwhm(base.with_control(omega_c=np.sqrt(kappa * widest)))
    if fwhm >= cfg.get("calibration", "max_window"):
        raise CalibrationError("2 (kappa)", f"transparency window {fwhm:g} Hz is not below the allowed maximum")

    eit = base.with_control(omega_c=np.sqrt(kappa * cfg.get("calibration", "resonance_power")))
    eta_path, sqz_res = _fit_eta_path(cfg, opo, eit)
    stamp = (now or datetime.now(timezone.utc)).isoformat(timespec="seconds")
    residuals = {
        "opo_sqz_db": sm - cfg.get("source", "target_sqz"),
        "opo_antisqz_db": sp - cfg.get("source", "target_antisqz"),
        "delay_s": delay_res,
        "resonance_sqz_db": sqz_res,
        "window_fwhm_hz": fwhm,
        "group_delay_at_delay_power_s": analytic_group_delay(
            base.with_control(omega_c=np.sqrt(kappa * cfg.get("calibration", "delay_power")))
        ),
    }
    return CalibrationRecord(opo, eta_path, kappa, gamma_0, stamp, residuals)


def resolve(cfg: ScenarioConfig, record: CalibrationRecord | None) -> Resolved:
    """Merge explicit config values over a calibration record."""

    def pick(section, key, from_record):
        if (section, key) in cfg.user_keys or (record is None and cfg.has(section, key)):
            return cfg.get(section, key)
        return from_record

    opo = record.opo if record else None
    if cfg.has("source", "x") or cfg.has("source", "eta_esc"):
        x = pick("source", "x", opo.x if opo else None)
        eta = pick("source", "eta_esc", opo.eta_esc if opo else None)
        if x is not None and eta is not None:
            opo = OpoParams(x, cfg.get("source", "gamma_hwhm"), eta)
    gamma_0 = record.gamma_0 if record and ("medium", "gamma_0") not in cfg.user_keys else cfg.get("medium", "gamma_0")
    return Resolved(
        opo,
        pick("medium", "kappa", record.kappa if record else None),
        gamma_0,
        pick("medium", "eta_path", record.eta_path if record else None),
    )
