"""
Scenario runners.  Each scenario turns a resolved configuration into one or
more tables, written as CSV with ``#`` manifest lines, plus ``manifest.json``.
"""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .calibration import CalibrationRecord, resolve
from .config import Resolved, ScenarioConfig
from .eit import analytic_group_delay, eit_transfer
from .measurement import BI, MONO, ChannelSpec, LoConfig, eit_channel, noise_bi, noise_mono, noise_scan_vs_control_detuning
from .opo import OpoParams, calibrate_opo, opo_spectrum
from .pulse import NoiseTrace, extract_delay, flux_fwhm, simulate_trace
from .spectral import SqueezingSpectrum, to_db

FLUX_ARTIFACT = -1e-3


@dataclass
class Table:
    name: str
    columns: list[str]
    data: np.ndarray
    notes: dict = field(default_factory=dict)


@dataclass
class Context:
    cfg: ScenarioConfig
    res: Resolved
    seed: int


# -- helpers ------------------------------------------------------------------------

def _source_params(ctx: Context) -> OpoParams:
    if ctx.res.opo is not None:
        return ctx.res.opo
    # the source fit is cheap and needs no external record
    cfg = ctx.cfg
    opo = calibrate_opo(
        cfg.get("source", "target_sqz"),
        cfg.get("source", "target_antisqz"),
        cfg.get("source", "target_detuning"),
        cfg.get("source", "gamma_hwhm"),
    )
    ctx.res = Resolved(opo, ctx.res.kappa, ctx.res.gamma_0, ctx.res.eta_path)
    return opo


def _medium(ctx: Context, power: float):
    base = ctx.cfg.eit_base(ctx.res.gamma_0)
    return base.with_control(omega_c=float(np.sqrt(ctx.res.kappa * power)))


def _trace_table(name: str, trace: NoiseTrace, notes: dict) -> Table:
    zeros = np.zeros_like(trace.v0)
    s0 = zeros if trace.sigma0 is None else trace.sigma0
    s90 = zeros if trace.sigma90 is None else trace.sigma90
    artifact = (trace.flux < FLUX_ARTIFACT).astype(float)
    data = np.column_stack([trace.times, trace.v0, trace.v90, trace.flux, s0, s90, artifact])
    return Table(name, ["time_s", "v0", "v90", "flux", "sigma_v0", "sigma_v90", "flux_artifact"], data, notes)


# -- scenarios ----------------------------------------------------------------------

def fig2a_transmission(ctx: Context) -> list[Table]:
    """Probe intensity transmission with and without the control field."""
    ctx.res.require("kappa")
    cfg = ctx.cfg
    power = cfg.get("medium", "control_power")
    on = _medium(ctx, power)
    off = on.with_control(omega_c=0.0)
    delta = cfg.scan()
    t_on = eit_transfer(on, delta)
    data = np.column_stack([delta, np.abs(eit_transfer(off, delta)) ** 2, np.abs(t_on) ** 2, np.angle(t_on)])
    notes = {"control_power_w": power, "omega_c_rad_s": on.omega_c}
    return [Table("fig2a-transmission", ["probe_detuning_hz", "transmission_off", "transmission_on", "phase_on_rad"], data, notes)]


def fig2b_scan(ctx: Context) -> list[Table]:
    """Bichromatic quadrature noise against control detuning."""
    ctx.res.require("kappa", "eta_path")
    cfg = ctx.cfg
    opo = _source_params(ctx)
    power = cfg.get("medium", "control_power")
    source = opo_spectrum(opo, cfg.cw_grid())
    scan, s0, s90 = noise_scan_vs_control_detuning(
        source, _medium(ctx, power), cfg.lo(), cfg.analyzer(), cfg.scan(), ctx.res.eta_path
    )
    notes = {"control_power_w": power, "eta_path": ctx.res.eta_path}
    return [Table("fig2b-scan", ["delta_c_hz", "s0_db", "s90_db"], np.column_stack([scan, to_db(s0), to_db(s90)]), notes)]


def fig3_cw(ctx: Context) -> list[Table]:
    """Phase sweep of the source noise with a monochromatic and a bichromatic LO."""
    cfg = ctx.cfg
    opo = _source_params(ctx)
    source = opo_spectrum(opo, cfg.cw_grid())
    eps = cfg.get("measurement", "epsilon")
    analyzer = cfg.analyzer()
    theta = np.linspace(0.0, np.pi, cfg.get("scan", "theta_points"))
    mono = [noise_mono(source, LoConfig(MONO, eps, th), analyzer).db for th in theta]
    bi = [noise_bi(source, LoConfig(BI, eps, th), analyzer).db for th in theta]
    notes = {"x": opo.x, "eta_esc": opo.eta_esc}
    return [Table("fig3-cw", ["theta_rad", "s_mono_db", "s_bi_db"], np.column_stack([theta, mono, bi]), notes)]


def fig4_pulse(ctx: Context) -> list[Table]:
    """Gated squeezed-vacuum pulses through the medium at several control powers."""
    ctx.res.require("kappa", "eta_path")
    cfg = ctx.cfg
    opo = _source_params(ctx)
    grid = cfg.time_grid()
    lo, analyzer, gate = cfg.lo(), cfg.analyzer(), cfg.gate()
    kw = dict(method=cfg.get("pulse", "method"), seed=ctx.seed, n_samples=cfg.get("pulse", "mc_samples"))
    source = opo_spectrum(opo, cfg.pulse_grid())
    eta = ctx.res.eta_path

    def run(src, ch):
        return simulate_trace(src, gate, ch, lo, analyzer, grid, **kw)

    ref = run(source, ChannelSpec(eta_path=eta))
    dark = _medium(ctx, 0.0)
    tables = [
        _trace_table("fig4-A-no-atoms", ref, {"trace": "A"}),
        _trace_table("fig4-B-control-off", run(source, eit_channel(dark, eta)), {"trace": "B"}),
        _trace_table("fig4-C-shot", run(SqueezingSpectrum.vacuum(source.grid), ChannelSpec()), {"trace": "C"}),
    ]
    rows = []
    for power in cfg.get("medium", "powers"):
        eit = _medium(ctx, power)
        trace = run(source, eit_channel(eit, eta))
        delay = extract_delay(trace, ref)
        rows.append([power, delay, analytic_group_delay(eit), flux_fwhm(trace), delay * power])
        tables.append(_trace_table(f"fig4-control-{power * 1e6:g}uW", trace, {"control_power_w": power}))
    summary = Table(
        "fig4-delays",
        ["control_power_w", "delay_s", "group_delay_s", "flux_fwhm_s", "delay_power_s_w"],
        np.array(rows),
        {"reference_flux_fwhm_s": flux_fwhm(ref)},
    )
    return [summary] + tables


SCENARIOS = {
    "fig2a-transmission": fig2a_transmission,
    "fig2b-scan": fig2b_scan,
    "fig3-cw": fig3_cw,
    "fig4-pulse": fig4_pulse,
}


# -- output -------------------------------------------------------------------------

def _fmt(v) -> str:
    return f"{float(v):.12g}"


def resolved_config(cfg: ScenarioConfig, res: Resolved, seed: int) -> ScenarioConfig:
    """Configuration with every calibrated quantity written out explicitly."""
    out = ScenarioConfig({s: dict(items) for s, items in cfg.raw.items()}, set(cfg.user_keys), cfg.origin)
    out.raw.get("calibration", {}).pop("record", None)
    if res.opo is not None:
        out.set("source", "x", repr(res.opo.x))
        out.set("source", "eta_esc", repr(res.opo.eta_esc))
    if res.kappa is not None:
        out.set("medium", "kappa", f"{res.kappa!r} rad2/s2/W")
    if res.eta_path is not None:
        out.set("medium", "eta_path", repr(res.eta_path))
    out.set("medium", "gamma_0", f"{res.gamma_0!r} rad/s")
    out.set("pulse", "seed", str(seed))
    return out


def csv_text(table: Table, header: list[str]) -> str:
    lines = [f"# {h}" for h in header]
    lines += [f"# {k} = {_fmt(v) if isinstance(v, (int, float)) else v}" for k, v in sorted(table.notes.items())]
    lines.append(",".join(table.columns))
    lines += [",".join(_fmt(v) for v in row) for row in np.atleast_2d(table.data)]
    return "\n".join(lines) + "\n"


def write_atomic(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def versions() -> dict:
    return {"eitsq": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def run_scenario(
    name: str,
    cfg: ScenarioConfig,
    out_dir: str | Path,
    record: CalibrationRecord | None = None,
    seed: int | None = None,
    plots: bool | None = None,
) -> list[Path]:
    """Run one scenario and write its CSV files, figures and manifest into ``out_dir``."""
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    seed = cfg.get("pulse", "seed") if seed is None else int(seed)
    ctx = Context(cfg, resolve(cfg, record), seed)
    tables = SCENARIOS[name](ctx)

    final = resolved_config(cfg, ctx.res, seed)
    config_text = final.to_text()
    digest = hashlib.sha256(config_text.encode()).hexdigest()
    header = [f"eitsq {__version__}", f"scenario = {name}", f"seed = {seed}", f"config_sha256 = {digest}"]

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for table in tables:
        path = out_dir / f"{table.name}.csv"
        write_atomic(path, csv_text(table, header))
        written.append(path)
    cfg_path = out_dir / "resolved.ini"
    write_atomic(cfg_path, config_text)
    written.append(cfg_path)

    if plots if plots is not None else cfg.get("output", "plots"):
        from .plotting import render

        written += render(name, tables, out_dir)

    manifest = {
        "scenario": name,
        "seed": seed,
        "versions": versions(),
        "config": config_text,
        "outputs": {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in written if p.suffix in (".csv", ".ini")
        },
    }
    man_path = out_dir / "manifest.json"
    write_atomic(man_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(man_path)
    return written
