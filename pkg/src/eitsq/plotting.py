"""Static PNG figures drawn from scenario tables."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    tmp = path.with_name(path.stem + ".tmp.png")
    fig.savefig(tmp, metadata={"Software": None})
    plt.close(fig)
    tmp.replace(path)
    return path


def _by_name(tables):
    return {t.name: t for t in tables}


def _fig2a(tables, out):
    t = tables["fig2a-transmission"]
    fig, ax = plt.subplots()
    f = t.data[:, 0] / 1e6
    ax.plot(f, t.data[:, 1], label="control off")
    ax.plot(f, t.data[:, 2], label="control on")
    ax.set(xlabel="probe detuning (MHz)", ylabel="intensity transmission", ylim=(0, 1.05))
    ax.legend()
    return [_save(fig, out / "fig2a-transmission.png")]


def _fig2b(tables, out):
    t = tables["fig2b-scan"]
    fig, ax = plt.subplots()
    f = t.data[:, 0] / 1e6
    ax.plot(f, t.data[:, 1], label=r"$\theta = 0$")
    ax.plot(f, t.data[:, 2], label=r"$\theta = \pi/2$")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set(xlabel="control detuning (MHz)", ylabel="noise relative to shot (dB)")
    ax.legend()
    return [_save(fig, out / "fig2b-scan.png")]


def _fig3(tables, out):
    t = tables["fig3-cw"]
    fig, ax = plt.subplots()
    ax.plot(t.data[:, 0], t.data[:, 1], label="monochromatic LO")
    ax.plot(t.data[:, 0], t.data[:, 2], "--", label="bichromatic LO")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set(xlabel=r"LO phase $\theta$ (rad)", ylabel="noise relative to shot (dB)")
    ax.legend()
    return [_save(fig, out / "fig3-cw.png")]


def _fig4(tables, out):
    traces = [t for t in tables.values() if t.name != "fig4-delays"]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6.0, 7.5))
    for t in traces:
        label = t.name.removeprefix("fig4-")
        time = t.data[:, 0] * 1e6
        for ax, col in zip(axes, (2, 1, 3)):
            ax.plot(time, t.data[:, col], lw=1.0, label=label)
    axes[0].set_ylabel(r"$V(\theta = \pi/2)$")
    axes[1].set_ylabel(r"$V(\theta = 0)$")
    axes[2].set_ylabel("photon flux (arb.)")
    axes[2].set_xlabel(r"time ($\mu$s)")
    # zoom on the samples that carry flux in any trace
    flux = np.max([np.abs(t.data[:, 3]) for t in traces], axis=0)
    if flux.max() > 0:
        time = traces[0].data[:, 0] * 1e6
        lit = time[flux > 0.01 * flux.max()]
        pad = max(lit[-1] - lit[0], 1.0)
        axes[2].set_xlim(max(time[0], lit[0] - pad), min(time[-1], lit[-1] + pad))
    axes[0].legend(ncol=2)
    return [_save(fig, out / "fig4-pulse.png")]


_RENDERERS = {
    "fig2a-transmission": _fig2a,
    "fig2b-scan": _fig2b,
    "fig3-cw": _fig3,
    "fig4-pulse": _fig4,
}


def render(scenario: str, tables, out_dir) -> list[Path]:
    """Draw the figure(s) for ``scenario`` next to its CSV files."""
    with plt.rc_context(_STYLE):
        return _RENDERERS[scenario](_by_name(tables), Path(out_dir))
