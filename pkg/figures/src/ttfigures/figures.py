"""One renderer per figure family, all reading the simulation CSV schema.

Every renderer takes (input_dir, output_path), reads fixed filenames, draws a
deterministic figure (fixed size, no randomness, no timestamps) and writes the
image. Fitted slope annotations are least-squares fits of the plotted CSV
values, computed here in the plotting layer.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .loading import SchemaError, floats, load_table

FIGSIZE = (6.4, 4.2)


def _new_axes(xlabel, ylabel):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=150)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _finish(fig, ax, output_path, legend=True):
    if legend and ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(output_path)
    plt.close(fig)
    return Path(output_path)


def render_time_scan(input_dir, output_path):
    """Time-averaged infidelity versus pulse duration, one marker set per temperature."""
    table = load_table(
        Path(input_dir) / "results.csv",
        ("temperature_uK", "t_p_us", "j_avg", "status"),
    )
    fig, ax = _new_axes("pulse duration (us)", "time-averaged infidelity")
    temps = sorted({float(t) for t in table["temperature_uK"]})
    for temp in temps:
        pts = [
            (float(t), float(j))
            for t, j, temp_i, status in zip(
                table["t_p_us"], table["j_avg"], table["temperature_uK"], table["status"]
            )
            if float(temp_i) == temp and status == "ok"
        ]
        if not pts:
            continue
        pts.sort()
        ax.semilogy([p[0] for p in pts], [p[1] for p in pts], "o-", ms=4, label=f"T = {temp:g} uK")
    ax.axhline(1e-2, color="0.6", lw=0.8, ls="--")
    return _finish(fig, ax, output_path)


def render_improvement(input_dir, output_path):
    """Relative improvement of the optimized pulse over the quadratic ramp."""
    table = load_table(
        Path(input_dir) / "improvement.csv",
        ("temperature_uK", "t_p_us", "j_pq", "j_oc", "improvement"),
    )
    fig, ax = _new_axes("pulse duration (us)", "relative improvement")
    temps = sorted({float(t) for t in table["temperature_uK"]})
    for temp in temps:
        pts = sorted(
            (float(t), float(r))
            for t, r, temp_i in zip(table["t_p_us"], table["improvement"], table["temperature_uK"])
            if float(temp_i) == temp
        )
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "s-", ms=4, label=f"T = {temp:g} uK")
    ax.set_ylim(top=1.05)
    return _finish(fig, ax, output_path)


def render_noise_traces(input_dir, output_path):
    """Per-timestep trap depth/waist factors and position offset of one realization."""
    table = load_table(
        Path(input_dir) / "realization_0.csv",
        ("t_us", "depth_factor", "waist_factor", "position_offset_um"),
    )
    t = floats(table, "t_us")
    fig, axes = plt.subplots(3, 1, figsize=(FIGSIZE[0], 6.0), dpi=150, sharex=True)
    for ax, column, label in zip(
        axes,
        ("depth_factor", "waist_factor", "position_offset_um"),
        ("depth factor", "waist factor", "position offset (um)"),
    ):
        ax.plot(t, floats(table, column), lw=0.8)
        ax.set_ylabel(label)
    axes[-1].set_xlabel("time (us)")
    fig.tight_layout()
    fig.savefig(output_path)
    plt.close(fig)
    return Path(output_path)


def render_recapture(input_dir, output_path):
    """Recapture probability versus release time for each pulse and transport count."""
    table = load_table(
        Path(input_dir) / "results.csv",
        ("pulse_kind", "n_transports", "tau_rc_us", "probability"),
    )
    fig, ax = _new_axes("release time (us)", "recapture probability")
    combos = sorted({(k, int(n)) for k, n in zip(table["pulse_kind"], table["n_transports"])})
    styles = {"pq": "o-", "oc": "s--"}
    for kind, n_t in combos:
        pts = sorted(
            (float(tau), float(p))
            for k, n, tau, p in zip(
                table["pulse_kind"], table["n_transports"], table["tau_rc_us"], table["probability"]
            )
            if k == kind and int(n) == n_t
        )
        ax.plot(
            [p[0] for p in pts],
            [p[1] for p in pts],
            styles.get(kind, "^-"),
            ms=3,
            label=f"{kind}, N_t = {n_t}",
        )
    ax.set_ylim(0.0, 1.05)
    return _finish(fig, ax, output_path)


def render_convergence(input_dir, output_path):
    """Log-log infidelity versus refinement factor with a fitted slope annotation."""
    table = load_table(
        Path(input_dir) / "results.csv", ("property", "scale", "size", "infidelity")
    )
    fig, ax = _new_axes("refinement factor", "infidelity vs reference")
    for prop in sorted(set(table["property"])):
        pts = sorted(
            (float(s), float(i))
            for p, s, i in zip(table["property"], table["scale"], table["infidelity"])
            if p == prop and float(i) > 0
        )
        if not pts:
            raise SchemaError("convergence data holds no positive infidelities to plot")
        scales = np.array([p[0] for p in pts])
        infs = np.array([p[1] for p in pts])
        label = prop
        if len(pts) >= 2:
            slope = -np.polyfit(np.log(scales), np.log(infs), 1)[0]
            label = f"{prop} (slope {slope:.2f})"
        ax.loglog(scales, infs, "o-", label=label)
    return _finish(fig, ax, output_path)


def render_state_evolution(input_dir, output_path):
    """Position/momentum expectations and spreads along one evolution."""
    paths = sorted(Path(input_dir).glob("trajectory_*.csv"))
    if not paths:
        raise SchemaError(f"{input_dir}: no trajectory_*.csv files")
    fig, axes = plt.subplots(2, 2, figsize=(FIGSIZE[0] * 1.4, 6.0), dpi=150, sharex=True)
    panels = (
        ("x_mean_um", "position mean (um)"),
        ("k_mean_rad_um", "momentum mean (rad/um)"),
        ("sigma_x_um", "position spread (um)"),
        ("sigma_k_rad_um", "momentum spread (rad/um)"),
    )
    for path in paths:
        table = load_table(
            path,
            ("t_us", "x_mean_um", "k_mean_rad_um", "sigma_x_um", "sigma_k_rad_um", "norm"),
        )
        t = floats(table, "t_us")
        for ax, (column, label) in zip(axes.flat, panels):
            ax.plot(t, floats(table, column), lw=0.9, label=path.stem)
            ax.set_ylabel(label)
    for ax in axes[-1]:
        ax.set_xlabel("time (us)")
    axes[0, 0].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(output_path)
    plt.close(fig)
    return Path(output_path)


def render_qsl_distance(input_dir, output_path):
    """Minimum transport time versus distance for each pulse kind."""
    table = load_table(
        Path(input_dir) / "results.csv", ("distance_um", "pulse_kind", "t_min_us")
    )
    fig, ax = _new_axes("transport distance (um)", "minimum transport time (us)")
    for kind, marker in (("pq", "o-"), ("oc", "s--")):
        pts = sorted(
            (float(d), float(t))
            for d, k, t in zip(table["distance_um"], table["pulse_kind"], table["t_min_us"])
            if k == kind and t not in ("", "None")
        )
        if not pts:
            continue
        d = np.array([p[0] for p in pts])
        t = np.array([p[1] for p in pts])
        label = kind
        if kind == "oc" and len(pts) >= 2:
            coeffs = np.polyfit(d, t, 1)
            fit = np.polyval(coeffs, d)
            ss_res = float(np.sum((t - fit) ** 2))
            ss_tot = float(np.sum((t - t.mean()) ** 2))
            r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
            label = f"oc (R^2 = {r2:.3f})"
            ax.plot(d, fit, color="0.6", lw=0.8)
        ax.plot(d, t, marker, ms=4, label=label)
    return _finish(fig, ax, output_path)


RENDERERS = {
    "time-scan": render_time_scan,
    "improvement": render_improvement,
    "noise-traces": render_noise_traces,
    "recapture": render_recapture,
    "convergence": render_convergence,
    "state-evolution": render_state_evolution,
    "qsl-distance": render_qsl_distance,
}


def render(figure_id: str, input_dir, output_path) -> Path:
    """Render one figure family from a directory of simulation CSV outputs."""
    if figure_id not in RENDERERS:
        raise SchemaError(
            f"unknown figure id {figure_id!r}; known: {', '.join(sorted(RENDERERS))}"
        )
    return RENDERERS[figure_id](input_dir, output_path)
