"""Figure rendering for the preset datasets (PNG, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def _grid_panel(ax, x, y, z, label, ep_curve=None, log_color=False):
    norm = LogNorm(vmin=max(np.nanmin(z[z > 0]), 1e-12), vmax=np.nanmax(z)) if log_color else None
    mesh = ax.pcolormesh(x, y, z.T, shading="auto", norm=norm)
    ax.figure.colorbar(mesh, ax=ax, label=label)
    if ep_curve:
        ns = [n for _, n in ep_curve]
        oms = [om for om, _ in ep_curve]
        ax.plot(ns, oms, "w--", lw=1.2)
    ax.set_xlabel(r"$N_{\rm th}$")


def render_spectrum_lines(path, nths, block_eigs):
    """Real parts of the block spectra along the thermal-occupation axis."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    colors = {"L5": "tab:blue", "L2L": "tab:red", "L2R": "tab:orange"}
    seen = set()
    for block, data in block_eigs.items():
        for k in range(data.shape[1]):
            label = block if block not in seen else None
            ax.plot(nths, data[:, k].real, ".", ms=2, color=colors[block], label=label)
            seen.add(block)
    ax.set_xlabel(r"$N_{\rm th}$")
    ax.set_ylabel(r"Re $\lambda$  ($\mu s^{-1}$)")
    ax.legend(markerscale=4)
    return _save(fig, path)


def render_gap_map(path, nths, omegas, gap, label, ep_curve=None):
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    _grid_panel(ax, nths, omegas, gap, label, ep_curve=ep_curve)
    ax.set_ylabel(r"$\Omega/2\pi$ (MHz)")
    return _save(fig, path)


def render_energy_curves(path, curves, inset_nth, inset_gap):
    """Normalized charging curves with the slow-gap inset."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for nth, (ts, e_ratio) in curves.items():
        ax.plot(ts, e_ratio, label=rf"$N_{{\rm th}}={nth:g}$")
    ax.set_xlabel(r"$t$ ($\mu$s)")
    ax.set_ylabel(r"$E(t)/E_s$")
    ax.set_xscale("log")
    ax.legend(fontsize=8, loc="lower right")
    ins = ax.inset_axes([0.1, 0.55, 0.38, 0.38])
    ins.plot(inset_nth, inset_gap, "k-", lw=1)
    for nth in curves:
        k = np.argmin(np.abs(inset_nth - nth))
        ins.plot(inset_nth[k], inset_gap[k], "o", ms=4)
    ins.set_xlabel(r"$N_{\rm th}$", fontsize=7)
    ins.set_ylabel(r"$\Delta_{\rm slow}$", fontsize=7)
    ins.tick_params(labelsize=7)
    return _save(fig, path)


def render_distance_curves(path, curves):
    """Distance to the steady state against the pure-gap exponential."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
    for nth, (ts, dist, ref) in curves.items():
        axes[0].semilogy(ts, dist, label=rf"$N_{{\rm th}}={nth:g}$")
        axes[1].semilogy(ts, ref, "--")
    axes[0].set_title("propagated")
    axes[1].set_title(r"$e^{-\Delta_{\rm slow} t}$")
    for ax in axes:
        ax.set_xlabel(r"$t$ ($\mu$s)")
    axes[0].set_ylabel(r"$\|\rho(t)-\rho_{ss}\|$")
    axes[0].legend(fontsize=8)
    return _save(fig, path)


def render_threshold_maps(path, nths, epsilons, tau, power):
    fig, axes = plt.subplots(2, 2, figsize=(10, 7.5))
    for ax, z, lab, logc in (
        (axes[0, 0], tau, r"$\tau_s$ ($\mu$s)", True),
        (axes[0, 1], power, r"$P_s$ (eV/$\mu$s)", False),
    ):
        mesh = ax.pcolormesh(nths, np.log10(epsilons), z.T, shading="auto",
                             norm=LogNorm() if logc else None)
        fig.colorbar(mesh, ax=ax, label=lab)
        ax.set_xlabel(r"$N_{\rm th}$")
        ax.set_ylabel(r"$\log_{10}\varepsilon$")
    for j, eps in enumerate(epsilons[:: max(1, len(epsilons) // 4)]):
        je = list(epsilons).index(eps)
        axes[1, 0].plot(nths, tau[:, je] / np.log(1 / eps), label=rf"$\varepsilon=10^{{{np.log10(eps):.0f}}}$")
        axes[1, 1].plot(nths, power[:, je] * np.log(1 / eps))
    axes[1, 0].set_ylabel(r"$\tau_s/\ln(1/\varepsilon)$")
    axes[1, 1].set_ylabel(r"$P_s\,\ln(1/\varepsilon)$")
    for ax in axes[1]:
        ax.set_xlabel(r"$N_{\rm th}$")
    axes[1, 0].legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def render_steady_maps(path, nths, omegas, panels, ep_curve=None):
    """Four-panel steady/charging maps over the (n_th, drive) plane."""
    fig, axes = plt.subplots(2, 2, figsize=(10, 7.5))
    for ax, (label, z, logc) in zip(axes.flat, panels):
        _grid_panel(ax, nths, omegas, z, label, ep_curve=ep_curve, log_color=logc)
        ax.set_ylabel(r"$\Omega/2\pi$ (MHz)")
    fig.tight_layout()
    return _save(fig, path)


def render_tau_maps(path, nths, omegas, taus_by_eps, ep_curve=None):
    fig, axes = plt.subplots(2, 2, figsize=(10, 7.5))
    for ax, (eps, tau) in zip(axes.flat, taus_by_eps.items()):
        _grid_panel(ax, nths, omegas, tau, rf"$\tau_s$ ($\mu$s), $\varepsilon=10^{{{np.log10(eps):.0f}}}$",
                    ep_curve=ep_curve, log_color=True)
        ax.set_ylabel(r"$\Omega/2\pi$ (MHz)")
    fig.tight_layout()
    return _save(fig, path)


def render_detuning_maps(path, nths, deltas, panels):
    fig, axes = plt.subplots(2, 2, figsize=(10, 7.5))
    for ax, (label, z, logc) in zip(axes.flat, panels):
        norm = LogNorm() if logc else None
        mesh = ax.pcolormesh(nths, deltas, z.T, shading="auto", norm=norm)
        fig.colorbar(mesh, ax=ax, label=label)
        ax.set_xlabel(r"$N_{\rm th}$")
        ax.set_ylabel(r"$\delta/2\pi$ (MHz)")
    fig.tight_layout()
    return _save(fig, path)
