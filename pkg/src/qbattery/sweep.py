"""Deterministic grid sweeps over the tunable parameters."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dynamics import NotConvergedError, charging_metrics
from .liouville import (
    DegenerateSteadyStateError,
    build_liouvillian,
    extract_blocks,
    gaps,
    steady_state,
)
from .model import TWO_PI, SystemParams, l1_coherence, energy, von_neumann_entropy

AXIS_PARAMETERS = ("n_th", "omega_over_2pi", "delta_over_2pi", "epsilon")

SPECTRAL_METRICS = ("delta", "delta_slow", "delta_l2", "lambda_slow_real", "lambda_slow_imag")
STEADY_METRICS = ("e_s", "c_l1", "s_von")
DYNAMIC_METRICS = ("tau_s", "p_s", "overshoot")
ALL_METRICS = SPECTRAL_METRICS[:3] + STEADY_METRICS + DYNAMIC_METRICS + SPECTRAL_METRICS[3:]


@dataclass(frozen=True)
class AxisSpec:
    """One sweep axis: which parameter, its range, count and spacing."""

    parameter: str
    min: float
    max: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.parameter not in AXIS_PARAMETERS:
            raise ValueError(f"unknown axis parameter {self.parameter!r}; choose from {AXIS_PARAMETERS}")
        if self.count < 2:
            raise ValueError("axis count must be >= 2")
        if not self.min < self.max:
            raise ValueError("axis min must be < max")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")
        if self.spacing == "log" and self.min <= 0:
            raise ValueError("log spacing requires min > 0")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SweepSpec:
    """Two-axis sweep over a fixed parameter baseline."""

    axis1: AxisSpec
    axis2: AxisSpec
    fixed: SystemParams
    metrics: tuple = ALL_METRICS
    epsilon: float = 1e-8

    def __post_init__(self):
        unknown = [m for m in self.metrics if m not in ALL_METRICS]
        if unknown:
            raise ValueError(f"unknown metrics {unknown}; choose from {ALL_METRICS}")


@dataclass
class SweepResult:
    """Evaluated grid rows plus run metadata and an optional EP curve."""

    rows: list
    metadata: dict
    ep_curve: list | None = field(default=None)


def _apply_axis(p: SystemParams, epsilon: float, name: str, value: float):
    if name == "n_th":
        return p.with_(n_th=float(value)), epsilon
    if name == "omega_over_2pi":
        return p.with_(omega_rabi=TWO_PI * float(value)), epsilon
    if name == "delta_over_2pi":
        return p.with_(delta=TWO_PI * float(value)), epsilon
    if name == "epsilon":
        return p, float(value)
    raise ValueError(name)


def evaluate_point(p: SystemParams, epsilon: float, metrics) -> dict:
    """All requested metrics at one parameter point.

    Numerical failures are recorded in the row's status field rather than
    raised, so a sweep never aborts on a single bad point.
    """
    row = {
        "nth": p.n_th,
        "omega_over_2pi_mhz": p.omega_rabi / TWO_PI,
        "delta_over_2pi_mhz": p.delta / TWO_PI,
        "epsilon": epsilon,
        "status": "ok",
    }
    try:
        if any(m in metrics for m in SPECTRAL_METRICS):
            sop = build_liouvillian(p)
            report = gaps(sop)
            if "delta" in metrics:
                row["delta"] = report.delta
            if "delta_slow" in metrics:
                row["delta_slow"] = report.delta_slow
            if "delta_l2" in metrics:
                row["delta_l2"] = report.delta_l2
            if "lambda_slow_real" in metrics or "lambda_slow_imag" in metrics:
                ev5 = np.linalg.eigvals(extract_blocks(sop).l5)
                ev5 = np.delete(ev5, int(np.argmin(np.abs(ev5))))
                lam = ev5[int(np.argmax(ev5.real))]
                if "lambda_slow_real" in metrics:
                    row["lambda_slow_real"] = float(lam.real)
                if "lambda_slow_imag" in metrics:
                    row["lambda_slow_imag"] = float(lam.imag)
        if any(m in metrics for m in STEADY_METRICS):
            rho_ss = steady_state(build_liouvillian(p))
            if "e_s" in metrics:
                row["e_s"] = energy(rho_ss, p)
            if "c_l1" in metrics:
                row["c_l1"] = l1_coherence(rho_ss)
            if "s_von" in metrics:
                row["s_von"] = von_neumann_entropy(rho_ss)
        if any(m in metrics for m in DYNAMIC_METRICS):
            cm = charging_metrics(p, epsilon=epsilon)
            if "tau_s" in metrics:
                row["tau_s"] = cm.tau_s
            if "p_s" in metrics:
                row["p_s"] = cm.p_s
            if "overshoot" in metrics:
                row["overshoot"] = cm.overshoot
    except NotConvergedError:
        row["status"] = "not_converged"
    except DegenerateSteadyStateError:
        row["status"] = "degenerate_steady_state"
    except (ValueError, np.linalg.LinAlgError) as exc:
        row["status"] = f"error:{type(exc).__name__}"
    return row


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Evaluate every grid point, axis1 outer and axis2 inner, ascending.

    The row order and content are independent of the thread count.
    """
    t_start = time.perf_counter()
    points = []
    for v1 in spec.axis1.values():
        p1, e1 = _apply_axis(spec.fixed, spec.epsilon, spec.axis1.parameter, v1)
        for v2 in spec.axis2.values():
            points.append(_apply_axis(p1, e1, spec.axis2.parameter, v2))

    def work(pe):
        return evaluate_point(pe[0], pe[1], spec.metrics)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, points))
    else:
        rows = [work(pe) for pe in points]

    metadata = {
        "tool": "qbattery",
        "version": __version__,
        "axes": [
            {"parameter": a.parameter, "min": a.min, "max": a.max,
             "count": a.count, "spacing": a.spacing}
            for a in (spec.axis1, spec.axis2)
        ],
        "fixed": {
            "gamma20": spec.fixed.gamma20,
            "gamma21": spec.fixed.gamma21,
            "gamma10": spec.fixed.gamma10,
            "n_th": spec.fixed.n_th,
            "omega_over_2pi_mhz": spec.fixed.omega_rabi / TWO_PI,
            "delta_over_2pi_mhz": spec.fixed.delta / TWO_PI,
            "e1": spec.fixed.e1,
            "e2": spec.fixed.e2,
            "epsilon": spec.epsilon,
        },
        "metrics": list(spec.metrics),
        "threads": threads,
        "wall_time_s": None,
    }
    metadata["wall_time_s"] = round(time.perf_counter() - t_start, 3)
    return SweepResult(rows=rows, metadata=metadata)
