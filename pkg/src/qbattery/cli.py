"""Command-line front end.

Configuration precedence is flag > config file > built-in default.  The
config file is flat ``key = value`` text mirroring the long flag names;
``LIOUVILLE_THREADS`` provides the default worker count.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import NotConvergedError, charging_metrics, default_time_grid, propagate
from .liouville import (
    DegenerateSteadyStateError,
    build_liouvillian,
    eigendecompose,
    extract_blocks,
    gaps,
    steady_state,
)
from .model import TWO_PI, SystemParams, basis_state, ground_state, observables, validate_params
from .output import CSV_COLUMNS, emit, format_value, write_table
from .presets import PRESETS, run_preset
from .slow_sector import (
    cardano_roots,
    cubic_coefficients,
    delta_slow_analytic,
    ep_trajectory,
    kappa_eff,
    locate_ep,
    sigma_rate,
    sqrt_scaling_fit,
)
from .sweep import ALL_METRICS, AxisSpec, SweepSpec, SweepResult, run_sweep

DEFAULTS = {
    "gamma20": 140.0,
    "gamma21": 9.0,
    "gamma10": 1.3e-6,
    "nth": 4.8,
    "omega": 20.0,
    "delta": 0.0,
    "epsilon": 1e-8,
    "tmax": None,
    "points": 2000,
    "format": "csv",
    "threads": None,
}

_FLOAT_KEYS = ("gamma20", "gamma21", "gamma10", "nth", "omega", "delta", "epsilon", "tmax")
_INT_KEYS = ("points", "threads")


class ConfigError(Exception):
    pass


def parse_config(path) -> dict:
    """Flat key = value file; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _INT_KEYS:
                values[key] = int(val)
            else:
                values[key] = val
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {val!r}") from exc
    return values


def _common_options() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--gamma20", type=float, help="decay rate |2>->|0> in 1/us")
    c.add_argument("--gamma21", type=float, help="decay rate |2>->|1> in 1/us")
    c.add_argument("--gamma10", type=float, help="decay rate |1>->|0> in 1/us")
    c.add_argument("--nth", type=float, help="thermal occupation N_th")
    c.add_argument("--omega", type=float, help="drive Omega/2pi in MHz")
    c.add_argument("--delta", type=float, help="detuning delta/2pi in MHz")
    c.add_argument("--epsilon", type=float, help="convergence threshold")
    c.add_argument("--tmax", type=float, help="propagation horizon in us")
    c.add_argument("--points", type=int, help="number of output grid points")
    c.add_argument("--out", type=Path, help="output file path")
    c.add_argument("--format", choices=("csv", "json"), help="output format")
    c.add_argument("--config", type=Path, help="config file overriding defaults")
    c.add_argument("--threads", type=int, help="worker threads for sweeps")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="qbattery",
        description="Spectral analysis and charging dynamics of a three-level dissipative quantum battery",
    )
    parser.add_argument("--version", action="version", version=f"qbattery {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("spectrum", parents=[common],
                   help="full and block eigenvalues at one parameter point")
    sub.add_parser("steady", parents=[common],
                   help="steady state and its observables")
    p_prop = sub.add_parser("propagate", parents=[common],
                            help="time evolution from a chosen initial state")
    p_prop.add_argument("--initial", choices=("ground", "level1", "level2", "mixed"),
                        default="ground")
    sub.add_parser("metrics", parents=[common],
                   help="steady energy, relaxation time and charging power")
    sub.add_parser("slow-sector", parents=[common],
                   help="cubic coefficients, roots, discriminant and effective rate")
    p_ep = sub.add_parser("ep", parents=[common],
                          help="exceptional-point location or trajectory")
    p_ep.add_argument("--nth-range", default="0.05:20",
                      help="search interval lo:hi for the thermal occupation")
    p_ep.add_argument("--omega-range",
                      help="drive grid lo:hi:count (MHz) for an EP trajectory")
    p_sweep = sub.add_parser("sweep", parents=[common], help="2-D parameter sweep")
    p_sweep.add_argument("--axis1", required=True,
                         help="axis spec name:min:max:count[:linear|log]")
    p_sweep.add_argument("--axis2", required=True,
                         help="axis spec name:min:max:count[:linear|log]")
    p_sweep.add_argument("--metrics", default=",".join(ALL_METRICS),
                         help="comma-separated metric list")
    p_preset = sub.add_parser("preset", parents=[common],
                              help="emit the dataset and figure behind a named figure")
    p_preset.add_argument("name", choices=sorted(PRESETS))
    p_preset.add_argument("--outdir", type=Path, default=Path("."))
    p_preset.add_argument("--no-plot", action="store_true",
                          help="skip figure rendering, write data only")
    p_preset.add_argument("--grid", type=int, help="override the preset grid size")
    return parser


def _resolve(args) -> dict:
    settings = dict(DEFAULTS)
    if args.config is not None:
        settings.update(parse_config(args.config))
    for key in DEFAULTS:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            settings[key] = flag_val
    if settings["threads"] is None:
        settings["threads"] = int(os.environ.get("LIOUVILLE_THREADS", "1"))
    return settings


def _params(settings) -> SystemParams:
    return validate_params(SystemParams(
        gamma20=settings["gamma20"],
        gamma21=settings["gamma21"],
        gamma10=settings["gamma10"],
        n_th=settings["nth"],
        omega_rabi=TWO_PI * settings["omega"],
        delta=TWO_PI * settings["delta"],
    ))


def _single_row_result(p, settings, **fields) -> SweepResult:
    row = {
        "nth": p.n_th,
        "omega_over_2pi_mhz": p.omega_rabi / TWO_PI,
        "delta_over_2pi_mhz": p.delta / TWO_PI,
        "epsilon": settings["epsilon"],
        "status": fields.pop("status", "ok"),
        **fields,
    }
    meta = {"tool": "qbattery", "version": __version__, "command": "single-point"}
    return SweepResult(rows=[row], metadata=meta)


def cmd_spectrum(args) -> int:
    settings = _resolve(args)
    p = _params(settings)
    sop = build_liouvillian(p)
    blocks = extract_blocks(sop)
    full = eigendecompose(sop.matrix)
    print(f"# eigenvalues at nth={p.n_th:g}, omega/2pi={p.omega_rabi / TWO_PI:g} MHz, "
          f"delta/2pi={p.delta / TWO_PI:g} MHz  (1/us)")
    rows = []
    for name, mat in (("L5", blocks.l5), ("L2L", blocks.l2l), ("L2R", blocks.l2r)):
        ev = np.linalg.eigvals(mat)
        ev = ev[np.lexsort((ev.imag, -ev.real))]
        for k, lam in enumerate(ev):
            rows.append((name, k, lam.real, lam.imag))
    for name, k, re, im in rows:
        print(f"  {name:3s}[{k}]  {re:+.9e}  {im:+.9e}j")
    report = gaps(sop)
    print(f"# gaps: delta={report.delta:.9g}  delta_slow={report.delta_slow:.9g}  "
          f"delta_l2={report.delta_l2:.9g}")
    print(f"# zero modes (|lambda| < 1e-9): "
          f"{int((np.abs(full.eigenvalues) < 1e-9).sum())}")
    if args.out:
        write_table(args.out, ("block", "mode", "re_lambda_per_us", "im_lambda_per_us"), rows)
        print(f"wrote {args.out}")
    return 0


def cmd_steady(args) -> int:
    settings = _resolve(args)
    p = _params(settings)
    try:
        rho = steady_state(build_liouvillian(p))
    except DegenerateSteadyStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    obs = observables(rho, p)
    print("# steady state (rows: <i|rho|j>, basis |0>,|1>,|2>)")
    for i in range(3):
        print("  " + "  ".join(f"{rho[i, j]:+.6e}" for j in range(3)))
    print(f"# energy = {obs.energy:.9g} eV")
    print(f"# l1 coherence = {obs.l1_coherence:.9g}")
    print(f"# entropy = {obs.entropy:.9g} nats")
    if args.out:
        result = _single_row_result(p, settings, e_s=obs.energy,
                                    c_l1=obs.l1_coherence, s_von=obs.entropy)
        emit(result, settings["format"], args.out)
        print(f"wrote {args.out}")
    return 0


_INITIAL_STATES = {
    "ground": lambda: ground_state(),
    "level1": lambda: basis_state(1),
    "level2": lambda: basis_state(2),
    "mixed": lambda: np.eye(3, dtype=complex) / 3.0,
}


def cmd_propagate(args) -> int:
    settings = _resolve(args)
    p = _params(settings)
    rho0 = _INITIAL_STATES[args.initial]()
    grid = default_time_grid(p, settings["points"], t_max=settings["tmax"])
    traj = propagate(rho0, p, grid)
    header = ("t_us", "e_ev", "hs_distance", "rho00", "rho11", "rho22",
              "re_rho12", "im_rho12")
    rows = [
        (t, e, d, s[0, 0].real, s[1, 1].real, s[2, 2].real, s[1, 2].real, s[1, 2].imag)
        for t, e, d, s in zip(traj.times, traj.energies, traj.hs_distances, traj.states)
    ]
    if args.out:
        write_table(args.out, header, rows)
        print(f"wrote {args.out} ({len(rows)} points)")
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(format_value(v) for v in row))
    return 0


def cmd_metrics(args) -> int:
    settings = _resolve(args)
    p = _params(settings)
    try:
        cm = charging_metrics(p, epsilon=settings["epsilon"], t_max=settings["tmax"])
    except (NotConvergedError, DegenerateSteadyStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.out:
            status = ("not_converged" if isinstance(exc, NotConvergedError)
                      else "degenerate_steady_state")
            result = _single_row_result(p, settings, status=status)
            emit(result, settings["format"], args.out)
            print(f"wrote {args.out} (partial)", file=sys.stderr)
        return 1
    print(f"e_s = {cm.e_s:.9g} eV")
    print(f"tau_s = {cm.tau_s:.9g} us  (gap reference {cm.tau_gap_ref:.9g} us)")
    print(f"p_s = {cm.p_s:.9g} eV/us  (gap reference {cm.p_gap_ref:.9g} eV/us)")
    print(f"epsilon = {cm.epsilon:g}")
    print(f"overshoot = {str(cm.overshoot).lower()}")
    if args.out:
        result = _single_row_result(p, settings, e_s=cm.e_s, tau_s=cm.tau_s,
                                    p_s=cm.p_s, overshoot=cm.overshoot,
                                    epsilon=cm.epsilon)
        emit(result, settings["format"], args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_slow_sector(args) -> int:
    settings = _resolve(args)
    p = _params(settings)
    if p.delta != 0.0:
        # closed forms hold only on resonance; fall back to the numeric block
        blocks = extract_blocks(build_liouvillian(p))
        ev = np.linalg.eigvals(blocks.l5)
        ev = ev[np.lexsort((ev.imag, -ev.real))]
        print("# nonzero detuning: closed-form slow sector unavailable, "
              "reporting numeric slow-block spectrum")
        for k, lam in enumerate(ev):
            print(f"  L5[{k}]  {lam.real:+.9e}  {lam.imag:+.9e}j")
        print(f"delta_slow = {gaps(build_liouvillian(p)).delta_slow:.9g}")
        return 0
    coeffs = cubic_coefficients(p)
    roots = cardano_roots(coeffs)
    kap = kappa_eff(p)
    print(f"gamma_bar = {sigma_rate(p):.9g}")
    print(f"a = {coeffs.a:.9g}")
    print(f"P = {coeffs.p_coef:.9g}")
    print(f"R = {coeffs.r_coef:.9g}")
    print(f"discriminant = {coeffs.discriminant:.9g}")
    for k, lam in enumerate(roots):
        print(f"root[{k}] = {lam.real:+.9e} {lam.imag:+.9e}j")
    print(f"delta_slow = {delta_slow_analytic(p):.9g}")
    print(f"kappa_eff = {kap.exact:.9g}  (large-nth form {kap.asymptotic:.9g})")
    return 0


def _argument_error(message) -> SystemExit:
    print(f"qbattery: error: {message}", file=sys.stderr)
    return SystemExit(2)


def _parse_range(text, flag):
    parts = text.split(":")
    try:
        if len(parts) == 2:
            return float(parts[0]), float(parts[1])
        if len(parts) == 3:
            return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        pass
    raise _argument_error(f"argument {flag}: expected lo:hi[:count], got {text!r}")


def cmd_ep(args) -> int:
    settings = _resolve(args)
    p = _params(settings)
    lo, hi = _parse_range(args.nth_range, "--nth-range")
    if args.omega_range:
        olo, ohi, count = _parse_range(args.omega_range, "--omega-range")
        curve = ep_trajectory(p, np.linspace(olo, ohi, count), (lo, hi))
        if not curve:
            print("error: no exceptional point found anywhere on the drive grid",
                  file=sys.stderr)
            return 1
        for om, nth in curve:
            print(f"omega/2pi = {om:9.6g} MHz  ->  nth_ep = {nth:.9g}")
        if args.out:
            write_table(args.out, ("omega_over_2pi_mhz", "nth_ep"), curve)
            print(f"wrote {args.out}")
        return 0
    try:
        res = locate_ep(p, (lo, hi))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    exponent = sqrt_scaling_fit(res, p)
    print(f"nth_ep = {res.n_th_ep:.9g}")
    print(f"lambda_ep = {res.lambda_ep.real:+.9e} {res.lambda_ep.imag:+.9e}j")
    print(f"kernel_dim = {res.kernel_dim}")
    print(f"splitting exponent = {exponent:.4f}")
    if args.out:
        write_table(args.out,
                    ("omega_over_2pi_mhz", "nth_ep", "re_lambda_ep", "im_lambda_ep",
                     "kernel_dim", "sqrt_fit_exponent"),
                    [(p.omega_rabi / TWO_PI, res.n_th_ep, res.lambda_ep.real,
                      res.lambda_ep.imag, res.kernel_dim, exponent)])
        print(f"wrote {args.out}")
    return 0


def _parse_axis(text, flag) -> AxisSpec:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise _argument_error(
            f"argument {flag}: expected name:min:max:count[:spacing], got {text!r}")
    try:
        spacing = parts[4] if len(parts) == 5 else "linear"
        return AxisSpec(parts[0], float(parts[1]), float(parts[2]), int(parts[3]), spacing)
    except ValueError as exc:
        raise _argument_error(f"argument {flag}: {exc}")


def cmd_sweep(args) -> int:
    settings = _resolve(args)
    p = _params(settings)
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    try:
        spec = SweepSpec(
            axis1=_parse_axis(args.axis1, "--axis1"),
            axis2=_parse_axis(args.axis2, "--axis2"),
            fixed=p, metrics=metrics, epsilon=settings["epsilon"],
        )
    except ValueError as exc:
        raise _argument_error(f"--axis1/--axis2/--metrics: {exc}")
    result = run_sweep(spec, threads=settings["threads"])
    if args.out:
        emit(result, settings["format"], args.out)
        print(f"wrote {args.out} ({len(result.rows)} rows)")
    else:
        print(",".join(CSV_COLUMNS))
        from .output import format_row
        for row in result.rows:
            print(format_row(row))
    failures = sum(1 for row in result.rows if row["status"] != "ok")
    if failures:
        print(f"warning: {failures} grid points failed (see status column)", file=sys.stderr)
        return 1
    return 0


def cmd_preset(args) -> int:
    settings = _resolve(args)
    args.outdir.mkdir(parents=True, exist_ok=True)
    paths = run_preset(args.name, args.outdir, render=not args.no_plot,
                       threads=settings["threads"], grid=args.grid)
    for path in paths:
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "steady": cmd_steady,
    "propagate": cmd_propagate,
    "metrics": cmd_metrics,
    "slow-sector": cmd_slow_sector,
    "ep": cmd_ep,
    "sweep": cmd_sweep,
    "preset": cmd_preset,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"qbattery: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"qbattery: error: {exc}", file=sys.stderr)
        return 2
    except (NotConvergedError, DegenerateSteadyStateError) as exc:
        print(f"qbattery: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
