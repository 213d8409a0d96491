"""Analytic machinery of the slow sector at zero detuning.

With the detuning at zero and the storage level treated as non-decaying, the
five slow components close on themselves: the symmetric coherence combination
sigma = rho12 + rho21 decays independently at Gamma, and the remaining
dynamics of (delta rho22, A, delta rho11), with A = rho12 - rho21, is
generated by a 3x3 matrix M whose characteristic cubic is handled in closed
form.  A vanishing cubic discriminant together with a one-dimensional kernel
marks a second-order exceptional point of the generator; beyond it, adiabatic
elimination of the fast pair yields a single effective relaxation rate for
the storage population.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import SystemParams

#: relative discriminant residual accepted at a located exceptional point
EP_DISCRIMINANT_RTOL = 1e-12
#: singular values below this fraction of the largest count toward the kernel
KERNEL_SV_RTOL = 1e-6

_CONSISTENCY_RNG_SEED = 20260811


class CubicConsistencyError(RuntimeError):
    """Closed-form cubic coefficients disagree with det(lambda I - M)."""


def _require_zero_detuning(p: SystemParams):
    if p.delta != 0.0:
        raise ValueError("analytic slow sector requires zero detuning")


def sigma_rate(p: SystemParams) -> float:
    """Decay rate Gamma = [gamma21 + gamma20 (n_th + 1)] / 2 of the symmetric coherence."""
    _require_zero_detuning(p)
    return 0.5 * (p.gamma21 + p.gamma20 * (p.n_th + 1.0))


def build_l5_analytic(p: SystemParams) -> np.ndarray:
    """Closed-form slow block on (rho22, rho12, rho21, rho11, rho00).

    Entries match the numerically assembled block exactly (they are the same
    rational combinations of the inputs).  gamma10 is ignored; requires
    delta = 0.
    """
    _require_zero_detuning(p)
    w = p.omega_rabi
    gp = p.gamma20 * (p.n_th + 1.0)
    ng = p.gamma20 * p.n_th
    gamma_bar = 0.5 * (p.gamma21 + gp)
    return np.array([
        [-2.0 * gamma_bar, -1j * w, 1j * w, 0.0, ng],
        [-1j * w, -gamma_bar, 0.0, 1j * w, 0.0],
        [1j * w, 0.0, -gamma_bar, -1j * w, 0.0],
        [p.gamma21, 1j * w, -1j * w, 0.0, 0.0],
        [gp, 0.0, 0.0, 0.0, -ng],
    ], dtype=complex)


@dataclass(frozen=True)
class ReducedGenerator:
    """3x3 generator on (delta rho22, A, delta rho11) after trace elimination."""

    m: np.ndarray
    gamma_bar: float


def build_m(p: SystemParams) -> ReducedGenerator:
    """Trace-reduced slow generator; its eigenvalues are the three nonzero,
    non-sigma slow rates."""
    _require_zero_detuning(p)
    w = p.omega_rabi
    ng = p.gamma20 * p.n_th
    gamma_bar = sigma_rate(p)
    m = np.array([
        [-(2.0 * gamma_bar + ng), -1j * w, -ng],
        [-2j * w, -gamma_bar, 2j * w],
        [p.gamma21, 1j * w, 0.0],
    ], dtype=complex)
    return ReducedGenerator(m=m, gamma_bar=gamma_bar)


@dataclass(frozen=True)
class CubicCoefficients:
    """Characteristic cubic of M: lambda^3 + a lambda^2 + b lambda + c,
    reduced by lambda = x - a/3 to x^3 + 3 P x - 2 R = 0."""

    a: float
    p_coef: float  # P
    r_coef: float  # R

    @property
    def discriminant(self) -> float:
        return self.r_coef**2 + self.p_coef**3


def cubic_coefficients(p: SystemParams, check: bool = True) -> CubicCoefficients:
    """Closed-form cubic coefficients (a, P, R) of the reduced generator.

    When ``check`` is set, the monic cubic they define is compared against
    det(lambda I - M) at five random points; a mismatch beyond 1e-8 relative
    raises :class:`CubicConsistencyError`.
    """
    _require_zero_detuning(p)
    g, n, w2 = p.gamma20, p.n_th, p.omega_rabi**2
    gsum = g + p.gamma21
    a = 0.5 * (5.0 * n * g + 3.0 * g + 3.0 * p.gamma21)
    pc = 4.0 * w2 / 3.0 - gsum**2 / 12.0 - n * g**2 / 3.0 - 13.0 / 36.0 * n**2 * g**2
    rc = (
        (3.0 * p.gamma21 - 4.0 * n * g) * w2 / 3.0
        - n * g * gsum**2 / 24.0
        - n**2 * g**3 * (36.0 + 35.0 * n) / 216.0
    )
    coeffs = CubicCoefficients(a=a, p_coef=pc, r_coef=rc)
    if check:
        m = build_m(p).m
        rng = np.random.default_rng(_CONSISTENCY_RNG_SEED)
        scale = max(a, 1.0)
        for lam in rng.uniform(-2.0 * scale, scale, size=5):
            x = lam + a / 3.0
            chi_closed = x**3 + 3.0 * pc * x - 2.0 * rc
            chi_det = np.linalg.det(lam * np.eye(3) - m).real
            denom = max(abs(chi_det), scale**3 * 1e-10)
            if abs(chi_closed - chi_det) / denom > 1e-8:
                raise CubicConsistencyError(
                    f"closed-form cubic deviates from det(lambda I - M) at lambda={lam:.6g}: "
                    f"{chi_closed:.12e} vs {chi_det:.12e}"
                )
    return coeffs


def cardano_roots(coeffs: CubicCoefficients) -> np.ndarray:
    """The three roots of the characteristic cubic, by the Cardano formula.

    The two cube-root branches are pinned by requiring their product to equal
    -P; a principal branch alone picks wrong roots once the discriminant goes
    negative.  Roots are sorted by descending real part, ties by ascending
    imaginary part.
    """
    a, pc, rc = coeffs.a, coeffs.p_coef, coeffs.r_coef
    s = np.sqrt(complex(coeffs.discriminant))
    t_plus, t_minus = rc + s, rc - s
    t = t_plus if abs(t_plus) >= abs(t_minus) else t_minus
    if t == 0.0:
        # p = q = 0: triple root at x = 0
        lam = np.full(3, -a / 3.0, dtype=complex)
    else:
        u = t ** (1.0 / 3.0)
        v = -pc / u
        w = np.exp(2j * np.pi / 3.0)
        xs = np.array([u + v, w * u + v / w, w**2 * u + v / w**2])
        lam = xs - a / 3.0
    return lam[np.lexsort((lam.imag, -lam.real))]


@dataclass
class EPResult:
    """Located exceptional point on the n_th tuning path at fixed drive."""

    n_th_ep: float
    lambda_ep: complex
    kernel_dim: int
    discriminant_residual: float
    sqrt_fit_exponent: float | None = None
    c1: float | None = None
    c2: float | None = None


def _discriminant_at(p: SystemParams, n_th: float) -> float:
    return cubic_coefficients(p.with_(n_th=n_th), check=False).discriminant


def locate_ep(p: SystemParams, n_th_interval: tuple[float, float] = (0.05, 20.0)) -> EPResult:
    """Find the thermal occupation where the slow pair coalesces.

    Bisects the cubic discriminant to a sign change, then verifies the
    defectiveness rank condition dim ker(M - lambda_EP I) = 1 by a singular
    value count.  Raises if the discriminant does not change sign on the
    interval, or if the degeneracy turns out diagonalizable.
    """
    _require_zero_detuning(p)
    lo, hi = float(n_th_interval[0]), float(n_th_interval[1])
    f_lo, f_hi = _discriminant_at(p, lo), _discriminant_at(p, hi)
    if f_lo == 0.0:
        lo_is_root = True
    elif np.sign(f_lo) == np.sign(f_hi):
        raise ValueError(
            f"discriminant does not change sign on [{lo:g}, {hi:g}] "
            f"(Lambda({lo:g})={f_lo:.3e}, Lambda({hi:g})={f_hi:.3e})"
        )
    else:
        lo_is_root = False
    if not lo_is_root:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            f_mid = _discriminant_at(p, mid)
            if f_mid == 0.0:
                lo = hi = mid
                break
            if np.sign(f_mid) == np.sign(f_lo):
                lo, f_lo = mid, f_mid
            else:
                hi, f_hi = mid, f_mid
    n_ep = 0.5 * (lo + hi)

    coeffs = cubic_coefficients(p.with_(n_th=n_ep), check=False)
    scale = coeffs.r_coef**2 + abs(coeffs.p_coef) ** 3
    residual = abs(coeffs.discriminant) / max(scale, 1e-300)
    if residual > EP_DISCRIMINANT_RTOL:
        raise ValueError(
            f"discriminant residual {residual:.2e} at n_th={n_ep:.8g} exceeds {EP_DISCRIMINANT_RTOL:g}"
        )

    roots = cardano_roots(coeffs)
    pairs = [(abs(roots[i] - roots[j]), i, j) for i in range(3) for j in range(i + 1, 3)]
    _, i, j = min(pairs)
    lam_ep = 0.5 * (roots[i] + roots[j])

    m = build_m(p.with_(n_th=n_ep)).m
    sv = np.linalg.svd(m - lam_ep * np.eye(3), compute_uv=False)
    kernel_dim = int((sv < KERNEL_SV_RTOL * sv[0]).sum())
    if kernel_dim != 1:
        raise ValueError(
            f"kernel dimension {kernel_dim} at the coalescence: "
            "diagonalizable degeneracy, not an exceptional point"
        )
    return EPResult(
        n_th_ep=n_ep,
        lambda_ep=complex(lam_ep),
        kernel_dim=kernel_dim,
        discriminant_residual=residual,
    )


def sqrt_scaling_fit(ep: EPResult, p: SystemParams, fractions=None) -> float:
    """Fitted exponent of the eigenvalue splitting just beyond the EP.

    Samples the overdamped side at n_th = n_EP (1 + f) for f in
    [1e-3, 1e-1], fits log|lambda_+ - lambda_-| against log(n_th - n_EP) and
    returns the slope (0.5 for a square-root branch point).  The drift and
    splitting amplitudes of the local expansion are stored on ``ep`` as
    ``c1`` and ``c2``.
    """
    _require_zero_detuning(p)
    if fractions is None:
        fractions = np.geomspace(1e-3, 1e-1, 25)
    d_n = ep.n_th_ep * np.asarray(fractions)
    splittings = np.empty(len(d_n))
    pair_means = np.empty(len(d_n))
    for k, dn in enumerate(d_n):
        roots = cardano_roots(cubic_coefficients(p.with_(n_th=ep.n_th_ep + dn), check=False))
        near = np.argsort(np.abs(roots - ep.lambda_ep))[:2]
        splittings[k] = abs(roots[near[0]] - roots[near[1]])
        pair_means[k] = 0.5 * (roots[near[0]] + roots[near[1]]).real
    resolvable = splittings > 1e-10
    if resolvable.sum() < 5:
        raise ValueError("insufficient resolvable splitting near the exceptional point")
    slope, intercept = np.polyfit(np.log(d_n[resolvable]), np.log(splittings[resolvable]), 1)
    ep.sqrt_fit_exponent = float(slope)
    ep.c1 = float(np.polyfit(d_n, pair_means - ep.lambda_ep.real, 1)[0])
    ep.c2 = float(np.exp(intercept) / 2.0)
    return float(slope)


class KappaEff(NamedTuple):
    """Effective storage relaxation rate: exact rational form and its
    large-n_th expansion."""

    exact: float
    asymptotic: float


def kappa_eff(p: SystemParams) -> KappaEff:
    """Single-mode relaxation rate from adiabatic elimination of the fast pair."""
    gamma_bar = 0.5 * (p.gamma21 + p.gamma20 * (p.n_th + 1.0))
    ng = p.gamma20 * p.n_th
    w2 = p.omega_rabi**2
    denom = 2.0 * gamma_bar**2 + gamma_bar * ng + 2.0 * w2
    exact = (gamma_bar * ng * p.gamma21 + 4.0 * w2 * (gamma_bar + ng) - 2.0 * w2 * p.gamma21) / denom
    if ng > 0.0:
        asymptotic = p.gamma21 / 2.0 + (24.0 * w2 - p.gamma21 * (p.gamma20 + p.gamma21)) / (4.0 * ng)
    else:
        asymptotic = np.inf
    return KappaEff(exact=float(exact), asymptotic=float(asymptotic))


def adiabatic_coherences(p: SystemParams, delta_rho11: complex) -> tuple[complex, complex]:
    """Quasi-static excited-population and coherence amplitudes slaved to the
    storage deviation delta_rho11."""
    gamma_bar = 0.5 * (p.gamma21 + p.gamma20 * (p.n_th + 1.0))
    ng = p.gamma20 * p.n_th
    w = p.omega_rabi
    denom = 2.0 * gamma_bar**2 + gamma_bar * ng + 2.0 * w**2
    if denom == 0.0:
        raise ZeroDivisionError("adiabatic denominator vanished; rates must be positive")
    d_rho22 = (2.0 * w**2 - gamma_bar * ng) / denom * delta_rho11
    a_coh = 4j * w * (gamma_bar + ng) / denom * delta_rho11
    return d_rho22, a_coh


def slow_spectrum(p: SystemParams) -> np.ndarray:
    """All five slow eigenvalues in the analytic path: 0, -Gamma and the
    cubic roots, sorted by descending real part."""
    roots = cardano_roots(cubic_coefficients(p))
    full = np.concatenate([[0.0, -sigma_rate(p)], roots])
    return full[np.lexsort((full.imag, -full.real))]


def delta_slow_analytic(p: SystemParams) -> float:
    """Slow-sector gap from the closed-form spectrum (delta = 0 path)."""
    ev = slow_spectrum(p)
    nonzero = ev[np.abs(ev) > 1e-12]
    return float(-nonzero.real.max())


def ep_trajectory(
    p: SystemParams,
    omegas_over_2pi,
    n_th_interval: tuple[float, float] = (0.05, 20.0),
) -> list[tuple[float, float]]:
    """EP locations (omega/2pi in MHz, n_th) over a drive grid.

    Drive values whose discriminant does not change sign on the interval are
    skipped.
    """
    curve = []
    for om in omegas_over_2pi:
        try:
            res = locate_ep(p.with_(omega_rabi=2.0 * np.pi * om), n_th_interval)
        except ValueError:
            continue
        curve.append((float(om), res.n_th_ep))
    return curve
