import numpy as np
import pytest

from qbattery.liouville import build_liouvillian, extract_blocks
from qbattery.model import TWO_PI, SystemParams
from qbattery.slow_sector import (
    CubicCoefficients,
    adiabatic_coherences,
    build_l5_analytic,
    build_m,
    cardano_roots,
    cubic_coefficients,
    delta_slow_analytic,
    ep_trajectory,
    kappa_eff,
    locate_ep,
    sigma_rate,
    slow_spectrum,
    sqrt_scaling_fit,
)
from conftest import assert_multisets_close


@pytest.fixture
def resonant(paper_params):
    return paper_params.with_(delta=0.0, gamma10=0.0)


class TestAnalyticL5:
    def test_matches_numeric_block_exactly(self, resonant):
        blocks = extract_blocks(build_liouvillian(resonant))
        assert np.array_equal(blocks.l5, build_l5_analytic(resonant))

    def test_requires_zero_detuning(self, paper_params):
        with pytest.raises(ValueError, match="detuning"):
            build_l5_analytic(paper_params.with_(delta=1.0))

    def test_no_drive_structure(self, resonant):
        # without the drive the coherence rows decouple, each damped at Gamma
        m = build_l5_analytic(resonant.with_(omega_rabi=0.0))
        gbar = sigma_rate(resonant)
        assert m[1, 1] == -gbar and m[2, 2] == -gbar
        assert np.abs(m[1, [0, 2, 3, 4]]).max() == 0.0
        assert np.abs(m[2, [0, 1, 3, 4]]).max() == 0.0

    def test_small_gamma10_perturbs_spectrum_weakly(self, paper_params):
        p0 = paper_params.with_(delta=0.0, gamma10=0.0)
        p1 = paper_params.with_(delta=0.0, gamma10=1.3e-6)
        ev_analytic = np.linalg.eigvals(build_l5_analytic(p0))
        ev_numeric = np.linalg.eigvals(extract_blocks(build_liouvillian(p1)).l5)
        assert_multisets_close(ev_analytic, ev_numeric, 10 * 1.3e-6)


class TestSigmaRate:
    def test_value_at_zero_occupation(self):
        p = SystemParams(n_th=0.0, delta=0.0)
        assert sigma_rate(p) == pytest.approx(74.5)

    def test_linear_growth_slope(self, resonant):
        g1 = sigma_rate(resonant.with_(n_th=3.0))
        g2 = sigma_rate(resonant.with_(n_th=5.0))
        assert (g2 - g1) / 2.0 == pytest.approx(resonant.gamma20 / 2.0)

    def test_exact_eigenvalue_of_slow_block(self, resonant):
        ev = np.linalg.eigvals(build_l5_analytic(resonant))
        assert np.abs(ev + sigma_rate(resonant)).min() < 1e-10
        # eigenvector: the symmetric coherence combination
        m = build_l5_analytic(resonant)
        v = np.array([0, 1, 1, 0, 0], dtype=complex) / np.sqrt(2)
        assert np.abs(m @ v + sigma_rate(resonant) * v).max() < 1e-10


class TestReducedGenerator:
    def test_spectrum_union_matches_l5(self, resonant):
        gen = build_m(resonant)
        union = np.concatenate([[0.0, -gen.gamma_bar], np.linalg.eigvals(gen.m)])
        ev5 = np.linalg.eigvals(build_l5_analytic(resonant))
        assert_multisets_close(union, ev5, 1e-10 * max(1.0, np.abs(ev5).max()))

    def test_no_drive_spectrum(self):
        p = SystemParams(n_th=0.0, omega_rabi=0.0, delta=0.0, gamma10=0.0)
        ev = np.linalg.eigvals(build_m(p).m)
        # rate matrix on populations: eigenvalues 0-adjacent pair and -(g20+g21)
        expected = np.roots([1.0, p.gamma20 + p.gamma21 + 0.0, 0.0])
        assert_multisets_close(
            np.sort(ev.real)[[0, 2]], np.sort(expected.real), 1e-9 * p.gamma20
        )
        assert np.abs(ev + sigma_rate(p)).min() < 1e-10

    def test_trace_equals_minus_a(self, resonant):
        gen = build_m(resonant)
        coeffs = cubic_coefficients(resonant)
        assert np.trace(gen.m).real == pytest.approx(-coeffs.a, rel=1e-12)


class TestCubicCoefficients:
    def test_a_at_zero_occupation(self):
        p = SystemParams(n_th=0.0, delta=0.0)
        assert cubic_coefficients(p).a == pytest.approx(0.5 * (3 * 140 + 3 * 9))

    def test_consistency_check_runs_clean(self, resonant):
        cubic_coefficients(resonant, check=True)

    def test_discriminant_sign_flips_across_ep(self, resonant):
        assert cubic_coefficients(resonant.with_(n_th=2.0)).discriminant > 0
        assert cubic_coefficients(resonant.with_(n_th=8.0)).discriminant < 0

    def test_roots_equal_generator_eigenvalues(self, resonant):
        for nth in (0.5, 2.0, 4.8, 8.0, 15.0):
            p = resonant.with_(n_th=nth)
            roots = cardano_roots(cubic_coefficients(p))
            ev = np.linalg.eigvals(build_m(p).m)
            assert_multisets_close(roots, ev, 1e-9 * max(1.0, np.abs(ev).max()))

    def test_discriminant_sign_classifies_roots(self, resonant):
        # positive discriminant: one real root and a conjugate pair;
        # negative: three real roots
        for nth in np.linspace(0.2, 18.0, 15):
            for om in np.linspace(2.0, 38.0, 15):
                p = resonant.with_(n_th=float(nth), omega_rabi=TWO_PI * float(om))
                coeffs = cubic_coefficients(p, check=False)
                roots = cardano_roots(coeffs)
                scale = max(1.0, np.abs(roots.real).max())
                n_complex = int((np.abs(roots.imag) > 1e-7 * scale).sum())
                if coeffs.discriminant > 0:
                    assert n_complex == 2
                elif coeffs.discriminant < 0:
                    assert n_complex == 0


class TestCardano:
    def test_degenerate_cubic_triple_root(self):
        coeffs = CubicCoefficients(a=6.0, p_coef=0.0, r_coef=0.0)
        roots = cardano_roots(coeffs)
        assert np.allclose(roots, -2.0)

    def test_negative_discriminant_gives_real_roots(self, resonant):
        coeffs = cubic_coefficients(resonant.with_(n_th=8.0))
        assert coeffs.discriminant < 0
        roots = cardano_roots(coeffs)
        assert np.abs(roots.imag).max() < 1e-10 * np.abs(roots.real).max()

    def test_roots_sorted_by_real_part(self, resonant):
        roots = cardano_roots(cubic_coefficients(resonant.with_(n_th=2.0)))
        assert np.all(np.diff(roots.real) <= 1e-12)


class TestLocateEP:
    def test_location_at_reference_drive(self, resonant):
        res = locate_ep(resonant)
        assert res.n_th_ep == pytest.approx(4.8, abs=0.5)
        assert res.kernel_dim == 1
        assert res.discriminant_residual < 1e-12

    def test_gap_maximum_sits_at_ep(self, resonant):
        res = locate_ep(resonant)
        nths = np.arange(0.1, 20.0 + 1e-9, 0.1)
        gaps_on_grid = np.array(
            [delta_slow_analytic(resonant.with_(n_th=float(n))) for n in nths]
        )
        n_star = nths[int(np.argmax(gaps_on_grid))]
        assert abs(n_star - res.n_th_ep) <= 0.1 + 1e-12
        # rising on the underdamped side, falling on the overdamped side
        assert np.all(np.diff(gaps_on_grid[nths <= n_star]) > 0)
        assert np.all(np.diff(gaps_on_grid[nths >= n_star]) < 0)

    def test_no_sign_change_raises(self, resonant):
        weak = resonant.with_(omega_rabi=TWO_PI * 1.0)
        with pytest.raises(ValueError, match="sign"):
            locate_ep(weak)

    def test_trajectory_over_drive_grid(self, resonant):
        curve = ep_trajectory(resonant, (10.0, 20.0, 30.0))
        assert len(curve) == 3
        oms, nths = zip(*curve)
        assert np.all(np.diff(nths) > 0)  # EP moves to higher occupation with drive


class TestSqrtScaling:
    def test_exponent_near_half(self, resonant):
        res = locate_ep(resonant)
        exponent = sqrt_scaling_fit(res, resonant)
        assert exponent == pytest.approx(0.5, abs=0.1)
        assert res.sqrt_fit_exponent == exponent
        assert res.c1 < 0
        assert res.c2 > 0

    def test_synthetic_jordan_perturbation(self):
        # [[0, 1], [kappa - kappa_ep, 0]] splits exactly as a square root
        dk = np.geomspace(1e-6, 1e-2, 20)
        split = 2.0 * np.sqrt(dk)
        slope = np.polyfit(np.log(dk), np.log(split), 1)[0]
        assert slope == pytest.approx(0.5, abs=1e-3)

    def test_underdamped_side_splits_in_imaginary_part(self, resonant):
        res = locate_ep(resonant)
        p = resonant.with_(n_th=res.n_th_ep * 0.98)
        roots = cardano_roots(cubic_coefficients(p))
        near = roots[np.argsort(np.abs(roots - res.lambda_ep))[:2]]
        assert abs(near[0].real - near[1].real) < 1e-10 * abs(near[0].real)
        assert abs(near[0].imag - near[1].imag) > 0.1


class TestKappaEff:
    def test_limit_is_half_gamma21(self, resonant):
        kap = kappa_eff(resonant.with_(n_th=1e9))
        assert kap.exact == pytest.approx(4.5, rel=1e-4)

    def test_exact_vs_asymptotic(self, resonant):
        kap = kappa_eff(resonant.with_(n_th=500.0))
        assert abs(kap.exact - kap.asymptotic) / kap.exact < 1e-3

    def test_matches_numeric_gap(self, resonant):
        from qbattery.liouville import gaps
        p = resonant.with_(n_th=1000.0, gamma10=1.3e-6)
        delta_slow = gaps(build_liouvillian(p)).delta_slow
        assert abs(kappa_eff(p).exact - delta_slow) / delta_slow < 0.01

    def test_gap_floor_beyond_ep(self, resonant):
        # the gap never drops below ~gamma21/2 once deep in the overdamped
        # regime, approaching it from above here (positive 1/n_th correction)
        for nth in (100.0, 300.0, 1000.0, 5000.0):
            gap = delta_slow_analytic(resonant.with_(n_th=nth))
            assert gap >= 4.5 * 0.95
            assert gap > 4.5


class TestAdiabaticCoherences:
    def test_no_drive_kills_coherence(self, resonant):
        _, a_coh = adiabatic_coherences(resonant.with_(omega_rabi=0.0), 1.0)
        assert a_coh == 0.0

    def test_large_nth_ratios(self, resonant):
        p = resonant.with_(n_th=1000.0)
        d22, a_coh = adiabatic_coherences(p, 1.0)
        assert d22.real == pytest.approx(-0.5, abs=1e-3)
        expected_a = 6j * p.omega_rabi / (p.n_th * p.gamma20)
        assert a_coh == pytest.approx(expected_a, rel=5e-3)

    def test_substitution_reproduces_kappa_eff(self, resonant):
        # the eliminated storage equation is exactly -kappa_eff * delta_rho11
        rng = np.random.default_rng(5)
        for _ in range(10):
            p = resonant.with_(
                gamma20=rng.uniform(50, 300),
                gamma21=rng.uniform(1, 30),
                n_th=rng.uniform(0.5, 50),
                omega_rabi=rng.uniform(1, 300),
            )
            d22, a_coh = adiabatic_coherences(p, 1.0)
            rate = p.gamma21 * d22 + 1j * p.omega_rabi * a_coh
            assert rate.real == pytest.approx(-kappa_eff(p).exact, rel=1e-10)
            assert abs(rate.imag) < 1e-10 * abs(rate.real)


class TestSlowSpectrum:
    def test_contains_zero_and_sigma_modes(self, resonant):
        ev = slow_spectrum(resonant)
        assert np.abs(ev).min() < 1e-12
        assert np.abs(ev + sigma_rate(resonant)).min() < 1e-9

    def test_delta_slow_matches_numeric(self, resonant):
        from qbattery.liouville import gaps
        numeric = gaps(build_liouvillian(resonant)).delta_slow
        assert delta_slow_analytic(resonant) == pytest.approx(numeric, rel=1e-9)
