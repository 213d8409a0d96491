import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from qbattery.liouville import (
    DegenerateSteadyStateError,
    build_liouvillian,
    devectorize,
    eigendecompose,
    expansion_coefficients,
    extract_blocks,
    gaps,
    spectral_evolve,
    steady_state,
    vectorize,
)
from qbattery.model import SystemParams, ground_state, hs_norm, l1_coherence, lindblad_rhs
from qbattery.slow_sector import build_l5_analytic, kappa_eff
from conftest import assert_multisets_close, draw_params, random_density_matrix


class TestVectorization:
    def test_ground_state_slot(self):
        v = vectorize(ground_state())
        assert v[0] == 1.0 and np.abs(v[1:]).max() == 0.0

    def test_round_trip_exact(self):
        rho = random_density_matrix(np.random.default_rng(3))
        assert np.array_equal(devectorize(vectorize(rho)), rho)

    def test_maximally_mixed_norm(self):
        v = vectorize(np.eye(3, dtype=complex) / 3)
        assert np.linalg.norm(v) == pytest.approx(1 / np.sqrt(3))

    def test_inner_product_matches_trace_form(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        lhs = np.vdot(vectorize(a), vectorize(b))
        assert lhs == pytest.approx(np.trace(a.conj().T @ b))

    def test_dimension_checks(self):
        with pytest.raises(ValueError):
            vectorize(np.eye(2))
        with pytest.raises(ValueError):
            devectorize(np.zeros(8))


class TestBuildLiouvillian:
    def test_all_rates_zero_gives_zero_matrix(self):
        # validation forbids zero gammas, so drive the generator entries directly
        p = SystemParams(gamma20=1e-300, gamma21=1e-300, gamma10=0.0,
                         n_th=0.0, omega_rabi=0.0, delta=0.0)
        sop = build_liouvillian(p)
        assert np.abs(sop.matrix).max() < 1e-290

    def test_action_matches_rhs_at_thermal_point(self):
        p = SystemParams(n_th=2.0, omega_rabi=0.0)
        sop = build_liouvillian(p)
        drho = devectorize(sop.matrix @ vectorize(ground_state()))
        assert np.abs(drho - lindblad_rhs(ground_state(), p)).max() < 1e-12

    def test_trace_functional_is_left_null(self, paper_params):
        sop = build_liouvillian(paper_params)
        left = vectorize(np.eye(3, dtype=complex)).conj() @ sop.matrix
        assert np.abs(left).max() < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_action_matches_rhs_random(self, seed):
        rng = np.random.default_rng(seed)
        p = draw_params(rng)
        rho = random_density_matrix(rng)
        sop = build_liouvillian(p)
        got = devectorize(sop.matrix @ vectorize(rho))
        scale = max(1.0, p.gamma20 * (p.n_th + 1))
        assert np.abs(got - lindblad_rhs(rho, p)).max() < 1e-12 * scale

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_hermiticity_covariance(self, seed):
        rng = np.random.default_rng(seed)
        p = draw_params(rng)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        a = a + a.conj().T
        out = devectorize(build_liouvillian(p).matrix @ vectorize(a))
        scale = max(1.0, p.gamma20 * (p.n_th + 1))
        assert np.abs(out - out.conj().T).max() < 1e-12 * scale


class TestBlocks:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_block_extraction_never_fails(self, seed):
        # cross-block entries must be identically zero for every parameter draw
        p = draw_params(np.random.default_rng(seed))
        extract_blocks(build_liouvillian(p))

    def test_l2_blocks_are_conjugate(self, paper_params):
        blocks = extract_blocks(build_liouvillian(paper_params))
        assert np.array_equal(blocks.l2r, blocks.l2l.conj())

    def test_l5_matches_closed_form_exactly(self):
        # at zero detuning and no storage decay the slow block entries are
        # rational in the inputs; the two construction routes agree bit for bit
        p = SystemParams(gamma10=0.0, delta=0.0, n_th=3.7)
        blocks = extract_blocks(build_liouvillian(p))
        assert np.array_equal(blocks.l5, build_l5_analytic(p))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_block_union_equals_full_spectrum(self, seed):
        p = draw_params(np.random.default_rng(seed))
        sop = build_liouvillian(p)
        blocks = extract_blocks(sop)
        union = np.concatenate([
            np.linalg.eigvals(blocks.l5),
            np.linalg.eigvals(blocks.l2l),
            np.linalg.eigvals(blocks.l2r),
        ])
        full = np.linalg.eigvals(sop.matrix)
        scale = max(1.0, np.abs(full).max())
        assert_multisets_close(union, full, 1e-10 * scale)


class TestEigendecompose:
    def test_diagonal_matrix(self):
        d = np.diag([3.0, -1.0, -5.0]).astype(complex)
        spec = eigendecompose(d)
        assert np.allclose(spec.eigenvalues, [3.0, -1.0, -5.0])
        assert np.allclose(np.abs(spec.right_vectors), np.eye(3))

    def test_sorted_descending_real(self, paper_params):
        spec = eigendecompose(build_liouvillian(paper_params).matrix)
        assert np.all(np.diff(spec.eigenvalues.real) <= 1e-12)

    def test_unique_zero_mode_at_paper_defaults(self, paper_params):
        spec = eigendecompose(build_liouvillian(paper_params).matrix)
        assert int((np.abs(spec.eigenvalues) < 1e-9).sum()) == 1

    def test_biorthogonality(self, paper_params):
        spec = eigendecompose(build_liouvillian(paper_params).matrix)
        overlap = spec.left_vectors @ spec.right_vectors
        assert np.abs(overlap - np.eye(9)).max() < 1e-9

    def test_reconstruction(self, paper_params):
        m = build_liouvillian(paper_params).matrix
        spec = eigendecompose(m)
        recon = spec.right_vectors @ np.diag(spec.eigenvalues) @ spec.left_vectors
        assert np.abs(recon - m).max() < 1e-8 * max(1.0, np.abs(m).max())

    def test_defective_flag_on_jordan_block(self):
        spec = eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))
        assert spec.defective


class TestGaps:
    def test_min_of_sector_gaps(self, paper_params):
        report = gaps(build_liouvillian(paper_params))
        assert report.delta > 0
        assert report.delta == pytest.approx(min(report.delta_slow, report.delta_l2), rel=1e-9)

    def test_l2_scale_at_paper_defaults(self, paper_params):
        # ground-coherence branch decays on the optical scale gamma20(2 n_th + 1)/2
        report = gaps(build_liouvillian(paper_params))
        scale = paper_params.gamma20 * (2 * paper_params.n_th + 1) / 2
        assert report.delta_l2 > report.delta_slow
        assert 0.4 * scale < report.delta_l2 < 1.5 * scale

    def test_gap_at_large_nth_approaches_kappa_eff(self, paper_params):
        p = paper_params.with_(n_th=1000.0)
        report = gaps(build_liouvillian(p))
        assert report.delta_slow == pytest.approx(kappa_eff(p).exact, rel=0.01)

    def test_dark_configuration_has_finite_gaps(self):
        p = SystemParams(n_th=0.0, omega_rabi=0.0, gamma10=0.5)
        report = gaps(build_liouvillian(p))
        assert report.delta > 0

    def test_degenerate_configuration_raises(self):
        p = SystemParams(n_th=0.0, omega_rabi=0.0, gamma10=0.0)
        with pytest.raises(DegenerateSteadyStateError):
            gaps(build_liouvillian(p))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_nonzero_modes_decay(self, seed):
        p = draw_params(np.random.default_rng(seed), gamma10_positive=True)
        ev = np.linalg.eigvals(build_liouvillian(p).matrix)
        ev = np.delete(ev, int(np.argmin(np.abs(ev))))
        assert ev.real.max() < 0


class TestSteadyState:
    def test_dark_steady_state(self):
        p = SystemParams(n_th=0.0, omega_rabi=0.0, gamma10=0.5)
        rho = steady_state(build_liouvillian(p))
        assert np.abs(rho - ground_state()).max() < 1e-12

    def test_matches_long_time_integration(self, paper_params):
        sop = build_liouvillian(paper_params)
        rho_ss = steady_state(sop)
        t_end = 50.0 / gaps(sop).delta
        sol = solve_ivp(
            lambda t, y: lindblad_rhs(y.reshape(3, 3), paper_params).reshape(9),
            (0.0, t_end), vectorize(ground_state()),
            method="DOP853", rtol=1e-11, atol=1e-13,
        )
        rho_oracle = sol.y[:, -1].reshape(3, 3)
        assert hs_norm(rho_ss - rho_oracle) < 1e-8

    def test_l1_coherence_against_integration_oracle(self, paper_params):
        sop = build_liouvillian(paper_params)
        t_end = 50.0 / gaps(sop).delta
        sol = solve_ivp(
            lambda t, y: lindblad_rhs(y.reshape(3, 3), paper_params).reshape(9),
            (0.0, t_end), vectorize(ground_state()),
            method="DOP853", rtol=1e-11, atol=1e-13,
        )
        oracle = l1_coherence(sol.y[:, -1].reshape(3, 3))
        assert l1_coherence(steady_state(sop)) == pytest.approx(oracle, abs=1e-8)

    def test_stored_energy_monotone_in_nth(self, paper_params):
        energies = []
        for nth in (1.0, 2.0, 4.0, 8.0, 16.0):
            p = paper_params.with_(n_th=nth)
            rho = steady_state(build_liouvillian(p))
            energies.append(p.e1 * rho[1, 1].real + p.e2 * rho[2, 2].real)
        assert np.all(np.diff(energies) > 0)

    def test_degenerate_raises(self):
        p = SystemParams(n_th=0.0, omega_rabi=0.0, gamma10=0.0)
        with pytest.raises(DegenerateSteadyStateError):
            steady_state(build_liouvillian(p))


class TestSpectralExpansion:
    def test_steady_state_has_no_decaying_amplitudes(self, paper_params):
        sop = build_liouvillian(paper_params)
        spec = eigendecompose(sop.matrix)
        c = expansion_coefficients(steady_state(sop), spec)
        decaying = np.delete(c, int(np.argmin(np.abs(spec.eigenvalues))))
        assert np.abs(decaying).max() < 1e-10

    def test_completeness_at_t0(self, paper_params):
        spec = eigendecompose(build_liouvillian(paper_params).matrix)
        c = expansion_coefficients(ground_state(), spec)
        assert np.abs(spectral_evolve(c, spec, 0.0) - ground_state()).max() < 1e-10

    def test_matches_matrix_exponential(self, paper_params):
        sop = build_liouvillian(paper_params)
        spec = eigendecompose(sop.matrix)
        c = expansion_coefficients(ground_state(), spec)
        t = 0.05
        via_modes = spectral_evolve(c, spec, t)
        via_expm = devectorize(expm(sop.matrix * t) @ vectorize(ground_state()))
        assert hs_norm(via_modes - via_expm) < 1e-8

    def test_refuses_defective_spectrum(self):
        spec = eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))
        with pytest.raises(ValueError, match="defective"):
            expansion_coefficients(np.eye(3, dtype=complex) / 3, spec)
