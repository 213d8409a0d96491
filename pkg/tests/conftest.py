import numpy as np
import pytest

from qbattery.model import TWO_PI, SystemParams


@pytest.fixture
def paper_params() -> SystemParams:
    """Reference operating point: paper rates, N_th=4.8, Omega/2pi=20 MHz."""
    return SystemParams()


def draw_params(rng: np.random.Generator, gamma10_positive=False) -> SystemParams:
    """One random valid parameter set, broad enough to stress the invariants."""
    g10_lo = 1e-6 if gamma10_positive else 0.0
    return SystemParams(
        gamma20=rng.uniform(20.0, 300.0),
        gamma21=rng.uniform(0.5, 50.0),
        gamma10=rng.uniform(g10_lo, 0.5),
        n_th=rng.uniform(0.0, 25.0),
        omega_rabi=rng.uniform(0.0, TWO_PI * 40.0),
        delta=rng.uniform(-TWO_PI * 10.0, TWO_PI * 10.0),
    )


def random_density_matrix(rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def assert_multisets_close(a, b, tol):
    """Greedy nearest-neighbour matching of two eigenvalue multisets."""
    a = list(np.asarray(a, dtype=complex))
    b = list(np.asarray(b, dtype=complex))
    assert len(a) == len(b)
    for lam in a:
        dist = [abs(lam - mu) for mu in b]
        k = int(np.argmin(dist))
        assert dist[k] < tol, f"unmatched eigenvalue {lam} (closest {b[k]}, gap {dist[k]:.2e})"
        b.pop(k)
