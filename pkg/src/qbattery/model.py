"""Three-level dissipative battery model: parameters, states, and observables.

The battery has a ground state |0>, a metastable storage state |1> and a
short-lived excited state |2>.  An engineered thermal reservoir with mean
occupation ``n_th`` drives the |0><->|2> transition while a coherent field of
Rabi frequency ``omega_rabi`` transfers population from |2> to the storage
level.  Internal time unit is the microsecond: decay rates are plain rates in
1/us, while ``omega_rabi`` and ``delta`` are angular frequencies in rad/us
(user-facing inputs are Omega/2pi and delta/2pi in MHz).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * np.pi

#: trace tolerance and Hermiticity tolerance for valid states
STATE_TOL = 1e-12
#: eigenvalues of a propagated state may dip this far below zero (integration noise)
POSITIVITY_TOL = -1e-10


@dataclass(frozen=True)
class SystemParams:
    """Physical rates, drive parameters and level energies.

    gamma20, gamma21, gamma10 : spontaneous decay rates in 1/us
    n_th : mean thermal occupation of the reservoir (dimensionless)
    omega_rabi, delta : drive Rabi frequency and detuning, rad/us
    e1, e2 : energies of |1> and |2> in eV (|0> fixed at zero)
    """

    gamma20: float = 140.0
    gamma21: float = 9.0
    gamma10: float = 1.3e-6
    n_th: float = 4.8
    omega_rabi: float = TWO_PI * 20.0
    delta: float = 0.0
    e1: float = 1.70
    e2: float = 3.15

    @classmethod
    def from_mhz(cls, *, omega_over_2pi=20.0, delta_over_2pi=0.0, **kwargs) -> "SystemParams":
        """Build params from drive values given as Omega/2pi and delta/2pi in MHz."""
        return cls(omega_rabi=TWO_PI * omega_over_2pi, delta=TWO_PI * delta_over_2pi, **kwargs)

    def with_(self, **kwargs) -> "SystemParams":
        return replace(self, **kwargs)


def validate_params(p: SystemParams) -> SystemParams:
    """Check parameter invariants and return ``p`` unchanged.

    Raises ValueError naming the first violated constraint.
    """
    if not p.gamma20 > 0:
        raise ValueError("gamma20 must be > 0")
    if not p.gamma21 > 0:
        raise ValueError("gamma21 must be > 0")
    if not p.gamma10 >= 0:
        raise ValueError("gamma10 must be >= 0")
    if not p.n_th >= 0:
        raise ValueError("n_th must be >= 0")
    if not p.omega_rabi >= 0:
        raise ValueError("omega_rabi must be >= 0")
    if not p.e1 > 0:
        raise ValueError("e1 must be > 0")
    if not p.e2 > p.e1:
        raise ValueError("e2 must be > e1")
    return p


def basis_state(i: int) -> np.ndarray:
    """Projector |i><i| as a 3x3 density matrix."""
    rho = np.zeros((3, 3), dtype=complex)
    rho[i, i] = 1.0
    return rho


def ground_state() -> np.ndarray:
    """Discharged battery |0><0|."""
    return basis_state(0)


def validate_density_matrix(
    rho: np.ndarray,
    positivity_tol: float = POSITIVITY_TOL,
    trace_tol: float = STATE_TOL,
) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity of a 3x3 state.

    ``trace_tol`` defaults to the strict 1e-12 of freshly constructed states;
    long matrix-exponential trajectories accumulate roundoff and are checked
    against the looser 1e-10 trajectory budget instead.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise ValueError(f"density matrix must be 3x3, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > STATE_TOL:
        raise ValueError("density matrix is not Hermitian within 1e-12")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace differs from 1 beyond {trace_tol:g}")
    if np.linalg.eigvalsh(rho).min() < positivity_tol:
        raise ValueError("density matrix has an eigenvalue below the positivity tolerance")
    return rho


def hamiltonian(p: SystemParams) -> np.ndarray:
    """Interaction-picture Hamiltonian: Omega(|1><2| + h.c.) + delta |2><2|."""
    h = np.zeros((3, 3), dtype=complex)
    h[1, 2] = h[2, 1] = p.omega_rabi
    h[2, 2] = p.delta
    return h


def jump_channels(p: SystemParams) -> list[tuple[float, np.ndarray]]:
    """Dissipation channels as (rate, unit-amplitude jump operator) pairs.

    Rates are kept as linear prefactors rather than folded into sqrt
    amplitudes so that superoperator entries stay exact rational
    combinations of the inputs.
    """
    def op(i, j):
        m = np.zeros((3, 3), dtype=complex)
        m[i, j] = 1.0
        return m

    return [
        (p.gamma20 * (p.n_th + 1.0), op(0, 2)),  # thermally enhanced decay |2> -> |0>
        (p.gamma20 * p.n_th, op(2, 0)),          # thermal excitation |0> -> |2>
        (p.gamma21, op(1, 2)),                   # decay into the storage level
        (p.gamma10, op(0, 1)),                   # residual storage decay
    ]


def lindblad_rhs(rho: np.ndarray, p: SystemParams) -> np.ndarray:
    """Right-hand side d(rho)/dt of the master equation, by operator algebra.

    Computes -i[H, rho] plus the jump dissipators acting directly on the 3x3
    state.  Serves as the matrix-free reference for the vectorized
    superoperator built in :mod:`qbattery.liouville`.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise ValueError(f"density matrix must be 3x3, got {rho.shape}")
    h = hamiltonian(p)
    drho = -1j * (h @ rho - rho @ h)
    for rate, a in jump_channels(p):
        if rate == 0.0:
            continue
        ada = a.conj().T @ a
        drho += rate * (a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada))
    return drho


def energy(rho: np.ndarray, p: SystemParams) -> float:
    """Stored energy e1*rho11 + e2*rho22 in eV (ground level at zero)."""
    return float(p.e1 * rho[1, 1].real + p.e2 * rho[2, 2].real)


def l1_coherence(rho: np.ndarray) -> float:
    """Sum of absolute off-diagonal elements."""
    off = np.abs(rho) - np.diag(np.abs(np.diag(rho)))
    return float(off.sum())


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy -sum(lam ln lam) in nats, eigenvalues clamped to [0, 1]."""
    lam = np.clip(np.linalg.eigvalsh(rho).real, 0.0, 1.0)
    lam = lam[lam > 0.0]
    return float(-(lam * np.log(lam)).sum())


def hs_norm(a: np.ndarray) -> float:
    """Hilbert-Schmidt (Frobenius) norm sqrt(Tr(A A^dag))."""
    return float(np.linalg.norm(np.asarray(a), "fro"))


@dataclass(frozen=True)
class Observables:
    """Scalar diagnostics of a battery state."""

    energy: float
    l1_coherence: float
    entropy: float
    hs_norm: float


def observables(rho: np.ndarray, p: SystemParams) -> Observables:
    return Observables(
        energy=energy(rho, p),
        l1_coherence=l1_coherence(rho),
        entropy=von_neumann_entropy(rho),
        hs_norm=hs_norm(rho),
    )
