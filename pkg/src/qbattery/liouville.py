"""Vectorized Liouvillian: construction, block structure, spectra and steady state.

Density matrices are flattened row-major, |i><j| -> slot 3*i + j, which makes
the superoperator of the master equation the literal Kronecker form

    L = -i (H (x) 1 - 1 (x) H^T)
        + sum_mu rate_mu [ A (x) A* - 1/2 (A^dag A (x) 1 + 1 (x) (A^dag A)^T) ].

A fixed permutation reorders the nine components into
(rho22, rho12, rho21, rho11, rho00, rho20, rho10, rho02, rho01), in which the
generator is exactly block diagonal 5 + 2 + 2: populations plus the driven
coherence pair, and the two ground-state coherence doublets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import SystemParams, hamiltonian, jump_channels, validate_params

VECTORIZATION = "row-major"

#: component order used by the block decomposition
PAPER_ORDER = ("rho22", "rho12", "rho21", "rho11", "rho00", "rho20", "rho10", "rho02", "rho01")

#: canonical (row-major) slot of each component in PAPER_ORDER
PERM_TO_PAPER = (8, 5, 7, 4, 0, 6, 3, 2, 1)

#: slot indices carrying the trace in the canonical vectorization
_DIAG_SLOTS = (0, 4, 8)

ZERO_MODE_TOL = 1e-9
DEFECTIVE_COND = 1e8


class DegenerateSteadyStateError(RuntimeError):
    """The generator has more than one near-zero eigenvalue."""


class BlockStructureError(RuntimeError):
    """Cross-block entries are not exactly zero (builder bug)."""


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Flatten a 3x3 operator to a length-9 vector (row-major)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got {rho.shape}")
    return rho.reshape(9)


def devectorize(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (9,):
        raise ValueError(f"expected a length-9 vector, got {v.shape}")
    return v.reshape(3, 3)


@dataclass(frozen=True)
class SuperOpMatrix:
    """9x9 generator with its vectorization convention and block permutation."""

    matrix: np.ndarray
    convention: str = VECTORIZATION
    perm_to_paper: tuple = PERM_TO_PAPER

    @property
    def permuted(self) -> np.ndarray:
        idx = np.asarray(self.perm_to_paper)
        return self.matrix[np.ix_(idx, idx)]


def build_liouvillian(p: SystemParams) -> SuperOpMatrix:
    """Assemble the 9x9 generator from the Hamiltonian and jump channels.

    Acting on vectorize(rho) this reproduces
    :func:`qbattery.model.lindblad_rhs` to machine precision.
    """
    validate_params(p)
    eye = np.eye(3, dtype=complex)
    h = hamiltonian(p)
    sop = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, a in jump_channels(p):
        if rate == 0.0:
            continue
        ada = a.conj().T @ a
        sop += rate * (
            np.kron(a, a.conj())
            - 0.5 * (np.kron(ada, eye) + np.kron(eye, ada.T))
        )
    return SuperOpMatrix(matrix=sop)


@dataclass(frozen=True)
class Blocks:
    """The exact 5+2+2 decomposition in the permuted component order."""

    l5: np.ndarray   # (rho22, rho12, rho21, rho11, rho00)
    l2l: np.ndarray  # (rho20, rho10)
    l2r: np.ndarray  # (rho02, rho01)


def extract_blocks(sop: SuperOpMatrix) -> Blocks:
    """Read out the three diagonal blocks, requiring exact decoupling."""
    m = sop.permuted
    cross = m.copy()
    cross[:5, :5] = 0.0
    cross[5:7, 5:7] = 0.0
    cross[7:9, 7:9] = 0.0
    if np.any(cross != 0.0):
        raise BlockStructureError("nonzero cross-block entry in permuted generator")
    return Blocks(l5=m[:5, :5].copy(), l2l=m[5:7, 5:7].copy(), l2r=m[7:9, 7:9].copy())


@dataclass
class Spectrum:
    """Eigenvalues with biorthogonally normalized right/left eigenvectors.

    ``right_vectors[:, k]`` and ``left_vectors[k, :]`` belong to
    ``eigenvalues[k]``; rows of ``left_vectors`` are the inverse of the
    right-vector matrix, so <L_a|R_b> = delta_ab whenever the matrix is
    diagonalizable.  ``defective`` flags eigenvector-matrix condition numbers
    beyond 1e8 (exceptional-point vicinity); the vectors are still returned
    but the spectral expansion refuses to use them.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    defective: bool = False
    condition: float = field(default=np.nan)


def eigendecompose(m: np.ndarray) -> Spectrum:
    """Non-Hermitian eigendecomposition, sorted by descending real part."""
    m = np.asarray(m, dtype=complex)
    evals, rvecs = np.linalg.eig(m)
    order = np.lexsort((evals.imag, -evals.real))
    evals = evals[order]
    rvecs = rvecs[:, order]
    cond = np.linalg.cond(rvecs)
    defective = not np.isfinite(cond) or cond > DEFECTIVE_COND
    if defective:
        lvecs = np.linalg.pinv(rvecs)
    else:
        lvecs = np.linalg.inv(rvecs)
    return Spectrum(
        eigenvalues=evals,
        right_vectors=rvecs,
        left_vectors=lvecs,
        defective=defective,
        condition=float(cond),
    )


def _zero_mode_index(evals: np.ndarray, tol: float = ZERO_MODE_TOL) -> int:
    idx = int(np.argmin(np.abs(evals)))
    near_zero = int((np.abs(evals) < tol).sum())
    if near_zero > 1:
        raise DegenerateSteadyStateError(
            f"{near_zero} eigenvalues within {tol} of zero; steady state is not unique"
        )
    return idx


@dataclass(frozen=True)
class GapReport:
    """Relaxation-rate gaps of the full generator and of its blocks, 1/us."""

    delta: float
    delta_slow: float
    delta_l2: float

    @property
    def tau_delta(self) -> float:
        return 1.0 / self.delta


def gaps(sop: SuperOpMatrix) -> GapReport:
    """Gap of the full generator, of the slow block and of the coherence branch."""
    evals = np.linalg.eigvals(sop.matrix)
    izero = _zero_mode_index(evals)
    if np.abs(evals[izero]) > ZERO_MODE_TOL:
        raise DegenerateSteadyStateError("no eigenvalue within 1e-9 of zero")
    nonzero = np.delete(evals, izero)
    delta = float(-nonzero.real.max())

    blocks = extract_blocks(sop)
    ev5 = np.linalg.eigvals(blocks.l5)
    ev5 = np.delete(ev5, int(np.argmin(np.abs(ev5))))
    delta_slow = float(-ev5.real.max())
    ev2 = np.concatenate([np.linalg.eigvals(blocks.l2l), np.linalg.eigvals(blocks.l2r)])
    delta_l2 = float(-ev2.real.max())
    return GapReport(delta=delta, delta_slow=delta_slow, delta_l2=delta_l2)


def steady_state(sop: SuperOpMatrix) -> np.ndarray:
    """Unique stationary state, from a trace-constrained linear solve.

    One row of the generator is replaced by the trace functional and the
    resulting system solved directly; deterministic and exact for a rank-8
    generator.
    """
    a = sop.matrix.copy()
    a[0, :] = 0.0
    a[0, list(_DIAG_SLOTS)] = 1.0
    b = np.zeros(9, dtype=complex)
    b[0] = 1.0
    try:
        v = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSteadyStateError("trace-constrained system is singular") from exc
    residual = np.linalg.norm(sop.matrix @ v)
    if residual > 1e-10:
        raise DegenerateSteadyStateError(
            f"steady-state residual {residual:.2e} exceeds 1e-10 (degenerate null space?)"
        )
    rho = devectorize(v)
    return 0.5 * (rho + rho.conj().T)


def expansion_coefficients(rho0: np.ndarray, spectrum: Spectrum) -> np.ndarray:
    """Mode amplitudes c_a = <L_a|rho0> of the initial state."""
    if spectrum.defective:
        raise ValueError(
            "spectrum flagged defective (eigenvector condition number "
            f"{spectrum.condition:.2e}); spectral expansion is unreliable here"
        )
    return spectrum.left_vectors @ vectorize(rho0)


def spectral_evolve(coeffs: np.ndarray, spectrum: Spectrum, t: float) -> np.ndarray:
    """State at time t from the mode expansion sum_a c_a exp(lam_a t) R_a."""
    v = spectrum.right_vectors @ (coeffs * np.exp(spectrum.eigenvalues * t))
    return devectorize(v)
