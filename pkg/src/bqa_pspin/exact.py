"""Finite-N diagonalisation in the permutation-symmetric subspace.

Basis states are occupation triples (n1, n0, nm1) of the single-spin levels
|+1>, |0>, |-1>. The Hamiltonian is assembled from sparse triplets; the
ground state is found with a dense eigensolver for small matrices and with
Lanczos above ``DENSE_LIMIT``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh
from scipy.special import gammaln

from .minimize import DEFAULT_SETTINGS, SearchSettings, minimize_potential
from .model import ModelParams, Schedule, schedule_eval
from .potential import Angles

DENSE_LIMIT = 2500


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.reason = message
        self.residual = residual


@dataclass(frozen=True)
class SymmetricBasis:
    N: int
    states: np.ndarray  # (dim, 3) int: n1, n0, nm1
    index: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self):
        return len(self.states)


def enumerate_basis(N: int) -> SymmetricBasis:
    """All occupation triples for N spins, n1 descending then n0 descending.

    For N = 1 this reproduces the single-spin order (|+1>, |0>, |-1>).
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    states = [(n1, n0, N - n1 - n0) for n1 in range(N, -1, -1) for n0 in range(N - n1, -1, -1)]
    arr = np.array(states, dtype=np.int64)
    arr.setflags(write=False)
    return SymmetricBasis(N, arr, {s: i for i, s in enumerate(states)})


def _lookup(basis: SymmetricBasis, n1, n0, nm1):
    # closed-form position of (n1, n0, nm1) in the enumeration order
    N = basis.N
    before = (N - n1) * (N - n1 + 1) // 2  # rows with larger n1
    return before + (N - n1 - n0)


def hamiltonian_from_coefficients(basis: SymmetricBasis, A: float, B: float, params: ModelParams) -> sp.csr_matrix:
    """Sparse Hamiltonian for constant coefficients (A, B)."""
    if params.chi != 0.0:
        raise ValueError("symmetric-subspace Hamiltonian is only defined for chi = 0")
    N, C, p = basis.N, params.C, params.p
    n1, n0, nm1 = (basis.states[:, k].astype(float) for k in range(3))
    i1, i0, im1 = (basis.states[:, k] for k in range(3))
    idx = np.arange(basis.dim)

    rows, cols, vals = [idx], [idx], [-B * (N - n0) + (C / N) * (2 * n1 * nm1 + n1 + nm1) - N * ((n1 - nm1) / N) ** p]

    def add(mask, target, value):
        rows.extend([idx[mask], target])
        cols.extend([target, idx[mask]])
        vals.extend([value, value])

    # |0> -> |-1>: (n1, n0, nm1) -> (n1, n0 - 1, nm1 + 1)
    m = i0 >= 1
    add(m, _lookup(basis, i1[m], i0[m] - 1, im1[m] + 1), -A * np.sqrt(n0[m] * (nm1[m] + 1) / 2.0))
    # |0> -> |+1>: (n1, n0, nm1) -> (n1 + 1, n0 - 1, nm1)
    add(m, _lookup(basis, i1[m] + 1, i0[m] - 1, im1[m]), -A * np.sqrt(n0[m] * (n1[m] + 1) / 2.0))
    # two |-1> -> two |+1>
    if C != 0.0:
        m = im1 >= 2
        add(m, _lookup(basis, i1[m] + 2, i0[m], im1[m] - 2),
            (C / N) * np.sqrt((n1[m] + 2) * (n1[m] + 1) * nm1[m] * (nm1[m] - 1)))

    H = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(basis.dim, basis.dim))
    return H.tocsr()


def build_hamiltonian(basis: SymmetricBasis, sched: Schedule, params: ModelParams, s: float) -> sp.csr_matrix:
    A, B = schedule_eval(sched, s)
    return hamiltonian_from_coefficients(basis, A, B, params)


@dataclass(frozen=True)
class SymmetricState:
    basis: SymmetricBasis
    coeffs: np.ndarray


def _fix_sign(v):
    k = np.argmax(np.abs(v))
    return v if v[k] >= 0 else -v


def ground_state(H, basis: SymmetricBasis | None = None) -> tuple[SymmetricState | np.ndarray, float]:
    """Lowest eigenpair of a real symmetric matrix.

    Returns a ``SymmetricState`` when ``basis`` is given, else the bare
    coefficient vector. The largest-magnitude coefficient is made positive.
    """
    dense = not sp.issparse(H)
    dim = H.shape[0]
    if dense:
        H = np.asarray(H, dtype=float)
        if not np.allclose(H, H.T, atol=1e-12, rtol=0):
            raise ValueError("matrix is not symmetric")
    if dim <= DENSE_LIMIT:
        Hd = H if dense else H.toarray()
        w, v = eigh(Hd, subset_by_index=[0, 0])
        lam, vec = float(w[0]), v[:, 0]
    else:
        w, v = eigsh(sp.csr_matrix(H), k=1, which="SA", tol=1e-12, maxiter=20 * dim)
        lam, vec = float(w[0]), v[:, 0]
    vec = _fix_sign(vec / np.linalg.norm(vec))
    norm_h = np.linalg.norm(H) if dense else sp.linalg.norm(H)
    residual = float(np.linalg.norm(H @ vec - lam * vec))
    if residual > 1e-8 * max(norm_h, 1e-300):
        raise ConvergenceError("ground-state eigensolver did not converge", residual)
    if basis is not None:
        return SymmetricState(basis, vec), lam
    return vec, lam


def coherent_amplitudes(basis: SymmetricBasis, theta: float, phi: float) -> np.ndarray:
    """Components of the product coherent state (alpha = beta = 0) on the basis."""
    a_plus = math.sin(theta / 2.0) * math.cos(phi / 2.0)
    a_zero = math.cos(theta / 2.0)
    a_minus = math.sin(theta / 2.0) * math.sin(phi / 2.0)
    N = basis.N
    n = basis.states
    log_multi = 0.5 * (gammaln(N + 1) - gammaln(n[:, 0] + 1) - gammaln(n[:, 1] + 1) - gammaln(n[:, 2] + 1))
    log_amp = log_multi.copy()
    zero = np.zeros(len(n), dtype=bool)
    for col, a in enumerate((a_plus, a_zero, a_minus)):
        if a == 0.0:
            zero |= n[:, col] > 0
        else:
            log_amp += n[:, col] * math.log(abs(a))
    amp = np.where(zero, 0.0, np.exp(log_amp))
    return amp  # every factor is non-negative on the restricted domain


def coherent_overlap(state: SymmetricState, a: Angles) -> float:
    """<psi_coherent | state> for a coherent state with alpha = beta = 0."""
    if a.alpha != 0.0 or a.beta != 0.0:
        raise ValueError("coherent overlap is defined for alpha = beta = 0")
    return float(coherent_amplitudes(state.basis, a.theta, a.phi) @ state.coeffs)


@dataclass(frozen=True)
class TraceDistancePoint:
    s: float
    N: int
    D: float
    overlap: float
    energy_exact: float
    v_min_times_N: float
    angles: Angles


def trace_distance_point(sched: Schedule, params: ModelParams, s: float, N: int,
                         settings: SearchSettings = DEFAULT_SETTINGS,
                         basis: SymmetricBasis | None = None) -> TraceDistancePoint:
    if params.chi != 0.0:
        raise ValueError("trace-norm distance is defined for chi = 0")
    basis = enumerate_basis(N) if basis is None else basis
    angles, v_min = minimize_potential(sched, params, s, settings=settings)
    state, energy = ground_state(build_hamiltonian(basis, sched, params, s), basis)
    overlap = coherent_overlap(state, angles)
    D = math.sqrt(max(0.0, 1.0 - min(1.0, overlap * overlap)))
    return TraceDistancePoint(float(s), int(N), D, overlap, energy, v_min * N, angles)


def trace_norm_distance(sched: Schedule, params: ModelParams, s: float, N: int) -> float:
    """sqrt(1 - |<coherent ground state | exact ground state>|^2) at size N."""
    return trace_distance_point(sched, params, s, N).D
