"""Spin-1 operators, annealing schedules and the single-spin bifurcation solver.

All matrices use the basis order (|+1>, |0>, |-1>).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np


def _check_s(s: float) -> float:
    s = float(s)
    if not (0.0 <= s <= 1.0) or math.isnan(s):
        raise ValueError(f"annealing parameter s must lie in [0, 1], got {s!r}")
    return s


@dataclass(frozen=True)
class Schedule:
    """Gaussian driver amplitude A(s) and linear detuning B(s)."""

    A0: float = 3.0
    sigma2: float = 0.1
    B0: float = 40.0

    def __post_init__(self):
        for name in ("A0", "sigma2", "B0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    def A(self, s):
        """Driver amplitude, vectorised over ``s``."""
        s = np.asarray(s, dtype=float)
        return self.A0 * np.exp(-((2.0 * s - 1.0) ** 2) / (2.0 * self.sigma2))

    def B(self, s):
        """Detuning coefficient, vectorised over ``s``."""
        s = np.asarray(s, dtype=float)
        return self.B0 * (2.0 * s - 1.0)

    def coefficients(self, s_grid) -> tuple[np.ndarray, np.ndarray]:
        s_grid = np.asarray(s_grid, dtype=float)
        if s_grid.size and (np.any(s_grid < 0.0) or np.any(s_grid > 1.0) or np.any(np.isnan(s_grid))):
            raise ValueError("annealing parameter s must lie in [0, 1]")
        return self.A(s_grid), self.B(s_grid)


def schedule_eval(sched: Schedule, s: float) -> tuple[float, float]:
    """Return ``(A(s), B(s))`` for a single annealing parameter."""
    s = _check_s(s)
    return float(sched.A(s)), float(sched.B(s))


@dataclass(frozen=True)
class ModelParams:
    """Problem definition: p-spin exponent, catalyst amplitude, driver rotation.

    ``h`` is only used by the single-spin solver and ``N`` only by the
    finite-size diagonalisation.
    """

    p: int = 5
    C: float = 0.0
    chi: float = 0.0
    h: float = 0.0
    N: int | None = None

    def __post_init__(self):
        if isinstance(self.p, bool) or int(self.p) != self.p or self.p < 2:
            raise ValueError(f"p must be an integer >= 2, got {self.p!r}")
        object.__setattr__(self, "p", int(self.p))
        for name in ("C", "chi", "h"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not (0.0 <= self.chi < 2.0 * math.pi):
            raise ValueError(f"chi must lie in [0, 2*pi), got {self.chi!r}")
        if self.N is not None and (int(self.N) != self.N or self.N < 1):
            raise ValueError(f"N must be a positive integer, got {self.N!r}")


@dataclass(frozen=True)
class Spin1Ops:
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def flip(self) -> np.ndarray:
        """(sx)^2 - (sy)^2, the operator exchanging |+1> and |-1>."""
        return (self.sx @ self.sx - self.sy @ self.sy).real


@functools.lru_cache(maxsize=1)
def spin1_operators() -> Spin1Ops:
    r = 1.0 / math.sqrt(2.0)
    sx = r * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    sy = 1j * r * np.array([[0, -1, 0], [1, 0, -1], [0, 1, 0]], dtype=complex)
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    for op in (sx, sy, sz):
        op.setflags(write=False)
    return Spin1Ops(sx, sy, sz)


_PARITY = np.array([[1.0, 0.0, 1.0], [0.0, math.sqrt(2.0), 0.0], [1.0, 0.0, -1.0]]) / math.sqrt(2.0)


def single_spin_hamiltonian(sched: Schedule, h: float, s: float) -> np.ndarray:
    A, B = schedule_eval(sched, s)
    ops = spin1_operators()
    sz = ops.sz.real
    return -A * ops.sx.real - B * (sz @ sz) - h * sz


def single_spin_ground_state(sched: Schedule, h: float, s: float) -> tuple[np.ndarray, float]:
    """Instantaneous ground state of -A sx - B sz^2 - h sz.

    Returns the populations of (|+1>, |0>, |-1>) and the ground energy.
    """
    H = single_spin_hamiltonian(sched, h, s)
    # Rotate to (|+1>+|-1>, |0>, |+1>-|-1>): at h = 0 the odd state decouples
    # exactly, so the tiny late-anneal gap cannot leak it into the ground state.
    w, v = np.linalg.eigh(_PARITY @ H @ _PARITY)
    vec = _PARITY @ v[:, 0]
    probs = vec * vec
    return probs / probs.sum(), float(w[0])
