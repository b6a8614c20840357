"""Semiclassical potential per spin in the spin-1 coherent state.

The potential is linear in the coefficients (A, B, C):

    V = A * driver + B * detuning + C * catalyst + problem

with

    driver   = -(1/sqrt2) sin(theta) [cos(phi/2) cos(alpha + chi/2) + sin(phi/2) cos(beta - chi/2)]
    detuning = -sin^2(theta/2)
    catalyst = (sin^2(theta/2) sin(phi) cos(alpha - beta))^2
    problem  = -(sin^2(theta/2) cos(phi))^p

``chi`` rotates the driver about the z axis; ``chi = 0`` is the unrotated model.
Everything here is vectorised with numpy broadcasting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, Schedule, schedule_eval

INV_SQRT2 = 1.0 / math.sqrt(2.0)

LOWER = np.array([0.0, 0.0, -math.pi, -math.pi])
UPPER = np.array([math.pi, math.pi / 2.0, math.pi, math.pi])
_ANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class Angles:
    """Coherent-state angles on the restricted domain.

    theta in [0, pi], phi in [0, pi/2], alpha and beta in [-pi, pi].
    """

    theta: float
    phi: float
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name, lo, hi in zip(("theta", "phi", "alpha", "beta"), LOWER, UPPER):
            value = float(getattr(self, name))
            if not (lo - _ANGLE_SLACK <= value <= hi + _ANGLE_SLACK):
                raise ValueError(f"{name}={value!r} outside [{lo}, {hi}]")
            object.__setattr__(self, name, min(max(value, lo), hi))

    @property
    def m(self) -> float:
        return order_parameter(self.theta, self.phi)

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.phi, self.alpha, self.beta])

    @classmethod
    def from_array(cls, x) -> Angles:
        return cls(*(float(v) for v in x))


def order_parameter(theta, phi):
    """Magnetisation sin^2(theta/2) cos(phi) of the coherent state."""
    return np.sin(np.asarray(theta) / 2.0) ** 2 * np.cos(phi)


def potential_terms(theta, phi, alpha, beta, chi: float, p: int):
    """Return the (driver, detuning, catalyst, problem) terms of the potential."""
    st = np.sin(theta)
    x = np.sin(theta / 2.0) ** 2
    driver = -INV_SQRT2 * st * (np.cos(phi / 2.0) * np.cos(alpha + chi / 2.0)
                                + np.sin(phi / 2.0) * np.cos(beta - chi / 2.0))
    q = x * np.sin(phi) * np.cos(alpha - beta)
    return driver, -x, q * q, -((x * np.cos(phi)) ** p)


def potential_value(A, B, C, p, chi, theta, phi, alpha=0.0, beta=0.0):
    driver, detuning, catalyst, problem = potential_terms(theta, phi, alpha, beta, chi, p)
    return A * driver + B * detuning + C * catalyst + problem


def potential(sched: Schedule, params: ModelParams, s: float, a: Angles) -> float:
    """Semiclassical potential per spin at annealing parameter ``s``."""
    A, B = schedule_eval(sched, s)
    return float(potential_value(A, B, params.C, params.p, params.chi,
                                 a.theta, a.phi, a.alpha, a.beta))


def potential_derivatives(A, B, C, p, chi, x):
    """Value, gradient and Hessian of the potential at angle rows ``x``.

    ``x`` has shape (n, 4) holding (theta, phi, alpha, beta); ``A`` and ``B``
    broadcast against the n rows. Returns arrays of shape (n,), (n, 4), (n, 4, 4).
    """
    x = np.asarray(x, dtype=float)
    th, ph, al, be = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
    A = np.broadcast_to(np.asarray(A, dtype=float), th.shape)
    B = np.broadcast_to(np.asarray(B, dtype=float), th.shape)
    n = th.shape[0]

    st, ct = np.sin(th), np.cos(th)
    xs = np.sin(th / 2.0) ** 2
    xs_t, xs_tt = st / 2.0, ct / 2.0
    cph, sph = np.cos(ph / 2.0), np.sin(ph / 2.0)
    sphi, cphi = np.sin(ph), np.cos(ph)
    u, du = np.cos(al + chi / 2.0), -np.sin(al + chi / 2.0)
    w, dw = np.cos(be - chi / 2.0), -np.sin(be - chi / 2.0)
    k, dk = np.cos(al - be), -np.sin(al - be)

    g = np.zeros((n, 4))
    H = np.zeros((n, 4, 4))

    # driver: -A/sqrt2 * sin(theta) * E(phi, alpha, beta)
    E = cph * u + sph * w
    E_p = -sph * u / 2.0 + cph * w / 2.0
    E_a, E_b = cph * du, sph * dw
    E_pp = -E / 4.0
    E_pa, E_pb = -sph * du / 2.0, cph * dw / 2.0
    E_aa, E_bb = -cph * u, -sph * w
    f = -A * INV_SQRT2
    V = f * st * E
    g[:, 0] += f * ct * E
    g[:, 1] += f * st * E_p
    g[:, 2] += f * st * E_a
    g[:, 3] += f * st * E_b
    H[:, 0, 0] += -f * st * E
    H[:, 0, 1] += f * ct * E_p
    H[:, 0, 2] += f * ct * E_a
    H[:, 0, 3] += f * ct * E_b
    H[:, 1, 1] += f * st * E_pp
    H[:, 1, 2] += f * st * E_pa
    H[:, 1, 3] += f * st * E_pb
    H[:, 2, 2] += f * st * E_aa
    H[:, 3, 3] += f * st * E_bb

    # detuning: -B * x
    V = V - B * xs
    g[:, 0] += -B * xs_t
    H[:, 0, 0] += -B * xs_tt

    # catalyst: C * Q^2 with Q = x sin(phi) cos(alpha - beta)
    if C != 0.0:
        Q = xs * sphi * k
        dQ = np.stack([xs_t * sphi * k, xs * cphi * k, xs * sphi * dk, -xs * sphi * dk], axis=1)
        ddQ = np.zeros((n, 4, 4))
        ddQ[:, 0, 0] = xs_tt * sphi * k
        ddQ[:, 0, 1] = xs_t * cphi * k
        ddQ[:, 0, 2] = xs_t * sphi * dk
        ddQ[:, 0, 3] = -xs_t * sphi * dk
        ddQ[:, 1, 1] = -xs * sphi * k
        ddQ[:, 1, 2] = xs * cphi * dk
        ddQ[:, 1, 3] = -xs * cphi * dk
        ddQ[:, 2, 2] = -xs * sphi * k
        ddQ[:, 2, 3] = xs * sphi * k
        ddQ[:, 3, 3] = -xs * sphi * k
        V = V + C * Q * Q
        g += 2.0 * C * Q[:, None] * dQ
        H += 2.0 * C * (np.triu(dQ[:, :, None] * dQ[:, None, :]) + Q[:, None, None] * ddQ)

    # problem: -M^p with M = x cos(phi)
    M = xs * cphi
    dM = np.stack([xs_t * cphi, -xs * sphi], axis=1)
    ddM = np.empty((n, 2, 2))
    ddM[:, 0, 0] = xs_tt * cphi
    ddM[:, 0, 1] = -xs_t * sphi
    ddM[:, 1, 0] = 0.0
    ddM[:, 1, 1] = -xs * cphi
    Mp1 = M ** (p - 1)
    V = V - M * Mp1
    g[:, :2] += -p * Mp1[:, None] * dM
    H[:, :2, :2] += -p * ((p - 1) * (M ** (p - 2))[:, None, None]
                          * np.triu(dM[:, :, None] * dM[:, None, :])
                          + Mp1[:, None, None] * ddM)

    # only the upper triangle was accumulated
    H = H + np.triu(H, 1).transpose(0, 2, 1)
    return V, g, H
