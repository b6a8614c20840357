"""Deterministic global minimisation of the semiclassical potential.

Two stages: a uniform grid over the restricted angle domain picks candidate
basins, then a batched projected Newton iteration polishes every candidate.
The grid stage works on the linear decomposition of the potential so a grid
evaluation costs a couple of fused multiply-adds per point. Grid values are
kept in float32: they only rank basins, every candidate is re-evaluated in
float64 during refinement.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, Schedule, schedule_eval
from .potential import LOWER, UPPER, Angles, order_parameter, potential_derivatives, potential_terms, potential_value

TIE_TOL = 1e-10
# smaller m only wins a near-tie when the minima are genuinely distinct
TIE_M_SEPARATION = 1e-6
ANGLE_TOL = 1e-8
VALUE_TOL = 1e-12


@dataclass(frozen=True)
class SearchSettings:
    """Grid resolution and refinement controls.

    The 2-D grid is used when chi == 0 (alpha = beta = 0 held fixed). The 4-D
    grid covers all four angles; its default is much coarser than the 2-D one
    because a full 4-D tensor grid at 2-D resolution does not fit in memory.
    """

    n_theta: int = 512
    n_phi: int = 256
    n_theta_4d: int = 64
    n_phi_4d: int = 32
    n_alpha_4d: int = 32
    n_beta_4d: int = 32
    n_candidates: int = 8
    max_iter: int = 100
    full_search: bool = False


DEFAULT_SETTINGS = SearchSettings()


def _wrap(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _project(x):
    x = x.copy()
    x[:, :2] = np.clip(x[:, :2], LOWER[:2], UPPER[:2])
    x[:, 2:] = _wrap(x[:, 2:])
    return x


def _is_4d(params: ModelParams, settings: SearchSettings) -> bool:
    return params.chi != 0.0 or settings.full_search


class _Grid2D:
    def __init__(self, p: int, n_theta: int, n_phi: int):
        self.theta = np.linspace(0.0, math.pi, n_theta)
        self.phi = np.linspace(0.0, math.pi / 2.0, n_phi)
        T, P = np.meshgrid(self.theta, self.phi, indexing="ij")
        terms = potential_terms(T, P, 0.0, 0.0, 0.0, p)
        self.driver, self.detuning, self.catalyst, self.problem = (t.astype(np.float32) for t in terms)


class _Grid4D:
    def __init__(self, p: int, chi: float, n_theta: int, n_phi: int, n_alpha: int, n_beta: int):
        self.theta = np.linspace(0.0, math.pi, n_theta)
        self.phi = np.linspace(0.0, math.pi / 2.0, n_phi)
        # periodic axes: drop the duplicated endpoint
        self.alpha = np.linspace(-math.pi, math.pi, n_alpha, endpoint=False)
        self.beta = np.linspace(-math.pi, math.pi, n_beta, endpoint=False)
        T, P, Al, Be = np.meshgrid(self.theta, self.phi, self.alpha, self.beta, indexing="ij", sparse=True)
        driver, detuning, catalyst, problem = potential_terms(T, P, Al, Be, chi, p)
        shape = (n_theta, n_phi, n_alpha, n_beta)
        self.driver = np.broadcast_to(driver, shape).astype(np.float32)
        self.catalyst = np.broadcast_to(catalyst, shape).astype(np.float32)
        self.detuning = detuning[..., 0, 0].astype(np.float32)
        self.problem = problem[..., 0, 0].astype(np.float32)


@functools.lru_cache(maxsize=16)
def _fixed_part(g: _Grid2D, C: float):
    # catalyst + problem terms do not change along a sweep
    return np.float32(C) * g.catalyst + g.problem


@functools.lru_cache(maxsize=16)
def _grid2d(p, n_theta, n_phi):
    return _Grid2D(p, n_theta, n_phi)


@functools.lru_cache(maxsize=4)
def _grid4d(p, chi, n_theta, n_phi, n_alpha, n_beta):
    return _Grid4D(p, chi, n_theta, n_phi, n_alpha, n_beta)


def _local_minima(V, k):
    """Flat indices of up to ``k`` lowest discrete local minima of a 2-D map."""
    P = np.pad(V, 1, constant_values=np.inf)
    c = P[1:-1, 1:-1]
    mask = (c <= P[:-2, 1:-1]) & (c <= P[2:, 1:-1]) & (c <= P[1:-1, :-2]) & (c <= P[1:-1, 2:])
    idx = np.flatnonzero(mask)
    vals = V.ravel()[idx]
    if idx.size > k:
        keep = np.argpartition(vals, k - 1)[:k]
        idx, vals = idx[keep], vals[keep]
    return idx[np.argsort(vals, kind="stable")]


def grid_candidates(A: float, B: float, params: ModelParams,
                    settings: SearchSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Starting points (rows of theta, phi, alpha, beta) from the coarse grid."""
    k = settings.n_candidates
    if not _is_4d(params, settings):
        g = _grid2d(params.p, settings.n_theta, settings.n_phi)
        V = np.float32(A) * g.driver + np.float32(B) * g.detuning + _fixed_part(g, params.C)
        idx = _local_minima(V, k)
        i, j = np.unravel_index(idx, V.shape)
        out = np.zeros((idx.size, 4))
        out[:, 0], out[:, 1] = g.theta[i], g.phi[j]
        return out
    g = _grid4d(params.p, params.chi, settings.n_theta_4d, settings.n_phi_4d,
                settings.n_alpha_4d, settings.n_beta_4d)
    V = np.float32(A) * g.driver + np.float32(params.C) * g.catalyst
    nt, nph, na, nb = V.shape
    flat = V.reshape(nt, nph, na * nb)
    ab = flat.argmin(axis=2)
    V2 = np.take_along_axis(flat, ab[..., None], axis=2)[..., 0] + np.float32(B) * g.detuning + g.problem
    idx = _local_minima(V2, k)
    i, j = np.unravel_index(idx, V2.shape)
    ia, ib = np.unravel_index(ab[i, j], (na, nb))
    seeds = np.column_stack([g.theta[i], g.phi[j], g.alpha[ia], g.beta[ib]])
    # On the theta/phi edges some phases drop out of the potential and the
    # grid assigns them arbitrarily. Pair every seed with an interior copy at
    # the phases that maximise the driver so refinement can leave the edge.
    dt, dp = g.theta[1] - g.theta[0], g.phi[1] - g.phi[0]
    inner = seeds.copy()
    inner[:, 0] = np.clip(inner[:, 0], dt, math.pi - dt)
    inner[:, 1] = np.clip(inner[:, 1], dp, math.pi / 2.0 - dp)
    inner[:, 2], inner[:, 3] = _wrap(-params.chi / 2.0), _wrap(params.chi / 2.0)
    return np.vstack([seeds, inner])


def refine(x0, A, B, params: ModelParams, four_d: bool, max_iter: int = 100):
    """Batched projected Newton descent from each row of ``x0``.

    ``A`` and ``B`` broadcast against the rows. Coordinates sitting on a box
    bound with the gradient pointing outward are frozen for that step; the
    Hessian of the free block has its spectrum replaced by absolute values
    (floored) so every step is a descent direction. Returns (x, V).
    """
    x = _project(np.atleast_2d(np.asarray(x0, dtype=float)))
    n = x.shape[0]
    A = np.broadcast_to(np.asarray(A, dtype=float), (n,)).copy()
    B = np.broadcast_to(np.asarray(B, dtype=float), (n,)).copy()
    C, p, chi = params.C, params.p, params.chi
    if not four_d:
        x[:, 2:] = 0.0
    free_axes = np.array([True, True, four_d, four_d])
    V = potential_value(A, B, C, p, chi, *x.T)
    active = np.arange(n)
    for _ in range(max_iter):
        if active.size == 0:
            break
        xa = x[active]
        Va, g, H = potential_derivatives(A[active], B[active], C, p, chi, xa)
        at_lo = (xa <= LOWER + 1e-15) & (g > 0)
        at_hi = (xa >= UPPER - 1e-15) & (g < 0)
        at_lo[:, 2:] = at_hi[:, 2:] = False
        free = free_axes & ~at_lo & ~at_hi
        gf = np.where(free, g, 0.0)
        mask2 = free[:, :, None] & free[:, None, :]
        Hf = np.where(mask2, H, 0.0)
        Hf[:, np.arange(4), np.arange(4)] += ~free
        lam, Q = np.linalg.eigh(Hf)
        lam = np.abs(lam)
        floor = np.maximum(1e-10 * lam.max(axis=1, keepdims=True), 1e-14)
        coef = np.einsum("nji,nj->ni", Q, gf) / np.maximum(lam, floor)
        d = -np.einsum("nij,nj->ni", Q, coef)
        d = np.where(free, d, 0.0)
        norm = np.linalg.norm(d, axis=1)
        d *= np.minimum(1.0, 0.5 / np.maximum(norm, 1e-300))[:, None]

        step = np.ones(active.size)
        accepted = np.zeros(active.size, dtype=bool)
        xnew = xa.copy()
        Vnew = Va.copy()
        pending = np.arange(active.size)
        for _ls in range(40):
            if pending.size == 0:
                break
            trial = xa[pending] + step[pending, None] * d[pending]
            trial[:, :2] = np.clip(trial[:, :2], LOWER[:2], UPPER[:2])
            slope = np.einsum("ni,ni->n", gf[pending], trial - xa[pending])
            trial = _project(trial)
            Vt = potential_value(A[active[pending]], B[active[pending]], C, p, chi, *trial.T)
            ok = (Vt <= Va[pending] + 1e-4 * slope) & (Vt < Va[pending])
            hit = pending[ok]
            xnew[hit], Vnew[hit] = trial[ok], Vt[ok]
            accepted[hit] = True
            pending = pending[~ok]
            step[pending] *= 0.5
        moved = np.abs(_wrap(xnew - xa)).max(axis=1)
        x[active], V[active] = xnew, Vnew
        stalled = (Va - Vnew < 1e-3 * VALUE_TOL * np.maximum(1.0, np.abs(Va))) & (np.abs(gf).max(axis=1) < 1e-7)
        done = ~accepted | (moved < 1e-3 * ANGLE_TOL) | stalled
        active = active[~done]
    return x, V


def select_best(x, V):
    """Index of the lowest row; near-ties (TIE_TOL) go to the smaller m."""
    vmin = V.min()
    near = np.flatnonzero(V <= vmin + TIE_TOL)
    m = order_parameter(x[near, 0], x[near, 1])
    return int(near[np.lexsort((V[near], m))[0]])


def minimize_coefficients(A, B, params: ModelParams, hints=None,
                          settings: SearchSettings = DEFAULT_SETTINGS,
                          offset: float = 0.0):
    """Global minimisation for arrays of raw (A, B) coefficients.

    ``hints`` is an optional (n, 4) array of extra starting points, one per
    coefficient pair (rows of NaN are ignored). Returns (angles (n, 4), v (n,)).
    ``offset`` is a constant added to the potential.
    """
    A = np.atleast_1d(np.asarray(A, dtype=float))
    B = np.atleast_1d(np.asarray(B, dtype=float))
    four_d = _is_4d(params, settings)
    seeds, owner = [], []
    for i, (a, b) in enumerate(zip(A, B)):
        cand = grid_candidates(a, b, params, settings)
        seeds.append(cand)
        owner.append(np.full(len(cand), i))
        if hints is not None and not np.any(np.isnan(hints[i])):
            seeds.append(np.asarray(hints[i], dtype=float)[None, :])
            owner.append(np.array([i]))
    seeds = np.concatenate(seeds)
    owner = np.concatenate(owner)
    x, V = refine(seeds, A[owner], B[owner], params, four_d, settings.max_iter)
    V = V + offset
    best_x = np.empty((A.size, 4))
    best_v = np.empty(A.size)
    order = np.argsort(owner, kind="stable")
    bounds = np.searchsorted(owner[order], np.arange(A.size + 1))
    for i in range(A.size):
        rows = order[bounds[i]:bounds[i + 1]]
        j = rows[select_best(x[rows], V[rows])]
        best_x[i], best_v[i] = x[j], V[j]
    return best_x, best_v


def minimize_potential(sched: Schedule, params: ModelParams, s: float,
                       hint: Angles | None = None,
                       settings: SearchSettings = DEFAULT_SETTINGS) -> tuple[Angles, float]:
    """Global minimiser of the potential at annealing parameter ``s``.

    With chi == 0 the search holds alpha = beta = 0 (the Hamiltonian is real);
    ``settings.full_search`` forces the 4-D search instead.
    """
    A, B = schedule_eval(sched, s)
    hints = None if hint is None else hint.as_array()[None, :]
    x, v = minimize_coefficients(A, B, params, hints, settings)
    return Angles.from_array(x[0]), float(v[0])
