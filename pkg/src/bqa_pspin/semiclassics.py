"""Order-parameter sweeps, transition classification and phase diagrams."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .minimize import (DEFAULT_SETTINGS, TIE_M_SEPARATION, TIE_TOL, SearchSettings, _is_4d, minimize_coefficients, refine,
                       select_best)
from .model import ModelParams, Schedule
from .potential import Angles, order_parameter

SWEEP_COLUMNS = ("theta_min", "phi_min", "alpha_min", "beta_min", "m", "v_min")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("BQA_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SweepResult:
    s_grid: np.ndarray
    angles: np.ndarray  # (n, 4): theta, phi, alpha, beta
    v_min: np.ndarray
    sched: Schedule | None = None
    params: ModelParams | None = None
    settings: SearchSettings = field(default=DEFAULT_SETTINGS, repr=False)

    @property
    def m(self) -> np.ndarray:
        return order_parameter(self.angles[:, 0], self.angles[:, 1])

    @property
    def angles_min(self) -> list[Angles]:
        return [Angles.from_array(row) for row in self.angles]

    def rows(self):
        for s, a, m, v in zip(self.s_grid, self.angles, self.m, self.v_min):
            yield (s, *a, m, v)


class TransitionKind(str, enum.Enum):
    NONE = "none"
    FIRST_ORDER = "first_order"
    SECOND_ORDER = "second_order"
    FIRST_AND_SECOND = "first_and_second"


@dataclass(frozen=True)
class TransitionReport:
    kind: TransitionKind
    s_first: float | None = None
    jump: float | None = None
    s_second: float | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "s_first": self.s_first, "jump": self.jump, "s_second": self.s_second}


def _better(v_new, m_new, v_old, m_old):
    return (v_new < v_old - TIE_TOL) | ((np.abs(v_new - v_old) <= TIE_TOL) & (m_new < m_old - TIE_M_SEPARATION))


def sweep(sched: Schedule, params: ModelParams, s_grid, settings: SearchSettings = DEFAULT_SETTINGS) -> SweepResult:
    """Minimise the potential along the annealing path.

    Every grid point gets a fresh global grid pass. Afterwards each point is
    re-refined from its predecessor's minimiser, and the lower of the two is
    kept; this repeats until nothing changes so a branch can be carried
    forward through any number of points.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.ndim != 1 or s_grid.size == 0:
        raise ValueError("s_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(s_grid) <= 0):
        raise ValueError("s_grid must be strictly increasing")
    A, B = sched.coefficients(s_grid)
    x, v = minimize_coefficients(A, B, params, settings=settings)
    four_d = _is_4d(params, settings)
    m = order_parameter(x[:, 0], x[:, 1])
    for _ in range(s_grid.size):
        if s_grid.size < 2:
            break
        xc, vc = refine(x[:-1], A[1:], B[1:], params, four_d, settings.max_iter)
        mc = order_parameter(xc[:, 0], xc[:, 1])
        take = np.flatnonzero(_better(vc, mc, v[1:], m[1:])) + 1
        if take.size == 0:
            break
        x[take], v[take], m[take] = xc[take - 1], vc[take - 1], mc[take - 1]
    return SweepResult(s_grid, x, v, sched, params, settings)


def _m_at(result: SweepResult, s: float, hints: np.ndarray) -> float:
    A, B = result.sched.coefficients(np.array([s]))
    A, B = float(A[0]), float(B[0])
    x, v = minimize_coefficients(A, B, result.params, settings=result.settings)
    four_d = _is_4d(result.params, result.settings)
    xh, vh = refine(hints, A, B, result.params, four_d, result.settings.max_iter)
    allx = np.vstack([x, xh])
    allv = np.concatenate([v, vh])
    j = select_best(allx, allv)
    return float(order_parameter(allx[j, 0], allx[j, 1]))


def _is_discontinuous(result: SweepResult, i: int, jump_threshold: float, min_width: float) -> bool:
    """Bisect [s_i, s_{i+1}] following the largest change in m.

    A genuine jump survives at any resolution; a steep but continuous rise
    (square-root onset of a second-order transition) shrinks with the bracket.
    """
    sl, sr = float(result.s_grid[i]), float(result.s_grid[i + 1])
    xl, xr = result.angles[i], result.angles[i + 1]
    ml, mr = float(result.m[i]), float(result.m[i + 1])
    while sr - sl > min_width:
        sm = 0.5 * (sl + sr)
        mm = _m_at(result, sm, np.vstack([xl, xr]))
        if abs(mm - ml) >= abs(mr - mm):
            sr, mr = sm, mm
        else:
            sl, ml = sm, mm
        if abs(mr - ml) <= jump_threshold:
            return False
    return abs(mr - ml) > jump_threshold


def classify_transitions(result: SweepResult, jump_threshold: float = 0.05, onset_eps: float = 1e-3,
                         confirm: bool = True, min_width: float = 1e-6) -> TransitionReport:
    """Classify the transitions seen in a sweep.

    A first-order candidate is an adjacent pair with |m[i+1] - m[i]| above
    ``jump_threshold``. When the sweep carries its schedule and parameters and
    ``confirm`` is set, each candidate is bisected down to ``min_width`` and
    only kept if the change in m stays above the threshold. The second-order
    location is the first point with m > ``onset_eps`` reached without a
    confirmed jump.
    """
    s = np.asarray(result.s_grid, dtype=float)
    if s.size < 2:
        raise ValueError("need at least two sweep points to classify transitions")
    if np.diff(s).max() > 1e-2:
        raise ValueError(f"sweep grid too coarse for classification (max spacing {np.diff(s).max():.3g} > 1e-2)")
    m = result.m
    dm = np.diff(m)
    can_confirm = confirm and result.sched is not None and result.params is not None

    confirmed: dict[int, bool] = {}

    def is_jump(i: int) -> bool:
        if abs(dm[i]) <= jump_threshold:
            return False
        if i not in confirmed:
            confirmed[i] = _is_discontinuous(result, i, jump_threshold, min_width) if can_confirm else True
        return confirmed[i]

    s_first = jump = None
    for i in np.flatnonzero(np.abs(dm) > jump_threshold):
        if is_jump(int(i)):
            s_first, jump = float(s[i]), float(dm[i])
            break

    s_second = None
    above = np.flatnonzero(m > onset_eps)
    if above.size and above[0] > 0 and not is_jump(int(above[0]) - 1):
        s_second = float(s[above[0]])

    if s_first is not None and s_second is not None:
        kind = TransitionKind.FIRST_AND_SECOND
    elif s_first is not None:
        kind = TransitionKind.FIRST_ORDER
    elif s_second is not None:
        kind = TransitionKind.SECOND_ORDER
    else:
        kind = TransitionKind.NONE
    return TransitionReport(kind, s_first, jump, s_second)


def second_order_curve(params: ModelParams, theta_grid) -> np.ndarray:
    """(A, B) points where phi_min starts to leave pi/2, parametrised by theta.

    Solves dV/dtheta = 0 and d^2V/dphi^2 = 0 at phi = pi/2, alpha = beta = 0,
    discarding the sin(theta/2) = 0 root. Valid for p >= 3; at p = 2 the
    problem term contributes to the phi curvature.
    """
    if params.C <= 0:
        raise ValueError("second-order curve requires C > 0")
    if params.chi != 0.0:
        raise ValueError("second-order curve requires chi = 0")
    if params.p < 3:
        raise ValueError("second-order curve conditions assume p >= 3")
    theta = np.asarray(theta_grid, dtype=float)
    if np.any(theta <= 0.0) or np.any(theta >= math.pi):
        raise ValueError("theta grid must lie strictly inside (0, pi)")
    C = params.C
    half = theta / 2.0
    A = 4.0 * C * np.sin(half) ** 3 / np.cos(half)
    B = 2.0 * (C * np.sin(half) ** 2 * np.sin(theta) - A * np.cos(theta)) / np.sin(theta)
    return np.column_stack([A, B])


def second_order_crossing(sched: Schedule, params: ModelParams, s_grid=None) -> float | None:
    """First s at which the schedule path (A(s), B(s)) meets the second-order curve."""
    C = params.C

    def theta_for(A):
        if A <= 0.0:
            return None
        # A = 4C u^3 / sqrt(1 - u^2) is increasing in u = sin(theta/2)
        u = brentq(lambda u: 4.0 * C * u ** 3 / math.sqrt(1.0 - u * u) - A, 0.0, 1.0 - 1e-15, xtol=1e-15)
        return 2.0 * math.asin(u)

    def gap(s):
        A, B = float(sched.A(s)), float(sched.B(s))
        th = theta_for(A)
        (_, Bc), = second_order_curve(params, [th])
        return B - Bc

    s_grid = np.linspace(0.0, 1.0, 2001) if s_grid is None else np.asarray(s_grid, dtype=float)
    g = np.array([gap(s) for s in s_grid])
    sign_change = np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)
    if sign_change.size == 0:
        return None
    i = sign_change[0]
    return float(brentq(gap, s_grid[i], s_grid[i + 1], xtol=1e-14))


@dataclass
class PhaseDiagramAB:
    a_grid: np.ndarray
    b_grid: np.ndarray
    angles: np.ndarray  # (na, nb, 4)
    v_min: np.ndarray  # (na, nb)

    @property
    def m(self) -> np.ndarray:
        return order_parameter(self.angles[..., 0], self.angles[..., 1])

    def rows(self):
        m = self.m
        for i, a in enumerate(self.a_grid):
            for j, b in enumerate(self.b_grid):
                yield (a, b, *self.angles[i, j], m[i, j], self.v_min[i, j])


def phase_diagram_ab(params: ModelParams, a_grid, b_grid,
                     settings: SearchSettings = DEFAULT_SETTINGS) -> PhaseDiagramAB:
    """Order parameter over constant driver coefficients (A, B), bypassing the schedule."""
    if params.chi != 0.0:
        raise ValueError("A-B phase diagram is defined for chi = 0")
    a_grid = np.asarray(a_grid, dtype=float)
    b_grid = np.asarray(b_grid, dtype=float)
    AA, BB = np.meshgrid(a_grid, b_grid, indexing="ij")
    x, v = minimize_coefficients(AA.ravel(), BB.ravel(), params, settings=settings)
    return PhaseDiagramAB(a_grid, b_grid, x.reshape(AA.shape + (4,)), v.reshape(AA.shape))


@dataclass(frozen=True)
class PhaseSCPoint:
    C: float
    report: TransitionReport

    @property
    def s_first(self) -> float | None:
        return self.report.s_first


def _sc_point(args) -> PhaseSCPoint:
    sched, p, C, s_grid, settings, jump_threshold, onset_eps = args
    params = ModelParams(p=p, C=float(C))
    result = sweep(sched, params, s_grid, settings)
    return PhaseSCPoint(float(C), classify_transitions(result, jump_threshold, onset_eps))


def phase_diagram_sc(sched: Schedule, p: int, c_grid, s_resolution: float = 5e-4,
                     settings: SearchSettings = DEFAULT_SETTINGS, jump_threshold: float = 0.05,
                     onset_eps: float = 1e-3, workers: int | None = None) -> list[PhaseSCPoint]:
    """First-order transition location along the schedule for each catalyst amplitude."""
    n = int(round(1.0 / s_resolution)) + 1
    s_grid = np.linspace(0.0, 1.0, n)
    tasks = [(sched, p, C, s_grid, settings, jump_threshold, onset_eps) for C in c_grid]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [_sc_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sc_point, tasks))


def first_order_endpoint(points: list[PhaseSCPoint]) -> float | None:
    """Smallest scanned C beyond which no first-order transition is found, if any."""
    present = [pt.s_first is not None for pt in points]
    for i, pt in enumerate(points):
        if not present[i] and not any(present[i:]):
            return pt.C
    return None
