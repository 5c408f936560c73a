"""Directional derivative suprema and the bounded-distortion quotient.

Two statistics drive everything downstream:

* ``derivative_sup``: sup over Euclidean-unit directions xi of the target
  length of J.xi at f(p).  For a Euclidean target this is the top singular
  value of the Jacobian; for the sphere target (k = 1) it is
  ||grad f|| / (1 + |f|^2), the spherical derivative.
* ``marty_quotient``: the same supremum taken over the Kobayashi unit ball,
  i.e. sup over xi != 0 of E(f(p); J.xi) / F_K(p, xi).  Normal families keep
  this quotient bounded on compact subsets; divergence witnesses breakdown.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidSchedule, NotHyperbolic, OutsideDomain
from .expr import (HolomorphicFamily, eval_family_grid, eval_point_mp,
                   jacobian_grid, jacobian_point_mp)
from .geometry import Domain, contains_grid, kobayashi_closed_form
from .targets import TargetMetric

__all__ = ["SweepResult", "derivative_sup", "derivative_sup_grid",
           "marty_quotient", "marty_sweep"]


def worker_count() -> int:
    """Parallelism cap from ZL_THREADS (default 1, serial)."""
    try:
        return max(1, int(os.environ.get("ZL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SweepResult:
    grid: np.ndarray          # (m, n) complex sample points
    schedule: tuple           # strictly increasing family indices
    mode: str                 # "derivative" | "quotient"
    values: np.ndarray        # (T, m) float: M_j(p)
    sups: np.ndarray          # (T,) float: M_j(K), exact max over the grid


def _sphere_sup_mp(family: HolomorphicFamily, point, index: int) -> float:
    """Spherical derivative recomputed with a wide-exponent backend.

    Rescues grid points where double precision overflowed into inf/inf; the
    true ratio usually rounds to 0.0 or a finite float.
    """
    import mpmath
    J = jacobian_point_mp(family, point, index)[0]
    v = eval_point_mp(family, point, index)[0]
    g = mpmath.sqrt(sum((abs(x)) ** 2 for x in J))
    ratio = g / (1 + abs(v) ** 2)
    try:
        return float(ratio)
    except (OverflowError, ValueError):
        return float("inf")


def derivative_sup_grid(family: HolomorphicFamily, points, index: int,
                        metric: TargetMetric) -> np.ndarray:
    """Vectorized derivative supremum over a batch of points; (m,) floats."""
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 1:
        pts = pts[None, :]
    J = jacobian_grid(family, pts, index)
    m = pts.shape[0]
    if metric.kind == "euclidean":
        finite = np.all(np.isfinite(J.view(float)), axis=(1, 2))
        out = np.full(m, np.inf)
        idx = np.nonzero(finite)[0]
        if idx.size:
            out[idx] = np.linalg.svd(J[idx], compute_uv=False)[:, 0]
        return out
    if family.target_dim != 1:
        raise ValueError("sphere target requires a scalar family (k = 1)")
    vals = eval_family_grid(family, pts, index)[:, 0]
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        g = np.sqrt(np.sum(np.abs(J[:, 0, :]) ** 2, axis=1))
        out = g / (1.0 + np.abs(vals) ** 2)
    bad = np.isnan(out)
    for i in np.nonzero(bad)[0]:
        out[i] = _sphere_sup_mp(family, pts[i], index)
    return out


def derivative_sup(family: HolomorphicFamily, index: int, p,
                   metric: TargetMetric) -> float:
    """Sup over Euclidean-unit xi of E_M(f_index(p); J.xi) at one point."""
    return float(derivative_sup_grid(family, np.asarray(p, complex), index, metric)[0])


# 32 deterministic direction starts: identity columns, their i-rotations, and
# a fixed seeded low-discrepancy filler (independent of all inputs).

def _direction_starts(n: int, count: int = 32) -> np.ndarray:
    starts = []
    eye = np.eye(n, dtype=complex)
    for a in range(n):
        starts.append(eye[a])
        starts.append(1j * eye[a])
    rng = np.random.default_rng(0xD15C)
    while len(starts) < count:
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        starts.append(v / np.linalg.norm(v))
    return np.asarray(starts[:count])


def marty_quotient(family: HolomorphicFamily, index: int, p, domain: Domain,
                   metric: TargetMetric, start_scale: float = 1.0) -> float:
    """Sup over xi != 0 of E_M(f(p); J.xi) / F_K(p, xi) on a hyperbolic domain.

    Maximized by direction ascent from 32 deterministic sphere starts; the
    ratio is scale-invariant in xi, so each start is free to roam R^{2n}.
    """
    if not domain.hyperbolic:
        raise NotHyperbolic("the quotient needs a hyperbolic domain")
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    if not bool(contains_grid(domain, p)[0]):
        raise OutsideDomain(f"{p} is not interior to the {domain.kind}")
    n = domain.ambient_dim
    J = jacobian_grid(family, p[None, :], index)[0]
    if metric.kind == "sphere":
        val = eval_family_grid(family, p[None, :], index)[0, 0]
        w = 1.0 / (1.0 + abs(val) ** 2)
    else:
        w = 1.0

    def ratio(x: np.ndarray) -> float:
        xi = x[:n] + 1j * x[n:]
        nrm = np.linalg.norm(xi)
        if nrm < 1e-14:
            return 0.0
        xi = xi / nrm
        num = w * np.linalg.norm(J @ xi)
        den = kobayashi_closed_form(domain, p, xi)
        return num / den if den > 0 else 0.0

    best = 0.0
    for xi0 in _direction_starts(n):
        x0 = np.concatenate([xi0.real, xi0.imag]) * start_scale
        res = minimize(lambda x: -ratio(x), x0, method="Nelder-Mead",
                       options={"maxiter": 120 * n, "xatol": 1e-10, "fatol": 1e-12})
        best = max(best, -res.fun)
    return float(best)


def marty_sweep(family: HolomorphicFamily, domain: Domain, metric: TargetMetric,
                grid, schedule, mode: str = "derivative") -> SweepResult:
    """Fill M_j(p) over a grid and an index schedule; sups are exact maxima."""
    grid = np.asarray(grid, dtype=complex)
    if grid.ndim == 1:
        grid = grid[None, :]
    if grid.shape[0] == 0:
        raise ValueError("grid must be non-empty")
    schedule = tuple(int(j) for j in schedule)
    if any(b <= a for a, b in zip(schedule, schedule[1:])) or not schedule:
        raise InvalidSchedule("schedule must be strictly increasing and non-empty")
    if not np.all(contains_grid(domain, grid)):
        raise OutsideDomain("grid contains non-interior points")
    if mode not in ("derivative", "quotient"):
        raise ValueError(f"unknown sweep mode {mode!r}")
    if mode == "quotient" and not domain.hyperbolic:
        raise NotHyperbolic("quotient sweeps need a hyperbolic domain")

    T, m = len(schedule), grid.shape[0]
    values = np.empty((T, m))
    if mode == "derivative":
        for t, j in enumerate(schedule):
            values[t] = derivative_sup_grid(family, grid, j, metric)
    else:
        workers = worker_count()
        if workers > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for t, j in enumerate(schedule):
                    values[t] = list(pool.map(
                        lambda pt: marty_quotient(family, j, pt, domain, metric), grid))
        else:
            for t, j in enumerate(schedule):
                values[t] = [marty_quotient(family, j, pt, domain, metric) for pt in grid]
    sups = np.max(values, axis=1)
    return SweepResult(grid=grid, schedule=schedule, mode=mode, values=values, sups=sups)
