"""Divergence-point detection and locus classification.

A grid point is flagged when its derivative supremum grows along a geometric
index schedule (log-log slope over the last half of the schedule, plus an
absolute growth test).  The flagged cloud is then classified:

* fills a sub-box of the grid          -> closure has interior
* a low-degree polynomial vanishes     -> thin analytic locus (the fit is
  the minimal-degree unit nullspace vector of the scaled Vandermonde)
* neither                              -> non-analytic locus

and the classification maps to a family verdict through a fixed decision
table (normal / quasi-normal but not weakly-normal / neither).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidSchedule, TooFewPoints
from .expr import HolomorphicFamily
from .geometry import Domain
from .marty import derivative_sup_grid
from .targets import TargetMetric

__all__ = ["Locus", "Verdict", "LocusReport", "MuReport", "detect_mu1",
           "classify_locus", "classify_family", "monomial_exponents",
           "slope_statistics"]

_CAP = 1e300  # growth values are clipped here before the log-slope fit


class Locus(Enum):
    EMPTY = "Empty"
    ANALYTIC_THIN = "AnalyticThin"
    NON_ANALYTIC = "NonAnalytic"
    HAS_INTERIOR_CLOSURE = "HasInteriorClosure"


class Verdict(Enum):
    NORMAL = "Normal"
    NOT_NORMAL_QUASI_NORMAL = "NotNormal_QuasiNormal"
    NOT_NORMAL_WEAKLY_NORMAL = "NotNormal_WeaklyNormal"
    NOT_QUASI_NORMAL = "NotQuasiNormal"
    NOT_WEAKLY_NORMAL = "NotWeaklyNormal"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class LocusReport:
    kind: Locus
    poly_exponents: list = field(default_factory=list)   # monomial multi-indices
    poly_coeffs: np.ndarray | None = None                # unit nullspace vector
    residual: float = math.inf                           # ||V c||_inf at the fit
    least_singular_value: float = math.inf               # over all tried degrees
    fill_fraction: float = 0.0                           # best sub-box occupancy


@dataclass
class MuReport:
    grid: np.ndarray                 # (m, n) complex
    schedule: tuple
    flagged_mask: np.ndarray         # (m,) bool
    slopes: np.ndarray               # (m,) float (log-log, last half)
    final_values: np.ndarray         # (m,) float, clipped M_{j_max}
    first_values: np.ndarray         # (m,) float, clipped M_{j_min}
    sweep_values: np.ndarray         # (T, m) float
    slope_threshold: float
    growth_threshold: float
    locus: LocusReport | None = None
    verdict: Verdict | None = None
    not_weakly_normal: bool | None = None

    @property
    def flagged(self) -> np.ndarray:
        return self.grid[self.flagged_mask]


def _validate_geometric(schedule) -> tuple:
    schedule = tuple(int(j) for j in schedule)
    if len(schedule) < 7:
        raise InvalidSchedule("need a geometric schedule with at least 7 indices")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise InvalidSchedule("schedule must be strictly increasing")
    ratios = [b / a for a, b in zip(schedule, schedule[1:])]
    if min(ratios) < 1.2:
        raise InvalidSchedule("schedule must grow geometrically (ratio >= 1.2)")
    return schedule


def slope_statistics(values: np.ndarray, schedule) -> np.ndarray:
    """Least-squares slope of log M vs log j over the last half of the schedule.

    Non-finite and zero entries are excluded from the fit.  If fewer than two
    usable entries remain, the slope is +inf when the tail overflowed (growth
    certified beyond float range) and -inf when it vanished.
    """
    T, m = values.shape
    half = T // 2
    x = np.log(np.asarray(schedule, dtype=float))[half:]
    tail = values[half:]
    slopes = np.empty(m)
    for i in range(m):
        col = tail[:, i]
        good = np.isfinite(col) & (col > 0.0)
        if np.count_nonzero(good) < 2:
            slopes[i] = math.inf if np.any(np.isinf(col)) else -math.inf
            continue
        xi = x[good]
        yi = np.log(col[good])
        xm = xi - xi.mean()
        denom = float(np.dot(xm, xm))
        slopes[i] = float(np.dot(xm, yi - yi.mean()) / denom) if denom > 0 else 0.0
    return slopes


def detect_mu1(family: HolomorphicFamily, domain: Domain, metric: TargetMetric,
               grid, index_schedule, growth_threshold: float = 1e3,
               slope_threshold: float = 0.5) -> MuReport:
    """Flag grid points whose derivative supremum diverges along the schedule.

    A point is flagged iff (a) the log-log slope over the last half of the
    schedule is >= slope_threshold and (b) the final value exceeds
    growth_threshold * (1 + first value).
    """
    schedule = _validate_geometric(index_schedule)
    grid = np.asarray(grid, dtype=complex)
    if grid.ndim == 1:
        grid = grid[None, :]
    T = len(schedule)
    values = np.empty((T, grid.shape[0]))
    for t, j in enumerate(schedule):
        values[t] = derivative_sup_grid(family, grid, j, metric)
    clipped = np.clip(np.nan_to_num(values, nan=np.inf, posinf=np.inf), 0.0, _CAP)
    slopes = slope_statistics(values, schedule)
    first = clipped[0]
    final = clipped[-1]
    flagged = (slopes >= slope_threshold) & (final >= growth_threshold * (1.0 + first))
    return MuReport(grid=grid, schedule=schedule, flagged_mask=flagged,
                    slopes=slopes, final_values=final, first_values=first,
                    sweep_values=values, slope_threshold=slope_threshold,
                    growth_threshold=growth_threshold)


# ---------------------------------------------------------------------------
# Locus classification


def monomial_exponents(n: int, degree: int) -> list[tuple[int, ...]]:
    """Multi-indices alpha with |alpha| <= degree, graded-lex order."""
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), total):
            alpha = [0] * n
            for c in combo:
                alpha[c] += 1
            out.append(tuple(alpha))
    return sorted(set(out), key=lambda a: (sum(a), a))


def _vandermonde(points: np.ndarray, exponents) -> np.ndarray:
    cols = []
    for alpha in exponents:
        col = np.ones(points.shape[0], dtype=complex)
        for a, e in enumerate(alpha):
            if e:
                col = col * points[:, a] ** e
        cols.append(col)
    return np.stack(cols, axis=1)


def _axis_values(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cluster one real coordinate axis to unique lattice values (tol 1e-9)."""
    order = np.argsort(coords)
    vals = [coords[order[0]]]
    idx = np.empty(coords.size, dtype=int)
    for o in order:
        if coords[o] - vals[-1] > 1e-9:
            vals.append(coords[o])
        idx[o] = len(vals) - 1
    return np.asarray(vals), idx


def _interior_fill(points: np.ndarray, n: int) -> float:
    """Best occupancy fraction over all 3-per-axis sub-boxes of the point lattice."""
    reals = np.empty((points.shape[0], 2 * n))
    for a in range(n):
        reals[:, 2 * a] = points[:, a].real
        reals[:, 2 * a + 1] = points[:, a].imag
    axes = []
    index_cols = []
    for t in range(2 * n):
        vals, idx = _axis_values(reals[:, t])
        axes.append(vals)
        index_cols.append(idx)
    shape = tuple(len(v) for v in axes)
    if any(s < 3 for s in shape):
        return 0.0
    occupancy = np.zeros(shape, dtype=np.int32)
    occupancy[tuple(index_cols)] = 1
    # integral image for O(1) window sums in every dimension
    acc = occupancy
    for axis in range(2 * n):
        acc = np.cumsum(acc, axis=axis)
    acc = np.pad(acc, [(1, 0)] * (2 * n))
    window = 3
    best = 0
    ranges = [range(s - window + 1) for s in shape]
    for corner in itertools.product(*ranges):
        total = 0
        for signs in itertools.product((0, 1), repeat=2 * n):
            sel = tuple(c + window if s else c for c, s in zip(corner, signs))
            total += ((-1) ** (2 * n - sum(signs))) * acc[sel]
        best = max(best, total)
    return best / float(window ** (2 * n))


def classify_locus(flagged_points, ambient_dim: int, max_degree: int = 4) -> LocusReport:
    """Decide interior-closure vs thin-analytic vs non-analytic for a point cloud.

    The analytic test walks degrees 1..max_degree and accepts the first degree
    whose column-scaled Vandermonde has a nullspace vector with residual
    ||V c||_inf < 1e-6 ||c||_2; minimal degree keeps the fit unique up to
    scale when the locus divides several monomials.
    """
    pts = np.asarray(flagged_points, dtype=complex)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[0] == 0:
        raise ValueError("flagged set must be non-empty; Empty is decided upstream")
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    n = ambient_dim

    fill = _interior_fill(pts, n)
    if fill >= 0.90:
        return LocusReport(kind=Locus.HAS_INTERIOR_CLOSURE, fill_fraction=fill)

    full_basis = monomial_exponents(n, max_degree)
    if pts.shape[0] < len(full_basis):
        raise TooFewPoints(
            f"{pts.shape[0]} flagged points cannot support a degree-{max_degree} "
            f"basis of dimension {len(full_basis)}")

    least_sv = math.inf
    for degree in range(1, max_degree + 1):
        exponents = monomial_exponents(n, degree)
        V = _vandermonde(pts, exponents)
        scales = np.linalg.norm(V, axis=0)
        scales[scales == 0.0] = 1.0
        Vs = V / scales
        _, svals, vh = np.linalg.svd(Vs, full_matrices=False)
        least_sv = min(least_sv, float(svals[-1]))
        c_scaled = vh[-1].conj()
        c = c_scaled / scales
        c = c / np.linalg.norm(c)
        residual = float(np.max(np.abs(V @ c)))
        if residual < 1e-6:
            return LocusReport(kind=Locus.ANALYTIC_THIN, poly_exponents=exponents,
                               poly_coeffs=c, residual=residual,
                               least_singular_value=float(svals[-1]),
                               fill_fraction=fill)
    return LocusReport(kind=Locus.NON_ANALYTIC, least_singular_value=least_sv,
                       fill_fraction=fill)


# verdict and the "fails weak normality" sub-flag per locus kind; a locus
# with interior closure contains analytic slices of flagged points, so weak
# normality fails there as well
_TABLE = {
    Locus.EMPTY: (Verdict.NORMAL, False),
    Locus.ANALYTIC_THIN: (Verdict.NOT_NORMAL_QUASI_NORMAL, True),
    Locus.NON_ANALYTIC: (Verdict.NOT_QUASI_NORMAL, True),
    Locus.HAS_INTERIOR_CLOSURE: (Verdict.NOT_QUASI_NORMAL, True),
}


def classify_family(report: MuReport, max_degree: int = 4) -> MuReport:
    """Fill locus + verdict on a detection report via the fixed decision table.

    Empty -> Normal.  Thin analytic locus -> quasi-normal but not weakly
    normal.  Non-analytic locus -> neither quasi- nor weakly-normal.
    Interior closure -> not quasi-normal.  Any flagged point whose slope
    straddles [0.25, 0.5) downgrades the verdict to Inconclusive.
    """
    flagged = report.flagged
    if flagged.shape[0] == 0:
        report.locus = LocusReport(kind=Locus.EMPTY, residual=0.0)
    else:
        report.locus = classify_locus(flagged, report.grid.shape[1], max_degree)
    straddle = report.flagged_mask & (report.slopes >= 0.25) & (report.slopes < 0.5)
    if np.any(straddle):
        report.verdict = Verdict.INCONCLUSIVE
        report.not_weakly_normal = None
        return report
    verdict, weak_flag = _TABLE[report.locus.kind]
    report.verdict = verdict
    report.not_weakly_normal = weak_flag
    return report
