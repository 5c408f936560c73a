"""Source domains in C^n and the Royden/Kobayashi infinitesimal metric.

Model domains (unit disc, polydisc, ball, full space) carry closed forms where
a verified one exists; everything else goes through ``kobayashi_numeric``,
which minimizes ||xi|| / ||phi'(0)|| over polynomial analytic discs
phi: D -> Omega with phi(0) = z and phi'(0) parallel to xi.  Restricting the
candidate class can only raise the infimum, so the numeric value is always an
upper bound on the true metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import NotHyperbolic, NotSupported, OutsideDomain
from .expr import Expression, eval_family_grid, family_from_sources

__all__ = ["Domain", "unit_disc", "polydisc", "ball", "full_space",
           "generic_bounded", "contains", "sample_grid",
           "kobayashi_closed_form", "kobayashi_numeric"]

_PEN_SAMPLES = 64     # boundary samples used inside the penalty objective
_CHECK_SAMPLES = 1024  # finer boundary grid for the feasibility re-check


@dataclass(frozen=True)
class Domain:
    kind: str                 # unit_disc | polydisc | ball | full_space | generic
    ambient_dim: int
    center: tuple = ()
    radii: tuple = ()
    radius: float = 0.0
    box: tuple = ()           # (lo, hi) per real axis; full_space/generic sampling window
    predicates: tuple = ()    # generic: z in Omega iff |g(z)| < 1 for every g

    @property
    def hyperbolic(self) -> bool:
        return self.kind != "full_space"

    def name(self) -> str:
        return self.kind


def unit_disc() -> Domain:
    return Domain("unit_disc", 1, center=(0j,), radii=(1.0,))


def polydisc(center: Sequence[complex], radii: Sequence[float]) -> Domain:
    center = tuple(complex(c) for c in center)
    radii = tuple(float(r) for r in radii)
    if len(center) != len(radii):
        raise ValueError("center and radii lengths differ")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    return Domain("polydisc", len(center), center=center, radii=radii)


def ball(center: Sequence[complex], radius: float) -> Domain:
    center = tuple(complex(c) for c in center)
    if radius <= 0:
        raise ValueError("radius must be positive")
    return Domain("ball", len(center), center=center, radius=float(radius))


def full_space(n: int, box: tuple[float, float] = (-2.0, 2.0)) -> Domain:
    return Domain("full_space", n, box=(float(box[0]), float(box[1])))


def generic_bounded(predicates: Sequence[Expression], ambient_dim: int,
                    box: tuple[float, float]) -> Domain:
    """Analytic polyhedron {z : |g(z)| < 1 for all g} inside a bounding box."""
    return Domain("generic", ambient_dim, box=(float(box[0]), float(box[1])),
                  predicates=tuple(predicates))


# ---------------------------------------------------------------------------
# Membership and grids


def _pts2d(points) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    return pts[None, :] if pts.ndim == 1 else pts


def contains_grid(domain: Domain, points) -> np.ndarray:
    """Vectorized membership for an (m, n) batch of points."""
    pts = _pts2d(points)
    if pts.shape[1] != domain.ambient_dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, domain has {domain.ambient_dim}")
    if domain.kind == "unit_disc":
        return np.abs(pts[:, 0]) < 1.0
    if domain.kind == "polydisc":
        c = np.asarray(domain.center)
        r = np.asarray(domain.radii)
        return np.all(np.abs(pts - c) < r, axis=1)
    if domain.kind == "ball":
        c = np.asarray(domain.center)
        return np.linalg.norm(pts - c, axis=1) < domain.radius
    if domain.kind == "full_space":
        return np.ones(pts.shape[0], dtype=bool)
    # generic: box plus all predicate moduli below 1
    lo, hi = domain.box
    ok = np.all((pts.real >= lo) & (pts.real <= hi)
                & (pts.imag >= lo) & (pts.imag <= hi), axis=1)
    if domain.predicates:
        fam = _predicate_family(domain)
        vals = eval_family_grid(fam, pts, 1)
        ok &= np.all(np.abs(vals) < 1.0, axis=1)
    return ok


_PRED_FAMILY_CACHE: dict = {}


def _predicate_family(domain: Domain):
    key = (domain.predicates, domain.ambient_dim)
    fam = _PRED_FAMILY_CACHE.get(key)
    if fam is None:
        from .expr import HolomorphicFamily
        fam = HolomorphicFamily(domain.predicates, domain.ambient_dim)
        _PRED_FAMILY_CACHE[key] = fam
    return fam


def contains(domain: Domain, z) -> bool:
    return bool(contains_grid(domain, z)[0])


def _axis_ranges(domain: Domain, margin: float) -> list[tuple[float, float]]:
    """Per-real-axis (lo, hi) lattice ranges; order Re z1, Im z1, Re z2, ..."""
    n = domain.ambient_dim
    if domain.kind == "unit_disc":
        h = 1.0 - margin
        return [(-h, h), (-h, h)]
    if domain.kind == "polydisc":
        out = []
        for c, r in zip(domain.center, domain.radii):
            h = r * (1.0 - margin)
            out.extend([(c.real - h, c.real + h), (c.imag - h, c.imag + h)])
        return out
    if domain.kind == "ball":
        h = domain.radius * (1.0 - margin)
        out = []
        for c in domain.center:
            out.extend([(c.real - h, c.real + h), (c.imag - h, c.imag + h)])
        return out
    lo, hi = domain.box
    if domain.kind == "generic":
        half = 0.5 * (hi - lo) * (1.0 - margin)
        mid = 0.5 * (hi + lo)
        return [(mid - half, mid + half)] * (2 * n)
    return [(lo, hi)] * (2 * n)  # full_space: the box is the sampling window


def sample_grid(domain: Domain, resolution: int, margin: float = 0.2) -> np.ndarray:
    """Deterministic row-major lattice of interior points, shape (m, n) complex.

    Each real axis carries ``resolution`` equispaced values over the
    margin-shrunk range; points failing strict membership are dropped.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if not (0.0 < margin < 1.0):
        raise ValueError("margin must lie in (0, 1)")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in _axis_ranges(domain, margin)]
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.reshape(-1) for m in mesh]
    n = domain.ambient_dim
    pts = np.empty((flat[0].size, n), dtype=complex)
    for a in range(n):
        pts[:, a] = flat[2 * a] + 1j * flat[2 * a + 1]
    return pts[contains_grid(domain, pts)]


# ---------------------------------------------------------------------------
# Closed forms


def kobayashi_closed_form(domain: Domain, z, xi) -> float:
    """Infinitesimal Kobayashi metric at z in direction xi, model domains only.

    The ball variant is served by the numeric oracle behind a memo table; no
    unverified literature formula is baked in.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if domain.kind == "full_space":
        return 0.0
    if not contains(domain, z):
        raise OutsideDomain(f"{z} is not interior to the {domain.kind}")
    if domain.kind == "unit_disc":
        return float(abs(xi[0]) / (1.0 - abs(z[0]) ** 2))
    if domain.kind == "polydisc":
        c = np.asarray(domain.center)
        r = np.asarray(domain.radii)
        u = np.abs((z - c) / r)
        return float(np.max(np.abs(xi) / (r * (1.0 - u ** 2))))
    if domain.kind == "ball":
        return _ball_metric_cached(domain, z, xi)
    raise NotSupported(f"no closed form for {domain.kind} domains")


_BALL_CACHE: dict = {}


def _ball_metric_cached(domain: Domain, z: np.ndarray, xi: np.ndarray) -> float:
    norm = float(np.linalg.norm(xi))
    if norm == 0.0:
        return 0.0
    xhat = xi / norm
    key = (domain.center, domain.radius,
           tuple(np.round(z, 12).tolist()), tuple(np.round(xhat, 12).tolist()))
    val = _BALL_CACHE.get(key)
    if val is None:
        val = kobayashi_numeric(domain, z, xhat, degree=3, restarts=6, base_seed=0)
        _BALL_CACHE[key] = val
    return val * norm


# ---------------------------------------------------------------------------
# Numeric oracle: penalized descent over polynomial disc candidates


def _boundary_excess(domain: Domain, vals: np.ndarray) -> np.ndarray:
    """Signed containment excess per boundary sample; <= 0 means inside."""
    if domain.kind == "unit_disc":
        return np.abs(vals[:, 0]) - 1.0
    if domain.kind == "polydisc":
        c = np.asarray(domain.center)
        r = np.asarray(domain.radii)
        return np.max((np.abs(vals - c) - r) / r, axis=1)
    if domain.kind == "ball":
        return (np.linalg.norm(vals - np.asarray(domain.center), axis=1)
                - domain.radius) / domain.radius
    # generic: box excess plus predicate excess
    lo, hi = domain.box
    box_ex = np.max(np.maximum(lo - vals.real, vals.real - hi), axis=1)
    box_ex = np.maximum(box_ex, np.max(np.maximum(lo - vals.imag, vals.imag - hi), axis=1))
    ex = box_ex
    if domain.predicates:
        fam = _predicate_family(domain)
        pv = eval_family_grid(fam, vals, 1)
        ex = np.maximum(ex, np.max(np.abs(pv) - 1.0, axis=1))
    return ex


def _disc_values(z: np.ndarray, coeffs: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """phi(zeta) = z + sum_m coeffs[m] zeta^(m+1), Horner; returns (len(zeta), n)."""
    acc = np.zeros((zeta.size, z.size), dtype=complex)
    for m in range(coeffs.shape[0] - 1, -1, -1):
        acc = (acc + coeffs[m]) * zeta[:, None]
    return acc + z


def _pack(s: float, tail: np.ndarray) -> np.ndarray:
    return np.concatenate(([s], tail.view(float).ravel()))


def _unpack(x: np.ndarray, n: int, degree: int):
    s = x[0]
    tail = x[1:].view(complex).reshape(degree - 1, n) if degree > 1 else \
        np.zeros((0, n), dtype=complex)
    return s, tail


def _coeff_matrix(s: float, xhat: np.ndarray, tail: np.ndarray) -> np.ndarray:
    return np.vstack([s * xhat[None, :], tail]) if tail.size else s * xhat[None, :]


def _linear_feasible_s(domain: Domain, z: np.ndarray, xhat: np.ndarray) -> float:
    """Largest s with the straight disc z + s*xhat*zeta inside the domain."""
    if domain.kind == "unit_disc":
        return (1.0 - abs(z[0])) / abs(xhat[0])
    if domain.kind == "polydisc":
        c = np.asarray(domain.center)
        r = np.asarray(domain.radii)
        with np.errstate(divide="ignore"):
            vals = (r - np.abs(z - c)) / np.abs(xhat)
        return float(np.min(vals))
    if domain.kind == "ball":
        return domain.radius - float(np.linalg.norm(z - np.asarray(domain.center)))
    # generic: bisect on containment over a boundary sample set
    zeta = np.exp(2j * np.pi * np.arange(_CHECK_SAMPLES) / _CHECK_SAMPLES)
    lo_s, hi_s = 0.0, 1.0
    while hi_s < 1e6:
        vals = z[None, :] + hi_s * zeta[:, None] * xhat[None, :]
        if not np.all(contains_grid(domain, vals)):
            break
        lo_s = hi_s
        hi_s *= 2.0
    for _ in range(50):
        mid = 0.5 * (lo_s + hi_s)
        vals = z[None, :] + mid * zeta[:, None] * xhat[None, :]
        if np.all(contains_grid(domain, vals)):
            lo_s = mid
        else:
            hi_s = mid
    return max(lo_s, 1e-12)


def _refined_max_excess(domain: Domain, z: np.ndarray, coeffs: np.ndarray) -> float:
    """Max containment excess over the whole boundary circle, refined locally."""
    theta = np.linspace(0.0, 2.0 * np.pi, _CHECK_SAMPLES, endpoint=False)
    zeta = np.exp(1j * theta)
    ex = _boundary_excess(domain, _disc_values(z, coeffs, zeta))
    best = float(np.max(ex))
    if domain.kind == "generic":
        return best  # predicate membership is not smooth; sampled check only
    step = 2.0 * np.pi / _CHECK_SAMPLES

    def g(t: float) -> float:
        return float(_boundary_excess(domain, _disc_values(z, coeffs, np.exp(1j * np.array([t]))))[0])

    # golden-section polish around the top few sampled peaks
    order = np.argsort(ex)[-3:]
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    for idx in order:
        a = theta[idx] - step
        b = theta[idx] + step
        c = b - gr * (b - a)
        d = a + gr * (b - a)
        fc, fd = g(c), g(d)
        for _ in range(40):
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - gr * (b - a)
                fc = g(c)
            else:
                a, c, fc = c, d, fd
                d = a + gr * (b - a)
                fd = g(d)
        best = max(best, fc, fd)
    return best


def _sampled_max_excess(domain: Domain, z: np.ndarray, coeffs: np.ndarray,
                        zeta: np.ndarray) -> float:
    return float(np.max(_boundary_excess(domain, _disc_values(z, coeffs, zeta))))


def _exact_s_for_tail(domain: Domain, z: np.ndarray, xhat: np.ndarray,
                      tail: np.ndarray, s_hint: float, zeta_fine: np.ndarray) -> float:
    """Largest feasible s for a fixed tail (excess is convex in s: bisection).

    Bisection runs against the fine sample grid; a final refined boundary-max
    check plus a convexity-based shrink makes the winner strictly feasible.
    """
    def sampled(s: float) -> float:
        return _sampled_max_excess(domain, z, _coeff_matrix(s, xhat, tail), zeta_fine)

    hi = max(s_hint, 1e-9)
    if sampled(hi) <= -1e-10:
        while sampled(hi * 2.0) <= -1e-10 and hi < 1e9:
            hi *= 2.0
        lo = hi
        hi *= 2.0
    else:
        lo = 0.0
        if sampled(0.0) > -1e-10:
            return 0.0  # tail alone escapes the domain
        while sampled(hi) > -1e-10:
            hi *= 0.5
            if hi < 1e-12:
                return 0.0
        lo = hi
        hi *= 2.0
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if sampled(mid) <= -1e-10:
            lo = mid
        else:
            hi = mid
    s = lo
    coeffs = _coeff_matrix(s, xhat, tail)
    ex = _refined_max_excess(domain, z, coeffs)
    if ex > -1e-12:
        # excess is convex along t*(phi - z); interpolate against the margin at z
        ez = float(_boundary_excess(domain, z[None, :])[0])
        t = (-ez - 1e-12) / (ex - ez) if ex > ez else 0.0
        t = min(max(t, 0.0), 1.0)
        if _refined_max_excess(domain, z, t * coeffs) > -1e-13:
            t *= 1.0 - 1e-9
        s *= t
    return s


def kobayashi_numeric(domain: Domain, z, xi, degree: int = 3, restarts: int = 8,
                      base_seed: int = 0) -> float:
    """Upper bound on the Kobayashi metric via polynomial disc candidates.

    Penalized local descent on disc coefficients (quadratic hinge on 64
    boundary samples, analytic gradient), best of ``restarts`` deterministic
    random initializations (restart r uses seed base_seed + r).  Degrees are
    built up 1..degree with warm starts, so the estimate is non-increasing in
    the degree.  Every candidate is re-checked on a fine boundary grid and
    shrunk to strict feasibility before it may contribute, which keeps the
    returned value a true upper bound on the metric.
    """
    if domain.kind == "full_space":
        raise NotHyperbolic("the full space carries no positive Kobayashi metric")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if not contains(domain, z):
        raise OutsideDomain(f"{z} is not interior to the {domain.kind}")
    xi_norm = float(np.linalg.norm(xi))
    if xi_norm == 0.0:
        raise ValueError("direction xi must be nonzero")
    xhat = xi / xi_norm
    n = domain.ambient_dim
    if degree < 1:
        raise ValueError("degree must be >= 1")

    zeta_pen = np.exp(2j * np.pi * np.arange(_PEN_SAMPLES) / _PEN_SAMPLES)
    zeta_fine = np.exp(2j * np.pi * np.arange(_CHECK_SAMPLES) / _CHECK_SAMPLES)
    s_lin = _linear_feasible_s(domain, z, xhat)
    scale = max(s_lin, 1e-6)
    smooth = domain.kind in ("unit_disc", "polydisc", "ball")

    best_s = _exact_s_for_tail(domain, z, xhat, np.zeros((0, n), complex), s_lin, zeta_fine) \
        if not smooth else s_lin  # the straight disc is always a candidate
    warm_tail = np.zeros((0, n), dtype=complex)
    for d in range(2, degree + 1):  # degree 1 is exactly the straight disc
        pad = np.zeros((d - 1, n), dtype=complex)
        pad[:warm_tail.shape[0]] = warm_tail
        starts = [_pack(best_s, pad.copy())]
        for r in range(restarts):
            rng = np.random.default_rng(base_seed + r)
            tail = (rng.standard_normal((d - 1, n)) + 1j * rng.standard_normal((d - 1, n))) \
                * 0.2 * scale
            starts.append(_pack(s_lin * (0.8 + 0.4 * rng.random()), tail))
        d_best_s, d_best_tail = best_s, pad
        powers = zeta_pen[:, None] ** np.arange(2, d + 1)[None, :]
        if smooth:
            # random restarts get a cheap vectorized rough descent; the warm
            # start and the best rough candidate get the quasi-Newton polish
            # (the problem is convex, so one polished start finds the optimum)
            S0 = np.array([x[0] for x in starts[1:]])
            T0 = np.stack([_unpack(x, n, d)[1] for x in starts[1:]])
            results = []
            best_rough = None
            if S0.size:
                S, T, score = _batched_descend(domain, z, xhat, S0, T0, powers, zeta_pen, scale)
                results = [(S[r], np.ascontiguousarray(T[r])) for r in range(S.size)]
                best_rough = results[int(np.argmin(score))]
            polish = [(starts[0][0], _unpack(starts[0], n, d)[1])]
            if best_rough is not None:
                polish.append(best_rough)
            dim = 1 + 2 * n * (d - 1)
            for s0, t0 in polish:
                x = _pack(float(s0), np.ascontiguousarray(t0))
                for weight, iters in ((1e3 / scale, 60), (1e5 / scale, 120 + 12 * dim)):
                    res = minimize(_penalized_single, x,
                                   args=(domain, z, xhat, n, d, powers, zeta_pen, weight),
                                   jac=True, method="L-BFGS-B",
                                   options={"maxiter": iters, "ftol": 1e-15, "gtol": 1e-13})
                    x = res.x
                s_opt, tail_opt = _unpack(x, n, d)
                results.append((abs(s_opt), tail_opt))
        else:
            results = []
            for x0 in starts:
                x = _descend_powell(domain, z, xhat, x0, n, d, zeta_pen, scale)
                s_opt, tail_opt = _unpack(x, n, d)
                results.append((abs(s_opt), tail_opt))
        for s_opt, tail_opt in results:
            if abs(s_opt) < 0.97 * d_best_s:
                continue  # descent landed clearly below the incumbent
            s_exact = _exact_s_for_tail(domain, z, xhat, tail_opt, abs(s_opt), zeta_fine)
            if s_exact <= 0.0:
                continue  # infeasible optimum, discarded
            if s_exact > d_best_s:
                d_best_s, d_best_tail = s_exact, tail_opt.copy()
        if d_best_s > best_s:
            best_s = d_best_s
        warm_tail = d_best_tail
    return xi_norm / best_s


def _descend_powell(domain: Domain, z, xhat, x0, n, d, zeta, scale) -> np.ndarray:
    """Derivative-free fallback for generic domains (predicate is non-smooth)."""

    def penalized(x: np.ndarray) -> float:
        s, tail = _unpack(x, n, d)
        vals = _disc_values(z, _coeff_matrix(s, xhat, tail), zeta)
        hinge = np.maximum(0.0, _boundary_excess(domain, vals))
        return -abs(x[0]) + (1e4 / scale) * float(np.dot(hinge, hinge))

    res = minimize(penalized, x0, method="Powell",
                   options={"maxiter": 30 * len(x0), "xtol": 1e-9, "ftol": 1e-10})
    return res.x


def _batched_grad(domain: Domain, z, xhat, S, T, powers, zeta, weight):
    """Penalty objective and gradient, vectorized over the restart axis.

    S: (R,) real coefficients of the xi direction; T: (R, d-1, n) complex tail.
    Returns (f (R,), dS (R,), dT (R, d-1, n) complex Wirtinger-conjugate grad).
    """
    lead = zeta[:, None] * xhat[None, :]                    # (B, n)
    vals = z[None, None, :] + S[:, None, None] * lead[None] \
        + np.einsum("bm,rmc->rbc", powers, T)
    if domain.kind == "unit_disc":
        w = vals
        r = np.ones(1)
    elif domain.kind == "polydisc":
        w = vals - np.asarray(domain.center)
        r = np.asarray(domain.radii)
    else:  # ball
        w = vals - np.asarray(domain.center)
    if domain.kind == "ball":
        norm = np.linalg.norm(w, axis=2)
        excess = (norm - domain.radius) / domain.radius
        norm_safe = np.where(norm == 0.0, 1.0, norm)
        dir_full = np.conj(w) / norm_safe[..., None] / domain.radius
    else:
        aw = np.abs(w)
        per = (aw - r) / r
        amax = np.argmax(per, axis=2)
        excess = np.take_along_axis(per, amax[..., None], axis=2)[..., 0]
        aw_sel = np.take_along_axis(aw, amax[..., None], axis=2)[..., 0]
        aw_sel = np.where(aw_sel == 0.0, 1.0, aw_sel)
        w_sel = np.take_along_axis(w, amax[..., None], axis=2)[..., 0]
        dir_full = np.zeros_like(w)
        np.put_along_axis(dir_full, amax[..., None],
                          (np.conj(w_sel) / aw_sel / r[amax])[..., None], axis=2)
    hinge = np.maximum(0.0, excess)                         # (R, B)
    f = -np.abs(S) + weight * np.sum(hinge * hinge, axis=1)
    coef = 2.0 * weight * hinge                             # (R, B)
    dS = -np.sign(S) + np.sum(coef * np.real(np.einsum("rbc,bc->rb", dir_full, lead)), axis=1)
    dT = np.einsum("bm,rbc->rmc", powers, coef[..., None] * dir_full)
    return f, dS, dT


def _batched_descend(domain: Domain, z, xhat, S0, T0, powers, zeta, scale):
    """Adam-style penalized rough descent run on all restarts simultaneously.

    Positions every restart near the optimum cheaply; the survivors get a
    quasi-Newton polish.  Returns (|S|, T, final objective per restart).
    """
    S = S0.astype(float).copy()
    T = T0.astype(complex).copy()
    mS = np.zeros_like(S)
    vS = np.zeros_like(S)
    mT = np.zeros_like(T)
    vT = np.zeros(T.shape)
    b1, b2, eps = 0.9, 0.999, 1e-12
    lr0 = 0.03 * scale
    weight = 1e3 / scale
    f = np.zeros_like(S)
    steps = 180
    for step in range(steps):
        lr = lr0 * (0.5 ** (step // 60))
        f, dS, dT = _batched_grad(domain, z, xhat, S, T, powers, zeta, weight)
        mS = b1 * mS + (1 - b1) * dS
        vS = b2 * vS + (1 - b2) * dS * dS
        S = S - lr * mS / (np.sqrt(vS) + eps)
        if T.size:
            # complex Adam: second moment on |grad|^2, update along conj grad
            mT = b1 * mT + (1 - b1) * np.conj(dT)
            vT = b2 * vT + (1 - b2) * np.abs(dT) ** 2
            T = T - lr * mT / (np.sqrt(vT) + eps)
    return np.abs(S), T, f


def _penalized_single(x, domain: Domain, z, xhat, n, d, powers, zeta, weight):
    """Scalar penalty objective + gradient for one coefficient vector."""
    s, tail = _unpack(x, n, d)
    f, dS, dT = _batched_grad(domain, z, xhat, np.array([s]), tail[None], powers, zeta, weight)
    grad = np.empty(x.size)
    grad[0] = dS[0]
    if d > 1:
        g = dT[0]  # df = Re(g . da): d/dRe = Re g, d/dIm = -Im g
        grad[1:] = np.stack([g.real, -g.imag], axis=-1).reshape(-1)
    return float(f[0]), grad
