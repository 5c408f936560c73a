"""Hermitian length and distance on the target manifold (C^k or the Riemann sphere).

The sphere uses the Fubini-Study normalization |v|/(1+|p|^2); only ratios and
divergence matter downstream, so the overall constant is fixed once here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

__all__ = ["TargetMetric", "euclidean", "riemann_sphere", "length", "distance",
           "distance_grid", "metric_from_name"]


@dataclass(frozen=True)
class TargetMetric:
    kind: str  # "euclidean" | "sphere"
    dim: int   # target dimension k (sphere: always 1)

    def name(self) -> str:
        return "sphere" if self.kind == "sphere" else f"euclidean:{self.dim}"


def euclidean(k: int) -> TargetMetric:
    if k < 1:
        raise DimensionMismatch("target dimension must be >= 1")
    return TargetMetric("euclidean", k)


def riemann_sphere() -> TargetMetric:
    return TargetMetric("sphere", 1)


def metric_from_name(name: str) -> TargetMetric:
    """Parse "euclidean:k" or "sphere"."""
    name = name.strip().lower()
    if name == "sphere":
        return riemann_sphere()
    if name.startswith("euclidean"):
        _, _, k = name.partition(":")
        return euclidean(int(k) if k else 1)
    raise ValueError(f"unknown target metric {name!r}")


def _as_vec(p, k: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(p, dtype=complex))
    if v.shape != (k,):
        raise DimensionMismatch(f"expected a length-{k} vector, got shape {v.shape}")
    return v


def length(metric: TargetMetric, p, v) -> float:
    """Length of tangent vector v at point p.

    Euclidean: ||v||_2 (independent of p).  Sphere: |v|/(1+|p|^2), with the
    point at infinity handled as the chart limit (length 0 for finite v).
    """
    if metric.kind == "euclidean":
        vv = _as_vec(v, metric.dim)
        return float(np.linalg.norm(vv))
    pv = complex(np.atleast_1d(np.asarray(p, dtype=complex))[0])
    vv = complex(np.atleast_1d(np.asarray(v, dtype=complex))[0])
    if math.isinf(abs(pv)):
        return 0.0
    return abs(vv) / (1.0 + abs(pv) ** 2)


def distance(metric: TargetMetric, p, q) -> float:
    """Euclidean: ||p-q||_2.  Sphere: chordal distance, with infinity admitted."""
    if metric.kind == "euclidean":
        return float(np.linalg.norm(_as_vec(p, metric.dim) - _as_vec(q, metric.dim)))
    pv = complex(np.atleast_1d(np.asarray(p, dtype=complex))[0])
    qv = complex(np.atleast_1d(np.asarray(q, dtype=complex))[0])
    pinf, qinf = math.isinf(abs(pv)), math.isinf(abs(qv))
    if pinf and qinf:
        return 0.0
    if pinf:
        return 1.0 / math.sqrt(1.0 + abs(qv) ** 2)
    if qinf:
        return 1.0 / math.sqrt(1.0 + abs(pv) ** 2)
    return abs(pv - qv) / math.sqrt((1.0 + abs(pv) ** 2) * (1.0 + abs(qv) ** 2))


def distance_grid(metric: TargetMetric, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Vectorized distance between matched sample arrays of shape (m, k)."""
    P = np.asarray(P, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    if P.shape != Q.shape:
        raise DimensionMismatch(f"sample shapes differ: {P.shape} vs {Q.shape}")
    if metric.kind == "euclidean":
        return np.linalg.norm(P - Q, axis=-1)
    p = P[..., 0]
    q = Q[..., 0]
    ap, aq = np.abs(p), np.abs(q)
    out = np.empty(p.shape, dtype=float)
    pinf = np.isinf(ap)
    qinf = np.isinf(aq)
    both = pinf & qinf
    onlyp = pinf & ~qinf
    onlyq = qinf & ~pinf
    fin = ~(pinf | qinf)
    out[both] = 0.0
    out[onlyp] = 1.0 / np.sqrt(1.0 + aq[onlyp] ** 2)
    out[onlyq] = 1.0 / np.sqrt(1.0 + ap[onlyq] ** 2)
    out[fin] = np.abs(p[fin] - q[fin]) / np.sqrt(
        (1.0 + ap[fin] ** 2) * (1.0 + aq[fin] ** 2))
    return out
