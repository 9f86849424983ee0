"""Outward boundary vector fields and the domain-enlarging flow they induce.

The field is unit-capped, vanishes deep inside the domain and outside a
boundary collar, and points strictly outward at the boundary.  Near a
corner the direction blends toward the corner's outward bisector, which has
positive inner product with both face normals whenever the opening is below
pi.  Integrating the field pushes the domain outward at a rate comparable
to t from both sides, which `verify_sandwich` measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import geometry as geo
from .errors import FieldConstructionError

DEFAULT_DELTA = 0.05
RK4_STEPS = 64


def _smoothstep(t):
    """Quintic ramp: 0 below 0, 1 above 1, C2 in between."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


@dataclass
class OutwardField:
    polygon: geo.CurvilinearPolygon = field(repr=False)
    width: float                    # collar width outside/around the boundary
    inner: float                    # cutoff depth inside the domain
    delta: float = DEFAULT_DELTA    # largest admissible flow time
    min_normal_product: float = field(default=0.0)
    _corners: List = field(default_factory=list, repr=False)

    def __call__(self, pts):
        """Field values, vectorized over points of shape (n, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ids, ss, dist = geo.closest_boundary_batch(self.polygon, pts)
        d = self._signed(pts, ids, ss, dist)
        eta = self._bump(d)
        out = np.zeros_like(pts)
        live = eta > 0.0
        if live.any():
            v = self._direction(pts[live], ids[live], ss[live], d[live])
            out[live] = eta[live, None] * v
        return out

    def _signed(self, pts, ids, ss, dist):
        """Signed distance from already-computed closest points.

        The side test against the local outward normal is exact within the
        collar; far outside it the bump vanishes either way.
        """
        sign = np.ones(len(pts))
        for arc in self.polygon.arcs:
            m = ids == arc.id
            if not m.any():
                continue
            n_arc = arc.outward_normal(ss[m])
            side = ((pts[m] - arc.point(ss[m])) * n_arc).sum(axis=1)
            sign[m] = np.where(side < 0.0, -1.0, 1.0)
        return sign * dist

    def _bump(self, d):
        # 1 near the boundary, ramping to 0 at depth `inner` inside and at
        # distance `width` outside
        up = _smoothstep((d + self.inner) / (0.5 * self.inner))
        down = 1.0 - _smoothstep((d - 0.5 * self.width) / (0.5 * self.width))
        return np.minimum(up, down)

    def _direction(self, pts, ids, ss, d):
        v = np.zeros_like(pts)
        for arc in self.polygon.arcs:
            m = ids == arc.id
            if not m.any():
                continue
            cp = arc.point(ss[m])
            diff = pts[m] - cp
            nrm = np.linalg.norm(diff, axis=1)
            n_arc = arc.outward_normal(ss[m])
            sign = np.where(d[m] >= 0.0, 1.0, -1.0)
            # gradient of the signed distance; fall back to the arc normal
            # when the point sits on the boundary
            grad = np.where(nrm[:, None] > 1e-13,
                            sign[:, None] * diff / np.maximum(nrm, 1e-300)[:, None],
                            n_arc)
            v[m] = grad
        # blend toward corner bisectors inside each corner ball
        for cpt, w_dir, radius in self._corners:
            rel = pts - cpt
            rr = np.linalg.norm(rel, axis=1)
            chi = 1.0 - _smoothstep((rr - 0.5 * radius) / (0.5 * radius))
            v = (1.0 - chi[:, None]) * v + chi[:, None] * w_dir
        nv = np.linalg.norm(v, axis=1)
        return v / np.maximum(nv, 1e-300)[:, None]


def build_field(polygon: geo.CurvilinearPolygon,
                width: Optional[float] = None,
                inner: Optional[float] = None,
                delta: float = DEFAULT_DELTA) -> OutwardField:
    """Construct the outward collar field; defaults scale with the inradius."""
    if width is None or inner is None:
        inr = _inradius_estimate(polygon)
        width = 0.2 * inr if width is None else width
        inner = 0.1 * inr if inner is None else inner
    if not 0.0 < inner < width:
        raise FieldConstructionError("need 0 < inner < width")
    corners = []
    for j in polygon.corners:
        if j.opening >= math.pi - 1e-6:
            raise FieldConstructionError(
                "corner opens by %.6f rad; outwardness cannot be uniform" % j.opening)
        na = polygon.arc_by_id(j.prev_arc).outward_normal(1.0)
        nb = polygon.arc_by_id(j.next_arc).outward_normal(0.0)
        w = na + nb
        corners.append((j.point, w / np.linalg.norm(w), 2.4 * width))
    if len(polygon.corners) >= 2:
        pts = np.stack([j.point for j in polygon.corners])
        dmin = min(np.linalg.norm(pts[i] - pts[k])
                   for i in range(len(pts)) for k in range(i + 1, len(pts)))
        if width > 0.25 * dmin:
            raise FieldConstructionError(
                "collar width %.3f exceeds a quarter of the corner spacing" % width)
    fld = OutwardField(polygon=polygon, width=width, inner=inner, delta=delta,
                       _corners=corners)
    fld.min_normal_product = _min_boundary_product(fld)
    return fld


def _inradius_estimate(polygon, n=64):
    (xmin, ymin), (xmax, ymax) = polygon.bbox
    gx, gy = np.meshgrid(np.linspace(xmin, xmax, n), np.linspace(ymin, ymax, n))
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    d = geo.signed_distance_batch(polygon, pts)
    return float(-d.min())


def _min_boundary_product(field: OutwardField, n: int = 512) -> float:
    """Smallest inner product of the field with the outward normal over
    smooth boundary samples."""
    poly = field.polygon
    pts, ids, ss = poly.point_at_arclength(
        (np.arange(n) + 0.5) * poly.total_length / n)
    x = field(pts)
    worst = np.inf
    for arc in poly.arcs:
        m = ids == arc.id
        if not m.any():
            continue
        nrm = arc.outward_normal(ss[m])
        worst = min(worst, float((x[m] * nrm).sum(axis=1).min()))
    return worst


# ----------------------------------------------------------------------
# the flow
# ----------------------------------------------------------------------

def flow(field: OutwardField, t: float, x0, steps: int = RK4_STEPS) -> np.ndarray:
    """Classical RK4 integration of the field from x0 over time t."""
    x = np.atleast_2d(np.asarray(x0, dtype=float)).copy()
    if not 0.0 <= t <= field.delta + 1e-12:
        raise ValueError("flow time %g outside [0, %g]" % (t, field.delta))
    if t == 0.0:
        return x if np.asarray(x0).ndim > 1 else x[0]
    dt = t / steps
    for _ in range(steps):
        k1 = field(x)
        k2 = field(x + 0.5 * dt * k1)
        k3 = field(x + 0.5 * dt * k2)
        k4 = field(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x if np.asarray(x0).ndim > 1 else x[0]


@dataclass
class FlowReport:
    rows: List[dict]
    lam: float
    min_jacobian: float


def verify_sandwich(field: OutwardField, ts: Sequence[float],
                    n_samples: int = 512) -> FlowReport:
    """Track how far boundary samples escape under the flow.

    For each time t the report row holds the min/max escape distance over
    the samples; `lam` is the worst two-sided distance-to-time ratio and
    `min_jacobian` the smallest central-difference Jacobian determinant.
    """
    poly = field.polygon
    y, _, _ = poly.point_at_arclength(
        (np.arange(n_samples) + 0.5) * poly.total_length / n_samples)
    rows = []
    lam = np.inf
    min_det = np.inf
    for t in ts:
        if not 0.0 < t <= field.delta + 1e-12:
            raise ValueError("sandwich times must lie in (0, delta]")
        yt = flow(field, float(t), y)
        inside = geo.contains_batch(poly, yt)
        _, _, dist = geo.closest_boundary_batch(poly, yt)
        dist = np.where(inside, 0.0, dist)
        ratios = np.minimum(dist / t, np.where(dist > 0, t / dist, 0.0))
        lam = min(lam, float(ratios.min()))
        det = _jacobian_dets(field, float(t), y)
        min_det = min(min_det, float(det.min()))
        rows.append({"t": float(t), "min_dist": float(dist.min()),
                     "max_dist": float(dist.max()),
                     "min_jacobian": float(det.min())})
    return FlowReport(rows=rows, lam=lam, min_jacobian=min_det)


def _jacobian_dets(field: OutwardField, t: float, pts: np.ndarray,
                   step: float = 1e-6) -> np.ndarray:
    n = len(pts)
    probes = np.concatenate([
        pts + [step, 0.0], pts - [step, 0.0],
        pts + [0.0, step], pts - [0.0, step]])
    imgs = flow(field, t, probes)
    dx = (imgs[0:n] - imgs[n:2 * n]) / (2.0 * step)
    dy = (imgs[2 * n:3 * n] - imgs[3 * n:4 * n]) / (2.0 * step)
    return dx[:, 0] * dy[:, 1] - dx[:, 1] * dy[:, 0]


def semigroup_defect(field: OutwardField, t: float, pts) -> float:
    """Max norm of flowing by t versus twice by t/2."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    once = flow(field, t, pts)
    twice = flow(field, 0.5 * t, flow(field, 0.5 * t, pts))
    return float(np.linalg.norm(once - twice, axis=1).max())


def collar_samples(field: OutwardField, n: int, seed: int = 42) -> np.ndarray:
    """Random points in the boundary collar where the field is active."""
    rng = np.random.default_rng(seed)
    poly = field.polygon
    pts, ids, ss = poly.point_at_arclength(rng.uniform(0, poly.total_length, n))
    offsets = rng.uniform(-0.5 * field.inner, 0.5 * field.width, n)
    normals = np.empty_like(pts)
    for arc in poly.arcs:
        m = ids == arc.id
        if m.any():
            normals[m] = arc.outward_normal(ss[m])
    return pts + offsets[:, None] * normals
