"""Curvilinear polygonal domains built from parametric boundary arcs.

A domain is an ordered, positively oriented loop of smooth arcs; junctions
where the tangent turns are corners and must open by less than pi.  All
evaluation routines are vectorized over numpy arrays of parameters/points.
Objects are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import GeometryError

_CLOSURE_TOL = 1e-12
_CORNER_FLAT_TOL = 1e-9
_CORNER_MAX_OPENING = math.pi - 1e-6
_ON_BOUNDARY_TOL = 1e-12


class BoundaryArc:
    """One smooth boundary piece, parametrized over [0, 1].

    `point`, `tangent` and `second` accept scalars or arrays of parameters
    and return arrays of shape (..., 2).
    """

    def __init__(self, arc_id: int, fn, d1, d2, kind: str = "custom", params=None,
                 fused=None):
        self.id = int(arc_id)
        self._fn = fn
        self._d1 = d1
        self._d2 = d2
        self._fused = fused
        self.kind = kind
        self.params = params
        self.start = np.asarray(fn(0.0), dtype=float)
        self.end = np.asarray(fn(1.0), dtype=float)
        self.closed = bool(np.linalg.norm(self.start - self.end) <= _CLOSURE_TOL)
        self._length_table = None

    def point(self, s):
        s = np.asarray(s, dtype=float)
        return np.asarray(self._fn(s), dtype=float)

    def tangent(self, s):
        s = np.asarray(s, dtype=float)
        return np.asarray(self._d1(s), dtype=float)

    def second(self, s):
        s = np.asarray(s, dtype=float)
        return np.asarray(self._d2(s), dtype=float)

    def eval3(self, s):
        """Point, tangent and second derivative in one call."""
        s = np.asarray(s, dtype=float)
        if self._fused is not None:
            return self._fused(s)
        return self.point(s), self.tangent(s), self.second(s)

    def outward_normal(self, s):
        """Unit normal pointing out of the domain (boundary runs CCW)."""
        t = self.tangent(s)
        n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    # -- arc length ---------------------------------------------------

    def _table(self):
        if self._length_table is None:
            ngrid = 1024
            sg = np.linspace(0.0, 1.0, ngrid + 1)
            # 16-point Gauss per subdivision of the parameter interval
            gx, gw = np.polynomial.legendre.leggauss(16)
            mid = 0.5 * (sg[:-1] + sg[1:])
            half = 0.5 * (sg[1:] - sg[:-1])
            pts = mid[:, None] + half[:, None] * gx[None, :]
            speed = np.linalg.norm(self.tangent(pts), axis=-1)
            seg = (speed * gw[None, :]).sum(axis=1) * half
            cum = np.concatenate([[0.0], np.cumsum(seg)])
            self._length_table = (sg, cum)
        return self._length_table

    @property
    def length(self) -> float:
        return float(self._table()[1][-1])

    def arclength_at(self, s):
        sg, cum = self._table()
        return np.interp(np.asarray(s, dtype=float), sg, cum)

    def param_at_arclength(self, ell):
        sg, cum = self._table()
        ell = np.asarray(ell, dtype=float)
        s = np.interp(ell, cum, sg)
        for _ in range(4):
            speed = np.linalg.norm(self.tangent(s), axis=-1)
            s = np.clip(s - (self.arclength_at(s) - ell) / np.maximum(speed, 1e-300), 0.0, 1.0)
        return s


def circle_arc(arc_id: int, center, radius: float, theta0: float, theta1: float) -> BoundaryArc:
    c = np.asarray(center, dtype=float)
    dth = theta1 - theta0

    def fn(s):
        th = theta0 + dth * np.asarray(s, dtype=float)
        return np.stack([c[0] + radius * np.cos(th), c[1] + radius * np.sin(th)], axis=-1)

    def d1(s):
        th = theta0 + dth * np.asarray(s, dtype=float)
        return radius * dth * np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def d2(s):
        th = theta0 + dth * np.asarray(s, dtype=float)
        return -radius * dth * dth * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def fused(s):
        th = theta0 + dth * np.asarray(s, dtype=float)
        ct, st = np.cos(th), np.sin(th)
        p = np.stack([c[0] + radius * ct, c[1] + radius * st], axis=-1)
        t = radius * dth * np.stack([-st, ct], axis=-1)
        h = -radius * dth * dth * np.stack([ct, st], axis=-1)
        return p, t, h

    return BoundaryArc(arc_id, fn, d1, d2, kind="circle",
                       params=(c[0], c[1], radius, theta0, theta1), fused=fused)


def polar_arc(arc_id: int, coeffs: Sequence[float], theta0: float, theta1: float) -> BoundaryArc:
    """Arc of the polar graph rho(theta) = c0 + sum_k ck cos(k theta)."""
    coeffs = np.asarray(coeffs, dtype=float)
    ks = np.arange(len(coeffs), dtype=float)
    dth = theta1 - theta0

    def rho_all(th):
        ang = th[..., None] * ks
        r = (coeffs * np.cos(ang)).sum(axis=-1)
        r1 = (-coeffs * ks * np.sin(ang)).sum(axis=-1)
        r2 = (-coeffs * ks * ks * np.cos(ang)).sum(axis=-1)
        return r, r1, r2

    def fn(s):
        th = theta0 + dth * np.asarray(s, dtype=float)
        r, _, _ = rho_all(th)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    def d1(s):
        th = theta0 + dth * np.asarray(s, dtype=float)
        r, r1, _ = rho_all(th)
        gx = r1 * np.cos(th) - r * np.sin(th)
        gy = r1 * np.sin(th) + r * np.cos(th)
        return dth * np.stack([gx, gy], axis=-1)

    def d2(s):
        th = theta0 + dth * np.asarray(s, dtype=float)
        r, r1, r2 = rho_all(th)
        gx = (r2 - r) * np.cos(th) - 2.0 * r1 * np.sin(th)
        gy = (r2 - r) * np.sin(th) + 2.0 * r1 * np.cos(th)
        return dth * dth * np.stack([gx, gy], axis=-1)

    def fused(s):
        th = theta0 + dth * np.asarray(s, dtype=float)
        ct, st = np.cos(th), np.sin(th)
        r, r1, r2 = rho_all(th)
        p = np.stack([r * ct, r * st], axis=-1)
        t = dth * np.stack([r1 * ct - r * st, r1 * st + r * ct], axis=-1)
        h = dth * dth * np.stack([(r2 - r) * ct - 2.0 * r1 * st,
                                  (r2 - r) * st + 2.0 * r1 * ct], axis=-1)
        return p, t, h

    return BoundaryArc(arc_id, fn, d1, d2, kind="polar",
                       params=(theta0, theta1, tuple(coeffs)), fused=fused)


def line_arc(arc_id: int, p0, p1) -> BoundaryArc:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d = p1 - p0

    def fn(s):
        s = np.asarray(s, dtype=float)
        return p0 + s[..., None] * d

    def d1(s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(d, s.shape + (2,)).copy()

    def d2(s):
        s = np.asarray(s, dtype=float)
        return np.zeros(s.shape + (2,))

    return BoundaryArc(arc_id, fn, d1, d2, kind="line",
                       params=(p0[0], p0[1], p1[0], p1[1]))


@dataclass(frozen=True)
class Junction:
    """Meeting point of arc `prev_arc` (at s=1) and `next_arc` (at s=0)."""
    point: np.ndarray
    opening: float          # interior opening angle in radians
    is_corner: bool
    prev_arc: int
    next_arc: int


class CurvilinearPolygon:
    """Closed positively oriented loop of smooth arcs with convex corners."""

    def __init__(self, arcs: Sequence[BoundaryArc]):
        if not arcs:
            raise GeometryError("polygon needs at least one arc")
        self.arcs = list(arcs)
        self._check_regularity()
        self.junctions = self._build_junctions()
        self._polyline = None
        self._polyline_tree = None
        self._polyline_chord = None
        pl = self._parity_polyline()
        if _signed_area(pl) <= 0.0:
            raise GeometryError("boundary loop is not positively oriented")
        self.bbox = np.array([pl.min(axis=0), pl.max(axis=0)])
        self.diameter = float(np.linalg.norm(self.bbox[1] - self.bbox[0]))
        self._cum_lengths = np.concatenate(
            [[0.0], np.cumsum([a.length for a in self.arcs])])

    # -- construction checks -----------------------------------------

    def _check_regularity(self):
        s = np.linspace(0.0, 1.0, 257)
        for arc in self.arcs:
            speed = np.linalg.norm(arc.tangent(s), axis=-1)
            if speed.min() <= 0.0:
                raise GeometryError("arc %d has a vanishing tangent" % arc.id)
            if (np.linalg.norm(arc.point(0.0) - arc.start) > _CLOSURE_TOL
                    or np.linalg.norm(arc.point(1.0) - arc.end) > _CLOSURE_TOL):
                raise GeometryError("arc %d endpoints inconsistent" % arc.id)

    def _build_junctions(self):
        juncs = []
        n = len(self.arcs)
        for i, arc in enumerate(self.arcs):
            nxt = self.arcs[(i + 1) % n]
            gap = np.linalg.norm(arc.end - nxt.start)
            if gap > _CLOSURE_TOL:
                raise GeometryError(
                    "arc %d ends %.3e away from arc %d start" % (arc.id, gap, nxt.id))
            ta = arc.tangent(1.0)
            tb = nxt.tangent(0.0)
            turn = math.atan2(ta[0] * tb[1] - ta[1] * tb[0], float(ta @ tb))
            opening = math.pi - turn
            is_corner = abs(opening - math.pi) > _CORNER_FLAT_TOL
            if is_corner and not (0.0 < opening < _CORNER_MAX_OPENING):
                raise GeometryError(
                    "corner between arcs %d/%d opens by %.6f rad (must be < pi)"
                    % (arc.id, nxt.id, opening))
            juncs.append(Junction(point=nxt.start.copy(), opening=opening,
                                  is_corner=is_corner, prev_arc=arc.id,
                                  next_arc=nxt.id))
        return juncs

    @property
    def corners(self):
        return [j for j in self.junctions if j.is_corner]

    @property
    def total_length(self) -> float:
        return float(self._cum_lengths[-1])

    def arc_by_id(self, arc_id: int) -> BoundaryArc:
        for a in self.arcs:
            if a.id == arc_id:
                return a
        raise KeyError(arc_id)

    # -- dense polyline for parity tests ------------------------------

    def _parity_polyline(self):
        # Parity against the polyline is only trusted away from the boundary;
        # the band within one chord length of it gets an exact closest-point
        # side test instead, so a moderate chord deviation suffices here.
        if self._polyline is None:
            pieces = []
            scale = 1.0
            # first pass with a crude scale, then refine to the final deviation
            for _ in range(2):
                pieces = []
                for arc in self.arcs:
                    pieces.append(_flatten_arc(arc, 1e-4 * scale))
                poly = np.concatenate(pieces, axis=0)
                scale = float(np.linalg.norm(poly.max(axis=0) - poly.min(axis=0)))
            self._polyline = np.concatenate(pieces, axis=0)
            seg = np.diff(np.vstack([self._polyline, self._polyline[:1]]), axis=0)
            self._polyline_chord = float(np.linalg.norm(seg, axis=1).max())
            self._polyline_tree = cKDTree(self._polyline)
        return self._polyline

    # -- global arc-length coordinate ---------------------------------

    def boundary_samples(self, n: int):
        """n points equally spaced in arc length along the whole boundary.

        Returns (points, arc_ids, params).
        """
        ell = np.linspace(0.0, self.total_length, n, endpoint=False)
        return self.point_at_arclength(ell)

    def point_at_arclength(self, ell):
        ell = np.mod(np.asarray(ell, dtype=float), self.total_length)
        idx = np.clip(np.searchsorted(self._cum_lengths, ell, side="right") - 1,
                      0, len(self.arcs) - 1)
        pts = np.empty(ell.shape + (2,))
        ids = np.empty(ell.shape, dtype=int)
        params = np.empty(ell.shape)
        for i, arc in enumerate(self.arcs):
            m = idx == i
            if not m.any():
                continue
            s = arc.param_at_arclength(ell[m] - self._cum_lengths[i])
            pts[m] = arc.point(s)
            ids[m] = arc.id
            params[m] = s
        return pts, ids, params


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def _flatten_arc(arc: BoundaryArc, max_dev: float) -> np.ndarray:
    """Adaptive polyline of one arc with chord deviation below max_dev.

    Returns the samples excluding the final endpoint (loops concatenate).
    """
    s = np.linspace(0.0, 1.0, 17)
    for _ in range(24):
        mid = 0.5 * (s[:-1] + s[1:])
        p = arc.point(s)
        pm = arc.point(mid)
        dev = np.linalg.norm(pm - 0.5 * (p[:-1] + p[1:]), axis=-1)
        bad = dev > max_dev
        if not bad.any():
            break
        s = np.sort(np.concatenate([s, mid[bad]]))
    return arc.point(s[:-1])


# ----------------------------------------------------------------------
# geometric queries
# ----------------------------------------------------------------------

def arc_point(arc: BoundaryArc, s) -> np.ndarray:
    """Evaluate the arc parametrization; parameters must lie in [0, 1]."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise GeometryError("arc parameter outside [0, 1]")
    return arc.point(s)


def closest_boundary_batch(polygon: CurvilinearPolygon, pts):
    """Closest boundary point for each query point.

    Returns (arc_ids, params, distances).  Ties between arcs (within 1e-12)
    resolve to the lower arc id; ties along an arc to the smallest parameter.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = pts.shape[0]
    best_d = np.full(n, np.inf)
    best_s = np.zeros(n)
    best_id = np.zeros(n, dtype=int)
    grid = np.linspace(0.0, 1.0, 65)
    for arc in sorted(polygon.arcs, key=lambda a: a.id):
        gp = arc.point(grid)                       # (65, 2)
        d2 = ((pts[:, None, :] - gp[None, :, :]) ** 2).sum(axis=-1)
        dmin = d2.min(axis=1)
        # ties within 1e-12 in distance resolve to the smallest parameter
        thresh = dmin + 2e-12 * np.sqrt(dmin) + 1e-24
        k = (d2 <= thresh[:, None]).argmax(axis=1)
        s = grid[k]
        if arc.closed:
            # the parametrization wraps; let Newton cross the seam
            lo = s - 1.5 / 64.0
            hi = s + 1.5 / 64.0
        else:
            lo = np.maximum(s - 1.5 / 64.0, 0.0)
            hi = np.minimum(s + 1.5 / 64.0, 1.0)
        for _ in range(12):
            g, t, h = arc.eval3(s)
            r = pts - g
            d1 = -2.0 * (r * t).sum(axis=1)
            d2d = 2.0 * (t * t).sum(axis=1) - 2.0 * (r * h).sum(axis=1)
            scale = (t * t).sum(axis=1)
            ok = d2d > 1e-9 * scale     # skip flat/degenerate stationary points
            step = np.where(ok, -d1 / np.where(ok, d2d, 1.0), 0.0)
            s = np.clip(s + np.clip(step, -0.05, 0.05), lo, hi)
        if arc.closed:
            s = np.mod(s, 1.0)
        d = np.linalg.norm(pts - arc.point(s), axis=1)
        take = d < best_d - 1e-12
        best_d[take] = d[take]
        best_s[take] = s[take]
        best_id[take] = arc.id
    return best_id, best_s, best_d


def closest_boundary(polygon: CurvilinearPolygon, p):
    """Scalar version of closest_boundary_batch: (arc_id, s, distance)."""
    ids, ss, ds = closest_boundary_batch(polygon, np.asarray(p, dtype=float)[None, :])
    return int(ids[0]), float(ss[0]), float(ds[0])


def contains_batch(polygon: CurvilinearPolygon, pts) -> np.ndarray:
    """True for points strictly inside the open domain.

    Points farther from the boundary than the parity polyline's chord length
    are classified by even-odd ray crossing; points inside that band get an
    exact closest-point side test (corners use the two-face wedge test), and
    points within 1e-12 of the boundary count as outside.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    poly = polygon._parity_polyline()
    inside = _ray_parity(pts, poly)
    band = polygon._polyline_chord * 1.5 + 1e-12
    dv, _ = polygon._polyline_tree.query(pts, k=1)
    near = dv <= band
    if near.any():
        inside[near] = _near_boundary_inside(polygon, pts[near])
    return inside


def contains(polygon: CurvilinearPolygon, p) -> bool:
    return bool(contains_batch(polygon, np.asarray(p, dtype=float)[None, :])[0])


def signed_distance_batch(polygon: CurvilinearPolygon, pts) -> np.ndarray:
    """Distance to the boundary, negative inside the domain."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    _, _, d = closest_boundary_batch(polygon, pts)
    sign = np.where(contains_batch(polygon, pts), -1.0, 1.0)
    return sign * d


def _ray_parity(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    a = poly
    b = np.roll(poly, -1, axis=0)
    dy = b[:, 1] - a[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(dy != 0.0, (b[:, 0] - a[:, 0]) / np.where(dy == 0, 1.0, dy), 0.0)
    ax, ay, by = a[:, 0], a[:, 1], b[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    chunk = max(1, int(4e6 / max(len(a), 1)))
    for lo in range(0, len(pts), chunk):
        p = pts[lo:lo + chunk]
        px, py = p[:, 0][:, None], p[:, 1][:, None]
        straddle = (ay > py) != (by > py)
        xint = ax + (py - ay) * slope
        hits = straddle & (px < xint)
        inside[lo:lo + chunk] = np.count_nonzero(hits, axis=1) % 2 == 1
    return inside


def _near_boundary_inside(polygon: CurvilinearPolygon, pts: np.ndarray) -> np.ndarray:
    ids, ss, ds = closest_boundary_batch(polygon, pts)
    inside = np.zeros(len(pts), dtype=bool)
    end_tol = 1e-9
    at_corner = np.zeros(len(pts), dtype=bool)
    for j in polygon.junctions:
        if not j.is_corner:
            continue
        m = (((ids == j.prev_arc) & (ss > 1.0 - end_tol))
             | ((ids == j.next_arc) & (ss < end_tol)))
        if not m.any():
            continue
        at_corner |= m
        prev = polygon.arc_by_id(j.prev_arc)
        nxt = polygon.arc_by_id(j.next_arc)
        v = pts[m] - j.point
        inside[m] = ((v @ prev.outward_normal(1.0) < 0.0)
                     & (v @ nxt.outward_normal(0.0) < 0.0))
    for arc in polygon.arcs:
        m = (ids == arc.id) & ~at_corner
        if not m.any():
            continue
        s = ss[m]
        nrm = arc.outward_normal(s)
        inside[m] = ((pts[m] - arc.point(s)) * nrm).sum(axis=1) < 0.0
    inside[ds < _ON_BOUNDARY_TOL] = False
    return inside


# ----------------------------------------------------------------------
# stock domains
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedSolution:
    """Closed-form Dirichlet solution with hand-differentiated gradient and source."""
    u: Callable
    grad: Callable
    f: Callable


@dataclass(frozen=True)
class DomainCase:
    name: str
    polygon: CurvilinearPolygon = field(repr=False)
    manufactured: Optional[ManufacturedSolution] = field(default=None, repr=False)
    # smooth source used when no closed-form solution exists
    default_f: Optional[Callable] = field(default=None, repr=False)


def make_disk() -> CurvilinearPolygon:
    return CurvilinearPolygon([circle_arc(0, (0.0, 0.0), 1.0, 0.0, 2.0 * math.pi)])


def make_lens() -> CurvilinearPolygon:
    beta = math.acos(0.4)
    right = circle_arc(0, (-0.4, 0.0), 1.0, -beta, beta)
    left = circle_arc(1, (0.4, 0.0), 1.0, math.pi - beta, math.pi + beta)
    return CurvilinearPolygon([right, left])


def make_flower() -> CurvilinearPolygon:
    return CurvilinearPolygon(
        [polar_arc(0, [1.0, 0.0, 0.0, 0.0, 0.0, 0.2], 0.0, 2.0 * math.pi)])


def make_square() -> CurvilinearPolygon:
    c = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    return CurvilinearPolygon(
        [line_arc(i, c[i], c[(i + 1) % 4]) for i in range(4)])


def _disk_manufactured() -> ManufacturedSolution:
    def u(x, y):
        return (1.0 - x * x - y * y) * np.exp(x)

    def grad(x, y):
        e = np.exp(x)
        return np.stack([e * (1.0 - x * x - y * y - 2.0 * x), -2.0 * y * e], axis=-1)

    def f(x, y):
        return np.exp(x) * (x * x + y * y + 4.0 * x + 3.0)

    return ManufacturedSolution(u, grad, f)


def _lens_manufactured() -> ManufacturedSolution:
    a = 0.4

    def parts(x, y):
        p = 1.0 - (x - a) ** 2 - y * y
        q = 1.0 - (x + a) ** 2 - y * y
        return p, q

    def u(x, y):
        p, q = parts(x, y)
        return p * q

    def grad(x, y):
        p, q = parts(x, y)
        gx = q * (-2.0 * (x - a)) + p * (-2.0 * (x + a))
        gy = q * (-2.0 * y) + p * (-2.0 * y)
        return np.stack([gx, gy], axis=-1)

    def f(x, y):
        p, q = parts(x, y)
        return 4.0 * (p + q) - 8.0 * (x * x - a * a + y * y)

    return ManufacturedSolution(u, grad, f)


def _square_manufactured() -> ManufacturedSolution:
    def u(x, y):
        return np.sin(math.pi * x) * np.sin(math.pi * y)

    def grad(x, y):
        return np.stack([
            math.pi * np.cos(math.pi * x) * np.sin(math.pi * y),
            math.pi * np.sin(math.pi * x) * np.cos(math.pi * y)], axis=-1)

    def f(x, y):
        return 2.0 * math.pi ** 2 * np.sin(math.pi * x) * np.sin(math.pi * y)

    return ManufacturedSolution(u, grad, f)


def _flower_source(x, y):
    return 4.0 + 3.0 * x + 2.0 * y


_BUILDERS = {
    "disk": (make_disk, _disk_manufactured, None),
    "lens": (make_lens, _lens_manufactured, None),
    "flower": (make_flower, None, _flower_source),
    "square": (make_square, _square_manufactured, None),
}

DOMAIN_NAMES = tuple(_BUILDERS)


def get_domain(name: str) -> DomainCase:
    try:
        build, manu, fsrc = _BUILDERS[name]
    except KeyError:
        raise KeyError("unknown domain %r (choose from %s)" % (name, ", ".join(_BUILDERS)))
    return DomainCase(name=name, polygon=build(),
                      manufactured=manu() if manu else None,
                      default_f=fsrc)


# ----------------------------------------------------------------------
# custom domain files
# ----------------------------------------------------------------------

def load_domain_file(path) -> CurvilinearPolygon:
    """Read a domain description: one arc per line, CCW order.

    Grammar (whitespace separated, '#' comments):
      circle cx cy radius theta0 theta1
      polar  theta0 theta1 c0 [c1 c2 ...]
      line   x0 y0 x1 y1
    """
    arcs = []
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            tok = text.split()
            kind, vals = tok[0], [float(v) for v in tok[1:]]
            if kind == "circle" and len(vals) == 5:
                arcs.append(circle_arc(len(arcs), vals[0:2], vals[2], vals[3], vals[4]))
            elif kind == "polar" and len(vals) >= 3:
                arcs.append(polar_arc(len(arcs), vals[2:], vals[0], vals[1]))
            elif kind == "line" and len(vals) == 4:
                arcs.append(line_arc(len(arcs), vals[0:2], vals[2:4]))
            else:
                raise GeometryError("domain file line %d: bad arc %r" % (ln, text))
    return CurvilinearPolygon(arcs)
