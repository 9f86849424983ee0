"""Straight quasi-uniform triangulations of curvilinear polygons.

Boundary vertices are arc samples at (approximately) equal arc-length
spacing and every boundary edge remembers which arc and parameter interval
it discretizes.  Interior points come from a jittered triangular lattice;
Delaunay triangulation plus Laplacian smoothing produces the final mesh.
Meshes are regenerated per target size rather than refined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from . import geometry as geo
from .errors import MeshParseError, MeshQualityError

DEFAULT_SEED = 42
DEFAULT_RHO_MAX = 8.0
SMOOTH_SWEEPS = 10


@dataclass
class BoundaryEdge:
    tri: int          # owning triangle
    local: int        # local edge id: edge k joins vertices k and k+1 (mod 3)
    arc: int
    s_a: float
    s_b: float


@dataclass
class Mesh:
    vertices: np.ndarray                  # (nv, 2)
    triangles: np.ndarray                 # (nt, 3) CCW
    boundary_edges: List[BoundaryEdge]
    h: float                              # max triangle diameter
    polygon: Optional[geo.CurvilinearPolygon] = field(default=None, repr=False)

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)


@dataclass
class MeshReport:
    ok: bool
    min_angle: float
    ratio: float
    num_vertices: int
    num_triangles: int
    num_boundary_edges: int
    violations: List[str]


# ----------------------------------------------------------------------
# generation
# ----------------------------------------------------------------------

def generate(polygon: geo.CurvilinearPolygon, h_target: float,
             seed: int = DEFAULT_SEED, rho_max: float = DEFAULT_RHO_MAX) -> Mesh:
    """Mesh the polygon with triangles of diameter close to h_target."""
    if not 0.0 < h_target < 0.5 * polygon.diameter:
        raise ValueError("h_target must be positive and below half the domain diameter")

    bpts, chain = _boundary_chain(polygon, h_target)
    offset = _offset_layer(polygon, bpts, h_target)
    interior = _interior_lattice(polygon, h_target, seed, offset)
    pts = np.vstack([bpts, offset, interior]) if len(offset) or len(interior) \
        else bpts.copy()
    nb = len(bpts)

    sweeps = [4, 3, 3]
    for nsweep in sweeps:
        tris = _triangulate(polygon, pts)
        pts = _smooth(polygon, pts, tris, nb, h_target, nsweep)
    # rescue rounds: a rare straggler sliver gets two more smoothing passes
    for attempt in range(3):
        tris = _triangulate(polygon, pts)
        _, diam, inradius = _tri_metrics(pts, tris)
        if attempt == 2 or diam.max() / max(inradius.min(), 1e-300) <= rho_max:
            break
        pts = _smooth(polygon, pts, tris, nb, h_target, 4)
    _check_boundary_recovery(tris, nb)
    pts, tris = _enforce_single_boundary_edge(pts, tris, nb)

    mesh = _finalize(polygon, pts, tris, nb, chain)
    _check_quality(mesh, h_target, rho_max)
    return mesh


def _boundary_chain(polygon, h):
    """Sample each arc at equal arc length; returns points and edge records.

    chain[i] = (arc_id, s_a, s_b) for the edge from boundary vertex i to
    boundary vertex i+1 (cyclic).
    """
    pts = []
    chain = []
    offsets = []
    for arc in polygon.arcs:
        n = max(2, int(round(arc.length / h)))
        ell = np.arange(n) * (arc.length / n)
        s = arc.param_at_arclength(ell)
        s[0] = 0.0
        offsets.append(len(pts))
        p = arc.point(s)
        for j in range(n):
            pts.append(p[j])
            s_b = 1.0 if j == n - 1 else s[j + 1]
            chain.append((arc.id, float(s[j]), float(s_b)))
    return np.asarray(pts), chain


def _offset_layer(polygon, bpts, h):
    """Staggered row of interior points one lattice pitch inside the boundary.

    One point per boundary segment, dropped where the domain is too thin
    (lens tips) or where neighbors from opposite boundary stretches collide.
    """
    nxt = np.roll(bpts, -1, axis=0)
    edge = nxt - bpts
    elen = np.linalg.norm(edge, axis=1)
    t = edge / elen[:, None]
    inward = np.stack([-t[:, 1], t[:, 0]], axis=-1)
    cand = 0.5 * (bpts + nxt) + inward * (np.sqrt(3.0) / 2.0 * elen)[:, None]
    # a corner gets one point on its interior bisector, one pitch from both faces
    corner_pts = []
    for j in polygon.corners:
        ta = polygon.arc_by_id(j.prev_arc).tangent(1.0)
        tb = polygon.arc_by_id(j.next_arc).tangent(0.0)
        ta = ta / np.linalg.norm(ta)
        tb = tb / np.linalg.norm(tb)
        bis = tb - ta
        nrm = np.linalg.norm(bis)
        if nrm < 1e-12:
            continue
        depth = np.sqrt(3.0) / 2.0 * h / max(np.sin(0.5 * j.opening), 0.3)
        corner_pts.append(j.point + depth * bis / nrm)
    corner_pts = np.asarray(corner_pts) if corner_pts else np.zeros((0, 2))
    if len(corner_pts):
        far = cKDTree(corner_pts).query(cand, k=1)[0] > 0.55 * h
        cand = cand[far]
    cand = np.vstack([corner_pts, cand]) if len(corner_pts) else cand
    d = geo.signed_distance_batch(polygon, cand)
    cand = cand[d <= -0.6 * h]
    if len(cand) == 0:
        return np.zeros((0, 2))
    keep = np.ones(len(cand), dtype=bool)
    tree = cKDTree(cand)
    for i, j in sorted(tree.query_pairs(0.55 * h)):
        if keep[i]:
            keep[j] = False
    return cand[keep]


def _interior_lattice(polygon, h, seed, offset):
    rng = np.random.default_rng(seed)
    (xmin, ymin), (xmax, ymax) = polygon.bbox
    dy = h * np.sqrt(3.0) / 2.0
    ys = np.arange(ymin - h, ymax + h, dy)
    rows = []
    for k, y in enumerate(ys):
        xs = np.arange(xmin - h, xmax + h, h) + (0.5 * h if k % 2 else 0.0)
        rows.append(np.stack([xs, np.full_like(xs, y)], axis=-1))
    pts = np.concatenate(rows, axis=0)
    pts = pts + rng.uniform(-0.12, 0.12, size=pts.shape) * h
    d = geo.signed_distance_batch(polygon, pts)
    pts = pts[d <= -1.3 * h]
    if len(offset):
        keep = cKDTree(offset).query(pts, k=1)[0] > 0.7 * h
        pts = pts[keep]
    return pts


def _triangulate(polygon, pts):
    tris = Delaunay(pts).simplices
    cent = pts[tris].mean(axis=1)
    tris = tris[geo.contains_batch(polygon, cent)]
    # enforce CCW orientation
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    flip = det < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _smooth(polygon, pts, tris, nb, h, nsweep):
    """Jacobi-style Laplacian smoothing of interior vertices."""
    n = len(pts)
    neighbors = [set() for _ in range(n)]
    for t in tris:
        for i in range(3):
            neighbors[t[i]].update((t[(i + 1) % 3], t[(i + 2) % 3]))
    idx = [np.fromiter(s, dtype=int) for s in neighbors]
    out = pts.copy()
    for _ in range(nsweep):
        new = out.copy()
        for v in range(nb, n):
            if len(idx[v]):
                new[v] = out[idx[v]].mean(axis=0)
        moved = new[nb:]
        if len(moved):
            d = geo.signed_distance_batch(polygon, moved)
            bad = d > -0.4 * h
            moved[bad] = out[nb:][bad]
            new[nb:] = moved
        out = new
    return out


def _check_boundary_recovery(tris, nb):
    edges = set()
    for t in tris:
        for i in range(3):
            a, b = int(t[i]), int(t[(i + 1) % 3])
            edges.add((min(a, b), max(a, b)))
    for i in range(nb):
        j = (i + 1) % nb
        if (min(i, j), max(i, j)) not in edges:
            raise MeshQualityError(
                "boundary segment %d-%d not recovered by triangulation" % (i, j))


def _boundary_pair_set(nb):
    return {(min(i, (i + 1) % nb), max(i, (i + 1) % nb)) for i in range(nb)}


def _enforce_single_boundary_edge(pts, tris, nb):
    """Split triangles owning two boundary edges (edge flip, else centroid)."""
    bnd = _boundary_pair_set(nb)
    tris = [list(t) for t in tris]
    pts = [p for p in pts]

    def edge_key(a, b):
        return (min(a, b), max(a, b))

    changed = True
    while changed:
        changed = False
        owner = {}
        for ti, t in enumerate(tris):
            for i in range(3):
                owner.setdefault(edge_key(t[i], t[(i + 1) % 3]), []).append(ti)
        for ti, t in enumerate(tris):
            bcount = [edge_key(t[i], t[(i + 1) % 3]) in bnd for i in range(3)]
            if sum(bcount) < 2:
                continue
            if sum(bcount) == 3:
                raise MeshQualityError("triangle %d has three boundary edges" % ti,
                                       triangle=ti)
            # vertices: apex is shared by both boundary edges
            free = bcount.index(False)
            a, c = t[(free + 0) % 3], t[(free + 1) % 3]   # interior edge a-c
            key = edge_key(a, c)
            mates = [x for x in owner.get(key, []) if x != ti]
            if mates:
                tj = mates[0]
                d = [v for v in tris[tj] if v not in (a, c)][0]
                b = [v for v in t if v not in (a, c)][0]
                if _convex_quad(pts[a], pts[b], pts[c], pts[d]):
                    tris[ti] = _ccw([a, b, d], pts)
                    tris[tj] = _ccw([b, c, d], pts)
                    changed = True
                    break
            # fallback: insert centroid
            m = len(pts)
            pts.append((np.asarray(pts[t[0]]) + pts[t[1]] + pts[t[2]]) / 3.0)
            v0, v1, v2 = t
            tris[ti] = _ccw([v0, v1, m], pts)
            tris.append(_ccw([v1, v2, m], pts))
            tris.append(_ccw([v2, v0, m], pts))
            changed = True
            break
    return np.asarray(pts), np.asarray(tris, dtype=int)


def _ccw(t, pts):
    a, b, c = (np.asarray(pts[v]) for v in t)
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return t if det > 0 else [t[0], t[2], t[1]]


def _convex_quad(pa, pb, pc, pd):
    quad = [np.asarray(p) for p in (pa, pb, pc, pd)]
    sign = 0
    for i in range(4):
        u = quad[(i + 1) % 4] - quad[i]
        v = quad[(i + 2) % 4] - quad[(i + 1) % 4]
        cr = u[0] * v[1] - u[1] * v[0]
        if abs(cr) < 1e-14:
            return False
        s = 1 if cr > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def _finalize(polygon, pts, tris, nb, chain):
    directed = {}
    for ti, t in enumerate(tris):
        for e in range(3):
            directed[(int(t[e]), int(t[(e + 1) % 3]))] = (ti, e)
    bedges = []
    for i, (arc_id, s_a, s_b) in enumerate(chain):
        j = (i + 1) % nb
        try:
            ti, e = directed[(i, j)]
        except KeyError:
            raise MeshQualityError("boundary edge %d-%d lost during cleanup" % (i, j))
        bedges.append(BoundaryEdge(tri=ti, local=e, arc=arc_id, s_a=s_a, s_b=s_b))
    h = _max_diameter(pts, tris)
    return Mesh(vertices=np.asarray(pts, dtype=float),
                triangles=np.asarray(tris, dtype=int),
                boundary_edges=bedges, h=float(h), polygon=polygon)


def _max_diameter(pts, tris):
    p = pts[tris]
    e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
    return np.linalg.norm(e, axis=2).max()


def _tri_metrics(pts, tris):
    p = pts[tris]
    e0 = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    e1 = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
    e2 = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    area = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                  - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    s = 0.5 * (e0 + e1 + e2)
    inradius = np.where(s > 0, area / np.where(s == 0, 1.0, s), 0.0)
    diam = np.maximum(e0, np.maximum(e1, e2))
    return area, diam, inradius


def _check_quality(mesh, h_target, rho_max):
    area, diam, inradius = _tri_metrics(mesh.vertices, mesh.triangles)
    if area.min() <= 0:
        worst = int(area.argmin())
        raise MeshQualityError("triangle %d inverted" % worst, triangle=worst)
    ratio = diam.max() / inradius.min()
    if ratio > rho_max:
        worst = int(inradius.argmin())
        raise MeshQualityError(
            "quasi-uniformity ratio %.2f exceeds %.2f" % (ratio, rho_max),
            triangle=worst)
    if not (0.5 * h_target <= mesh.h <= 2.0 * h_target):
        raise MeshQualityError(
            "mesh size %.4f outside [%g, %g]" % (mesh.h, 0.5 * h_target, 2 * h_target))


# ----------------------------------------------------------------------
# validation
# ----------------------------------------------------------------------

def validate(mesh: Mesh, polygon: Optional[geo.CurvilinearPolygon] = None) -> MeshReport:
    """Check all mesh invariants; violations are reported, not raised."""
    polygon = polygon or mesh.polygon
    v, t = mesh.vertices, mesh.triangles
    violations = []

    area, diam, inradius = _tri_metrics(v, t)
    for ti in np.nonzero(area <= 0)[0]:
        violations.append("triangle %d has non-positive area" % ti)

    # conformity: interior edges shared by exactly two triangles
    counts = {}
    for ti, tri in enumerate(t):
        for e in range(3):
            key = (min(int(tri[e]), int(tri[(e + 1) % 3])),
                   max(int(tri[e]), int(tri[(e + 1) % 3])))
            counts[key] = counts.get(key, 0) + 1
    bkeys = set()
    for be in mesh.boundary_edges:
        tri = t[be.tri]
        key = (min(int(tri[be.local]), int(tri[(be.local + 1) % 3])),
               max(int(tri[be.local]), int(tri[(be.local + 1) % 3])))
        bkeys.add(key)
    for key, cnt in counts.items():
        want = 1 if key in bkeys else 2
        if cnt != want:
            violations.append("edge %s owned by %d triangles (expected %d)"
                              % (key, cnt, want))

    # at most one boundary edge per triangle
    per_tri = {}
    for be in mesh.boundary_edges:
        per_tri[be.tri] = per_tri.get(be.tri, 0) + 1
    for ti, cnt in per_tri.items():
        if cnt > 1:
            violations.append("triangle %d owns %d boundary edges" % (ti, cnt))

    # boundary edges must match their arc samples
    if polygon is not None:
        for k, be in enumerate(mesh.boundary_edges):
            arc = polygon.arc_by_id(be.arc)
            tri = t[be.tri]
            pa = v[tri[be.local]]
            pb = v[tri[(be.local + 1) % 3]]
            if (np.linalg.norm(pa - arc.point(be.s_a)) > 1e-10
                    or np.linalg.norm(pb - arc.point(be.s_b)) > 1e-10):
                violations.append("boundary edge %d endpoints off the arc" % k)
            if not (0.0 <= be.s_a < be.s_b <= 1.0):
                violations.append("boundary edge %d has bad parameter interval" % k)
        # each corner joins two triangles, one boundary edge each
        for j in polygon.corners:
            d = np.linalg.norm(v - j.point, axis=1)
            if d.min() > 1e-10:
                violations.append("corner %s is not a mesh vertex" % np.round(j.point, 6))

    ratio = float(diam.max() / inradius.min()) if inradius.min() > 0 else np.inf
    if ratio > DEFAULT_RHO_MAX:
        violations.append("quasi-uniformity ratio %.2f exceeds %.2f"
                          % (ratio, DEFAULT_RHO_MAX))

    # Euler characteristic of a triangulated disk
    if len(counts) - len(v) - len(t) != -1:
        violations.append("Euler formula V - E + T = 1 violated")

    return MeshReport(ok=not violations,
                      min_angle=float(_min_angle(v, t)),
                      ratio=ratio,
                      num_vertices=len(v),
                      num_triangles=len(t),
                      num_boundary_edges=len(mesh.boundary_edges),
                      violations=violations)


def _min_angle(v, t):
    p = v[t]
    ang = []
    for i in range(3):
        a = p[:, i] - p[:, (i + 2) % 3]
        b = p[:, (i + 1) % 3] - p[:, (i + 2) % 3]
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        cosang = np.clip((a * b).sum(axis=1) / np.maximum(na * nb, 1e-300), -1, 1)
        ang.append(np.arccos(cosang))
    return np.min(ang)


# ----------------------------------------------------------------------
# text format
# ----------------------------------------------------------------------

def write_mesh(mesh: Mesh, path):
    """Plain-text format: header `meshv1 nv nt nb`, then vertices,
    triangles and boundary-edge records, one per line."""
    with open(path, "w") as fh:
        fh.write("meshv1 %d %d %d\n" % (mesh.num_vertices, mesh.num_triangles,
                                        len(mesh.boundary_edges)))
        for x, y in mesh.vertices:
            fh.write("%.17g %.17g\n" % (x, y))
        for i, j, k in mesh.triangles:
            fh.write("%d %d %d\n" % (i, j, k))
        for be in mesh.boundary_edges:
            fh.write("%d %d %d %.17g %.17g\n" % (be.tri, be.local, be.arc,
                                                 be.s_a, be.s_b))


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise MeshParseError("missing header", line=1)
    head = lines[0].split()
    if len(head) != 4 or head[0] != "meshv1":
        raise MeshParseError("missing header", line=1)
    try:
        nv, nt, nb = (int(x) for x in head[1:])
    except ValueError:
        raise MeshParseError("bad counts in header", line=1)
    if len(lines) < 1 + nv + nt + nb:
        raise MeshParseError("file truncated", line=len(lines))

    def parse(ln, text, types):
        tok = text.split()
        if len(tok) != len(types):
            raise MeshParseError("expected %d fields" % len(types), line=ln)
        try:
            return [ty(v) for ty, v in zip(types, tok)]
        except ValueError:
            raise MeshParseError("bad value %r" % text, line=ln)

    verts = np.array([parse(2 + i, lines[1 + i], [float, float])
                      for i in range(nv)], dtype=float).reshape(nv, 2)
    tris = np.array([parse(2 + nv + i, lines[1 + nv + i], [int, int, int])
                     for i in range(nt)], dtype=int).reshape(nt, 3)
    if nt and (tris.min() < 0 or tris.max() >= nv):
        raise MeshParseError("triangle vertex index out of range", line=1 + nv + 1)
    bedges = []
    for i in range(nb):
        tfields = parse(2 + nv + nt + i, lines[1 + nv + nt + i],
                        [int, int, int, float, float])
        bedges.append(BoundaryEdge(*tfields))
    h = _max_diameter(verts, tris) if nt else 0.0
    return Mesh(vertices=verts, triangles=tris, boundary_edges=bedges, h=float(h))
