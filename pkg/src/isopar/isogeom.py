"""Curved-element geometry: exact blended maps, their degree-r interpolants,
and the transfer map between the two.

For a boundary triangle the straight edge pair stays affine while the edge
bound to an arc is replaced by the arc itself.  The exact map splits the
arc-minus-chord deviation into its 1D degree-r edge interpolant (lifted into
the triangle on the curved-edge basis functions, so elevation reproduces it
exactly) plus a residual of size O(h^{r+1}) that is blended transfinitely.
The split keeps the gap between the exact map and its interpolant at the
optimal order for every degree; at r = 1 it reduces to plain linear
blending.  Everything here is immutable after `elevate` and evaluation is
pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .errors import ElevationError, GeometryError, InversionError
from .meshgen import Mesh
from .refelem import ReferenceElement, principal_lattice, reference_element

_EDGE_EPS = 1e-14        # below this, the blending correction is defined as 0
NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50


@dataclass
class ElementGeometry:
    """Geometry maps of one element.

    Boundary elements are stored with their vertices rotated so the curved
    edge is local edge 0 (reference segment y = 0 from vertex 0 to vertex 1).
    """
    index: int
    kind: str                        # "interior" or "boundary"
    vertex_ids: np.ndarray           # (3,) global ids, possibly rotated
    vcoords: np.ndarray              # (3, 2) straight-triangle vertices
    ref: ReferenceElement = field(repr=False)
    arc: Optional[geo.BoundaryArc] = field(default=None, repr=False)
    s_a: float = 0.0
    s_b: float = 0.0
    nodes_phys: np.ndarray = field(default=None, repr=False)   # (nb, 2)

    def __post_init__(self):
        v = self.vcoords
        self.B = np.column_stack([v[1] - v[0], v[2] - v[0]])
        self.c = v[0].copy()
        self.detB = float(np.linalg.det(self.B))
        if self.kind == "boundary":
            r = self.ref.r
            self._edge_xi = np.arange(r + 1) / r
            self._edge_dev = self._deviation(self._edge_xi)   # (r+1, 2)
            # the deviation interpolant p(xi) vanishes at 0 and 1; its lift
            # into the triangle is l0*l1*q(x) with q = p / (xi (1-xi)), a
            # polynomial of degree r-2 pinned at the interior edge nodes.
            # Lifting through q keeps the map's s-th derivatives at O(h^s),
            # which naive edge-bubble lifting loses for degree 3.
            self._q_xi = self._edge_xi[1:-1]
            denom = self._q_xi * (1.0 - self._q_xi)
            self._q_vals = self._edge_dev[1:-1] / denom[:, None]

    # -- curved-edge deviation and its 1D interpolant ---------------------

    def _deviation(self, xi):
        """Arc minus chord along the curved edge, xi in [0, 1]."""
        s = self.s_a + (self.s_b - self.s_a) * np.asarray(xi, dtype=float)
        chord = self.vcoords[0] + np.asarray(xi)[..., None] * (self.vcoords[1]
                                                               - self.vcoords[0])
        return self.arc.point(s) - chord

    def _deviation_deriv(self, xi):
        s = self.s_a + (self.s_b - self.s_a) * np.asarray(xi, dtype=float)
        t = (self.s_b - self.s_a) * self.arc.tangent(s)
        return t - (self.vcoords[1] - self.vcoords[0])

    def _q(self, xi):
        """The reduced lift polynomial q (degree r-2) and its derivative."""
        xi = np.asarray(xi, dtype=float)
        nodes = self._q_xi
        n = len(nodes)
        if n == 0:
            return np.zeros(xi.shape + (2,)), np.zeros(xi.shape + (2,))
        vals = np.ones((len(xi), n))
        ders = np.zeros((len(xi), n))
        for m in range(n):
            for j in range(n):
                if j == m:
                    continue
                vals[:, m] *= (xi - nodes[j]) / (nodes[m] - nodes[j])
            for k in range(n):
                if k == m:
                    continue
                term = np.ones_like(xi) / (nodes[m] - nodes[k])
                for j in range(n):
                    if j in (m, k):
                        continue
                    term *= (xi - nodes[j]) / (nodes[m] - nodes[j])
                ders[:, m] += term
        return vals @ self._q_vals, ders @ self._q_vals

    def _residual(self, xi):
        """Deviation minus its 1D degree-r interpolant (and the derivative)."""
        xi = np.asarray(xi, dtype=float)
        q, qp = self._q(xi)
        bub = (xi * (1.0 - xi))[:, None]
        dbub = (1.0 - 2.0 * xi)[:, None]
        e = self._deviation(xi) - bub * q
        ep = self._deviation_deriv(xi) - dbub * q - bub * qp
        return e, ep

    # -- affine base ----------------------------------------------------

    def affine_map(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts @ self.B.T + self.c

    def affine_inverse(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (x - self.c) @ np.linalg.inv(self.B).T

    # -- exact blended map ----------------------------------------------

    def _check_inside_reference(self, pts, tol=1e-12):
        lam0 = 1.0 - pts[:, 0] - pts[:, 1]
        if (pts[:, 0] < -tol).any() or (pts[:, 1] < -tol).any() \
                or (lam0 < -tol).any():
            raise GeometryError("reference point outside the closed triangle")

    def exact_map(self, pts, check: bool = True):
        """The geometry map with the exact arc on the curved edge."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if check:
            self._check_inside_reference(pts)
        if self.kind == "interior":
            return self.affine_map(pts)
        out = self.affine_map(pts)
        x, y = pts[:, 0], pts[:, 1]
        lam0 = 1.0 - x - y
        q, _ = self._q(x)
        out += (lam0 * x)[:, None] * q
        u = 1.0 - y                               # lam0 + lam1
        safe = u > _EDGE_EPS
        theta = np.where(safe, x / np.where(safe, u, 1.0), 0.0)
        e, _ = self._residual(theta)
        out += np.where(safe[:, None], u[:, None] * e, 0.0)
        return out

    def exact_map_grad(self, pts, check: bool = True):
        """Jacobian of exact_map w.r.t. reference coordinates, (n, 2, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if check:
            self._check_inside_reference(pts)
        n = len(pts)
        out = np.broadcast_to(self.B, (n, 2, 2)).copy()
        if self.kind == "interior":
            return out
        x, y = pts[:, 0], pts[:, 1]
        lam0 = 1.0 - x - y
        q, qp = self._q(x)
        # d/dx [lam0 x q(x)] = (lam0 - x) q + lam0 x q'; d/dy = -x q
        out[:, :, 0] += (lam0 - x)[:, None] * q + (lam0 * x)[:, None] * qp
        out[:, :, 1] += -x[:, None] * q
        u = 1.0 - y
        safe = u > _EDGE_EPS
        theta = np.where(safe, x / np.where(safe, u, 1.0), 0.0)
        e, ep = self._residual(theta)
        # d/dx [u e(x/u)] = e'(theta); d/dy = -e(theta) + theta e'(theta)
        out[:, :, 0] += np.where(safe[:, None], ep, 0.0)
        out[:, :, 1] += np.where(safe[:, None], -e + theta[:, None] * ep, 0.0)
        return out

    # -- isoparametric (interpolated) map --------------------------------

    def iso_map(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "interior":
            return self.affine_map(pts)
        return self.ref.eval_basis(pts) @ self.nodes_phys

    def iso_map_grad(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "interior":
            return np.broadcast_to(self.B, (len(pts), 2, 2)).copy()
        g = self.ref.eval_grad(pts)               # (n, nb, 2)
        return np.einsum("ia,nib->nab", self.nodes_phys, g)

    def invert_iso(self, x):
        """Reference coordinates of physical points under the degree-r map.

        Damped Newton started from the affine preimage.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ref = self.affine_inverse(x)
        if self.kind == "interior":
            return ref
        for _ in range(NEWTON_MAXIT):
            res = self.iso_map(ref) - x
            J = self.iso_map_grad(ref)
            step = np.linalg.solve(J, res[..., None])[..., 0]
            if np.abs(step).max() <= NEWTON_TOL:
                return ref - step
            nrm = np.linalg.norm(res, axis=1)
            scale = np.ones(len(ref))
            for _ in range(30):     # bisection-style damping on overshoot
                cand = ref - scale[:, None] * step
                worse = np.linalg.norm(self.iso_map(cand) - x, axis=1) > nrm
                if not worse.any():
                    break
                scale[worse] *= 0.5
            ref = ref - scale[:, None] * step
        raise InversionError("Newton inversion stalled", element=self.index,
                             point=x[0])

    # -- transfer map and coefficient matrix -----------------------------

    def phi(self, x):
        """Map a physical point of the isoparametric element onto the exact
        curved element."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "interior":
            return x.copy()
        ref = self.invert_iso(x)
        self._check_inside_reference(ref, tol=1e-10)
        return self.exact_map(ref, check=False)

    def phi_jacobian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "interior":
            return np.broadcast_to(np.eye(2), (len(x), 2, 2)).copy()
        ref = self.invert_iso(x)
        return self.phi_jacobian_at_ref(ref)

    def phi_jacobian_at_ref(self, pts):
        """Gradient of the transfer map at shared reference points (no Newton)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        dF = self.exact_map_grad(pts, check=False)
        dG = self.iso_map_grad(pts)
        return dF @ np.linalg.inv(dG)

    def coefficient_matrix(self, pts):
        """Symmetric matrix transporting the flat-element Dirichlet integrand
        onto the exact element, evaluated at reference points, (n, 2, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "interior":
            return np.broadcast_to(np.eye(2), (len(pts), 2, 2)).copy()
        M = self.phi_jacobian_at_ref(pts)
        J = np.linalg.det(M)
        if (J <= 0).any():
            raise GeometryError("non-positive transfer Jacobian on element %d"
                                % self.index)
        return M @ np.transpose(M, (0, 2, 1)) / J[:, None, None]


# ----------------------------------------------------------------------
# elevation
# ----------------------------------------------------------------------

def elevate(mesh: Mesh, r: int,
            polygon: Optional[geo.CurvilinearPolygon] = None,
            quad_degree: Optional[int] = None
            ) -> Tuple[ReferenceElement, List[ElementGeometry]]:
    """Build per-element geometry of degree r from a straight mesh.

    Boundary elements get their Lagrange nodes moved onto the blended exact
    map; interior elements stay affine.
    """
    polygon = polygon or mesh.polygon
    if polygon is None:
        raise ValueError("mesh carries no polygon; pass one explicitly")
    ref = reference_element(r, quad_degree)
    bnd = {be.tri: be for be in mesh.boundary_edges}
    elems: List[ElementGeometry] = []
    check_pts = np.vstack([ref.quad_pts, principal_lattice(9)])
    for ti, tri in enumerate(mesh.triangles):
        be = bnd.get(ti)
        if be is None:
            elem = ElementGeometry(index=ti, kind="interior",
                                   vertex_ids=np.asarray(tri, dtype=int),
                                   vcoords=mesh.vertices[tri], ref=ref)
            elem.nodes_phys = elem.affine_map(ref.nodes)
        else:
            rot = np.roll(np.arange(3), -be.local)
            vid = np.asarray(tri, dtype=int)[rot]
            elem = ElementGeometry(index=ti, kind="boundary",
                                   vertex_ids=vid,
                                   vcoords=mesh.vertices[vid], ref=ref,
                                   arc=polygon.arc_by_id(be.arc),
                                   s_a=be.s_a, s_b=be.s_b)
            elem.nodes_phys = elem.exact_map(ref.nodes)
            det = np.linalg.det(elem.iso_map_grad(check_pts))
            if (det <= 0).any():
                raise ElevationError(
                    "element %d has a non-positive isoparametric Jacobian" % ti,
                    element=ti)
        elems.append(elem)
    return ref, elems


# ----------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------

def geometry_diagnostics(runs: Sequence[Tuple[float, Sequence[ElementGeometry]]],
                         polygon: geo.CurvilinearPolygon):
    """Sup-norm geometry errors per mesh size.

    `runs` pairs each mesh size with its elevated elements (same domain and
    degree throughout).  Returns a list of row dicts with keys
    h, phi_err, grad_phi_err, A_err, bdry_dist.
    """
    sample = principal_lattice(9)
    edge_t = np.linspace(0.0, 1.0, 33)
    eye = np.eye(2)
    rows = []
    for h, elems in runs:
        phi_err = grad_err = a_err = bdist = 0.0
        for el in elems:
            if el.kind != "boundary":
                continue
            exact = el.exact_map(sample, check=False)
            iso = el.iso_map(sample)
            phi_err = max(phi_err, float(np.linalg.norm(exact - iso, axis=1).max()))
            M = el.phi_jacobian_at_ref(sample)
            grad_err = max(grad_err, float(np.linalg.norm(M - eye, axis=(1, 2)).max()))
            A = el.coefficient_matrix(sample)
            a_err = max(a_err, float(np.linalg.norm(A - eye, axis=(1, 2)).max()))
            epts = el.iso_map(el.ref.edge_points(0, edge_t))
            _, _, d = geo.closest_boundary_batch(polygon, epts)
            bdist = max(bdist, float(d.max()))
        rows.append({"h": float(h), "phi_err": phi_err, "grad_phi_err": grad_err,
                     "A_err": a_err, "bdry_dist": bdist})
    return rows
