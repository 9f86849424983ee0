"""Reference triangle: Lagrange nodes, basis functions, quadrature.

Vertices sit at (0,0), (1,0), (0,1); barycentric coordinates are
l0 = 1-x-y, l1 = x, l2 = y.  Edge k runs from vertex k to vertex k+1,
so edge 0 is the segment y = 0.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def _lag(m, t):
    """1D factor prod_{a<m} (t-a)/(m-a) and its derivative, for m <= 3."""
    t = np.asarray(t, dtype=float)
    if m == 0:
        return np.ones_like(t), np.zeros_like(t)
    if m == 1:
        return t, np.ones_like(t)
    if m == 2:
        return 0.5 * t * (t - 1.0), t - 0.5
    if m == 3:
        return t * (t - 1.0) * (t - 2.0) / 6.0, (3.0 * t * t - 6.0 * t + 2.0) / 6.0
    raise ValueError("degree > 3 not supported")


def principal_lattice(m: int) -> np.ndarray:
    """Reference coordinates of the order-m principal lattice."""
    pts = [(j / m, k / m) for i in range(m, -1, -1)
           for j in range(m - i + 1)
           for k in [m - i - j]]
    return np.array(pts, dtype=float)


def collapsed_gauss(degree: int):
    """Positive-weight rule on the reference triangle, exact to `degree`."""
    n = (degree + 3) // 2
    gx, gw = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (gx + 1.0)
    wu = 0.5 * gw
    U, V = np.meshgrid(u, u, indexing="ij")
    WU, WV = np.meshgrid(wu, wu, indexing="ij")
    x = U
    y = V * (1.0 - U)
    w = WU * WV * (1.0 - U)
    return np.stack([x.ravel(), y.ravel()], axis=-1), w.ravel()


class ReferenceElement:
    """Degree-r Lagrange element with a quadrature rule bound to it."""

    def __init__(self, r: int, quad_degree: int | None = None):
        if r not in (1, 2, 3):
            raise ValueError("degree must be 1, 2 or 3")
        self.r = r
        self.multi = self._node_multi_indices(r)          # (nb, 3) ints
        self.nodes = self.multi[:, 1:3] / float(r)        # reference coords
        self.nb = len(self.multi)
        self.quad_degree = 2 * r + 2 if quad_degree is None else int(quad_degree)
        self.quad_pts, self.quad_wts = collapsed_gauss(self.quad_degree)
        self.basis_at_quad = self.eval_basis(self.quad_pts)
        self.grad_at_quad = self.eval_grad(self.quad_pts)

    @staticmethod
    def _node_multi_indices(r):
        nodes = [(r, 0, 0), (0, r, 0), (0, 0, r)]
        for m in range(1, r):
            nodes.append((r - m, m, 0))       # edge 0: v0 -> v1
        for m in range(1, r):
            nodes.append((0, r - m, m))       # edge 1: v1 -> v2
        for m in range(1, r):
            nodes.append((m, 0, r - m))       # edge 2: v2 -> v0
        if r == 3:
            nodes.append((1, 1, 1))
        return np.array(nodes, dtype=int)

    def eval_basis(self, pts) -> np.ndarray:
        """Basis values, shape (npts, nb)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lam = np.stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]], axis=-1)
        out = np.empty((len(pts), self.nb))
        for n, (i, j, k) in enumerate(self.multi):
            pi, _ = _lag(i, self.r * lam[:, 0])
            pj, _ = _lag(j, self.r * lam[:, 1])
            pk, _ = _lag(k, self.r * lam[:, 2])
            out[:, n] = pi * pj * pk
        return out

    def eval_grad(self, pts) -> np.ndarray:
        """Basis gradients w.r.t. reference coordinates, shape (npts, nb, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lam = np.stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]], axis=-1)
        out = np.empty((len(pts), self.nb, 2))
        for n, (i, j, k) in enumerate(self.multi):
            pi, di = _lag(i, self.r * lam[:, 0])
            pj, dj = _lag(j, self.r * lam[:, 1])
            pk, dk = _lag(k, self.r * lam[:, 2])
            # chain rule: dl0 = (-1,-1), dl1 = (1,0), dl2 = (0,1)
            gi = self.r * di * pj * pk
            gj = self.r * pi * dj * pk
            gk = self.r * pi * pj * dk
            out[:, n, 0] = gj - gi
            out[:, n, 1] = gk - gi
        return out

    def edge_nodes(self, edge: int):
        """Node indices on local edge `edge`, ordered along the edge."""
        r = self.r
        first = [0, 1, 2][edge]
        last = [1, 2, 0][edge]
        mids = [3 + edge * (r - 1) + m for m in range(r - 1)]
        return [first] + mids + [last]

    def edge_points(self, edge: int, t) -> np.ndarray:
        """Reference coordinates along local edge `edge` at parameters t."""
        t = np.asarray(t, dtype=float)
        v = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        a, b = v[edge], v[(edge + 1) % 3]
        return a + t[..., None] * (b - a)


@lru_cache(maxsize=None)
def reference_element(r: int, quad_degree: int | None = None) -> ReferenceElement:
    return ReferenceElement(r, quad_degree)
