"""Discrete operators and estimators on top of the FE core.

Sup norms are sampled on a per-element reference lattice (order r+3 plus the
quadrature points); the "omega" convention pairs the discrete function with
the target evaluated at exact-geometry image points, the "omega_h" convention
with the target at computational-domain points.  Both are reported by the
experiments; they differ by at most max|grad| times the geometry gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy.spatial import cKDTree

from . import femcore
from .errors import ContractError
from .femcore import FeSpace
from .refelem import principal_lattice


@dataclass
class DiscreteFunction:
    space: FeSpace = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.coeffs) != self.space.num_dofs:
            raise ContractError("coefficient length %d does not match %d dofs"
                                % (len(self.coeffs), self.space.num_dofs))


def _sample_points(space: FeSpace) -> np.ndarray:
    lat = principal_lattice(space.degree + 3)
    return np.vstack([lat, space.ref.quad_pts])


def eval_at_ref(space: FeSpace, coeffs: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Values of the discrete function at reference points, all elements.

    Returns array of shape (ne, npts).
    """
    N = space.ref.eval_basis(pts)                # (np, nb)
    return np.einsum("ei,pi->ep", coeffs[space.conn], N)


def map_points(space: FeSpace, pts: np.ndarray, geometry: str) -> np.ndarray:
    """Physical images of reference points per element, (ne, npts, 2).

    geometry "iso" uses the degree-r maps, "exact" the blended maps.
    """
    ne = len(space.elements)
    out = np.empty((ne, len(pts), 2))
    for e, el in enumerate(space.elements):
        out[e] = el.iso_map(pts) if geometry == "iso" else el.exact_map(pts, check=False)
    return out


# ----------------------------------------------------------------------
# interpolation and solves
# ----------------------------------------------------------------------

def interpolate(space: FeSpace, g: Callable, mode: str = "on_omega_h") -> DiscreteFunction:
    """Lagrange interpolation; `g` takes (x, y) arrays.

    Mode "on_omega_h" samples g at the computational-domain node images,
    "on_omega" at the exact-geometry node images.  After elevation the two
    point sets coincide, but both code paths exist and are exercised.
    """
    if mode == "on_omega_h":
        pts = space.dof_coords
    elif mode == "on_omega":
        pts = np.empty_like(space.dof_coords)
        for e, el in enumerate(space.elements):
            pts[space.conn[e]] = el.exact_map(space.ref.nodes)
    else:
        raise ContractError("mode must be 'on_omega_h' or 'on_omega'")
    return DiscreteFunction(space, np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float))


def discrete_harmonic(space: FeSpace,
                      g: Union[Callable, np.ndarray, Dict[int, float]],
                      ) -> DiscreteFunction:
    """Solve the homogeneous Dirichlet form with boundary data g."""
    if callable(g):
        bc = space.dof_coords[space.boundary_dofs]
        vals = np.asarray(g(bc[:, 0], bc[:, 1]), dtype=float)
        if vals.shape == ():
            vals = np.full(len(space.boundary_dofs), float(vals))
    else:
        vals = g
    system = femcore.assemble_stiffness(space, "approx")
    reduced = femcore.apply_dirichlet(space, system, vals)
    # warm start at the boundary mean: constants then solve in zero iterations
    x0 = np.full(reduced.matrix.shape[0], float(np.mean(reduced.values)))
    info = femcore.solve_cg(reduced, x0=x0)
    return DiscreteFunction(space, info.x)


def solve_poisson(space: FeSpace, f: Callable) -> DiscreteFunction:
    """Homogeneous Dirichlet solve with source f."""
    system = femcore.assemble_stiffness(space, "approx")
    system.rhs = femcore.assemble_load(space, f)
    reduced = femcore.apply_dirichlet(space, system,
                                      np.zeros(len(space.boundary_dofs)))
    info = femcore.solve_cg(reduced)
    return DiscreteFunction(space, info.x)


def ritz_project(space: FeSpace, v: Union[Callable, DiscreteFunction],
                 grad_v: Optional[Callable] = None) -> DiscreteFunction:
    """Projection in the transported (exact-geometry) Dirichlet form.

    `v` vanishes on the boundary and comes either as callables (v, grad_v on
    physical points, grad_v returning (..., 2)) or as a DiscreteFunction,
    whose exact elementwise gradient is used directly.
    """
    ref = space.ref
    w = ref.quad_wts
    gref = ref.grad_at_quad
    rhs = np.zeros(space.num_dofs)
    for e, el in enumerate(space.elements):
        Jx = el.exact_map_grad(ref.quad_pts, check=False)
        detJx = np.abs(np.linalg.det(Jx))
        Jinv_t = np.transpose(np.linalg.inv(Jx), (0, 2, 1))
        G = np.einsum("qab,qib->qia", Jinv_t, gref)          # test gradients
        A = el.coefficient_matrix(ref.quad_pts)
        if isinstance(v, DiscreteFunction):
            gu_ref = np.einsum("i,qia->qa", v.coeffs[space.conn[e]], gref)
            gu = np.einsum("qab,qb->qa", Jinv_t, gu_ref)
        else:
            if grad_v is None:
                raise ContractError("analytic projection needs grad_v")
            pts = el.exact_map(ref.quad_pts, check=False)
            gu = np.asarray(grad_v(pts[:, 0], pts[:, 1]), dtype=float)
        Agu = np.einsum("qab,qb->qa", A, gu)
        rhs[space.conn[e]] += np.einsum("q,qa,qia,q->i", w, Agu, G, detJx)
    system = femcore.assemble_stiffness(space, "exact")
    system.rhs = rhs
    reduced = femcore.apply_dirichlet(space, system,
                                      np.zeros(len(space.boundary_dofs)))
    info = femcore.solve_cg(reduced)
    return DiscreteFunction(space, info.x)


# ----------------------------------------------------------------------
# norms and estimators
# ----------------------------------------------------------------------

def linf_error(space: FeSpace, u_h: DiscreteFunction, u: Callable,
               convention: str = "omega") -> float:
    """Max-norm error on the per-element sample lattice.

    "omega" (default) evaluates u at exact-geometry sample images, "omega_h"
    at computational-domain images; the discrete values are the same.
    """
    if convention not in ("omega", "omega_h"):
        raise ContractError("convention must be 'omega' or 'omega_h'")
    pts = _sample_points(space)
    uh = eval_at_ref(space, u_h.coeffs, pts)
    phys = map_points(space, pts, "exact" if convention == "omega" else "iso")
    uv = u(phys[..., 0], phys[..., 1])
    return float(np.abs(uv - uh).max())


def domain_sup(space: FeSpace, u_h: DiscreteFunction) -> float:
    """Sampled sup of |u_h| over the computational domain."""
    pts = _sample_points(space)
    return float(np.abs(eval_at_ref(space, u_h.coeffs, pts)).max())


def boundary_sup(space: FeSpace, u_h: DiscreteFunction,
                 samples_per_edge: int = 33) -> float:
    """Sampled sup of |u_h| along the curved boundary edges."""
    t = np.linspace(0.0, 1.0, samples_per_edge)
    pts = space.ref.edge_points(0, t)
    N = space.ref.eval_basis(pts)
    best = 0.0
    for e, el in enumerate(space.elements):
        if el.kind != "boundary":
            continue
        vals = N @ u_h.coeffs[space.conn[e]]
        best = max(best, float(np.abs(vals).max()))
    return best


def h1_seminorm_error(space: FeSpace, u_h: DiscreteFunction,
                      grad_u: Callable) -> float:
    """Exact-geometry H1 seminorm of (u - u_h), via element quadrature."""
    ref = space.ref
    w = ref.quad_wts
    gref = ref.grad_at_quad
    total = 0.0
    for e, el in enumerate(space.elements):
        Jx = el.exact_map_grad(ref.quad_pts, check=False)
        detJx = np.abs(np.linalg.det(Jx))
        Jinv_t = np.transpose(np.linalg.inv(Jx), (0, 2, 1))
        gu_ref = np.einsum("i,qia->qa", u_h.coeffs[space.conn[e]], gref)
        gh = np.einsum("qab,qb->qa", Jinv_t, gu_ref)
        pts = el.exact_map(ref.quad_pts, check=False)
        gu = np.asarray(grad_u(pts[:, 0], pts[:, 1]), dtype=float)
        diff = gu - gh
        total += float((w * (diff * diff).sum(axis=1) * detJx).sum())
    return float(np.sqrt(total))


# ----------------------------------------------------------------------
# reference-solution evaluation (for domains without closed forms)
# ----------------------------------------------------------------------

class ReferenceSolution:
    """Evaluate a fine-mesh discrete solution at arbitrary physical points.

    Point location goes through a centroid KD-tree, then the element map is
    Newton-inverted; points marginally outside the fine mesh (at most a
    geometry gap away) evaluate through the nearest element's polynomial.
    """

    def __init__(self, space: FeSpace, u_h: DiscreteFunction):
        self.space = space
        self.u_h = u_h
        cent = np.stack([el.affine_map(np.array([[1 / 3, 1 / 3]]))[0]
                         for el in space.elements])
        self._tree = cKDTree(cent)
        self._k = min(12, len(space.elements))

    def __call__(self, x, y):
        pts = np.stack([np.asarray(x, dtype=float).ravel(),
                        np.asarray(y, dtype=float).ravel()], axis=-1)
        vals = np.empty(len(pts))
        _, cand = self._tree.query(pts, k=self._k)
        cand = np.atleast_2d(cand)
        for i, p in enumerate(pts):
            vals[i] = self._eval_one(p, cand[i])
        return vals.reshape(np.asarray(x).shape)

    def _eval_one(self, p, candidates):
        best = None
        best_margin = -np.inf
        for e in candidates:
            el = self.space.elements[int(e)]
            ref = el.affine_inverse(p[None, :])[0]
            margin = min(ref[0], ref[1], 1.0 - ref[0] - ref[1])
            if margin > best_margin:
                best_margin = margin
                best = el
            if margin > -1e-12:
                break
        el = best
        ref = el.invert_iso(p[None, :]) if el.kind == "boundary" \
            else el.affine_inverse(p[None, :])
        N = self.space.ref.eval_basis(ref)
        return float((N @ self.u_h.coeffs[self.space.conn[el.index]])[0])
