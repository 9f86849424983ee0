"""Global FE spaces, stiffness/load assembly, Dirichlet elimination, CG.

Assembly supports two geometry modes over the same quadrature points:
"approx" integrates the plain Dirichlet form on the computational domain
through the degree-r element maps, while "exact" integrates the transported
form (coefficient matrix times gradients) on the exact curved domain.  The
two reference integrands coincide analytically, which the tests exploit as
an algebraic identity.  Assembly order is fixed, so matrices are bitwise
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, ContractError, SolverError
from .isogeom import ElementGeometry
from .meshgen import Mesh
from .refelem import ReferenceElement

CG_RTOL = 1e-12
DENSE_LIMIT = 2000


@dataclass
class FeSpace:
    """Degree-r Lagrange space on an elevated mesh."""
    mesh: Mesh = field(repr=False)
    elements: List[ElementGeometry] = field(repr=False)
    ref: ReferenceElement = field(repr=False)
    degree: int
    num_dofs: int
    conn: np.ndarray = field(repr=False)           # (ne, nb) global dof ids
    dof_coords: np.ndarray = field(repr=False)     # (ndof, 2) on the computational domain
    boundary_dofs: np.ndarray = field(repr=False)  # sorted dof ids on curved edges

    @property
    def interior_dofs(self) -> np.ndarray:
        mask = np.ones(self.num_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.nonzero(mask)[0]


def build_space(mesh: Mesh, elements: Sequence[ElementGeometry], r: int) -> FeSpace:
    """Number the dofs: vertices, then edge nodes, then element interiors."""
    if elements[0].ref.r != r:
        raise ContractError("element degree %d does not match requested %d"
                            % (elements[0].ref.r, r))
    ref = elements[0].ref
    nv = mesh.num_vertices
    ne = len(elements)
    nb = ref.nb

    edge_ids: Dict[tuple, int] = {}
    for el in elements:
        v = el.vertex_ids
        for k in range(3):
            key = (min(v[k], v[(k + 1) % 3]), max(v[k], v[(k + 1) % 3]))
            edge_ids.setdefault(key, 0)
    n_edges = len(edge_ids)
    for i, key in enumerate(sorted(edge_ids)):
        edge_ids[key] = i

    per_edge = r - 1
    n_interior = 1 if r == 3 else 0
    num_dofs = nv + per_edge * n_edges + n_interior * ne

    conn = np.empty((ne, nb), dtype=int)
    for e, el in enumerate(elements):
        v = el.vertex_ids
        conn[e, :3] = v
        for k in range(3):
            a, b = int(v[k]), int(v[(k + 1) % 3])
            base = nv + per_edge * edge_ids[(min(a, b), max(a, b))]
            local = ref.edge_nodes(k)[1:-1]
            glob = range(base, base + per_edge) if a < b \
                else range(base + per_edge - 1, base - 1, -1)
            conn[e, local] = list(glob)
        if n_interior:
            conn[e, nb - 1] = nv + per_edge * n_edges + e

    dof_coords = np.empty((num_dofs, 2))
    for e, el in enumerate(elements):
        dof_coords[conn[e]] = el.nodes_phys

    bset = set()
    for el in elements:
        if el.kind == "boundary":
            bset.update(conn[el.index, ref.edge_nodes(0)])
    boundary_dofs = np.array(sorted(bset), dtype=int)

    return FeSpace(mesh=mesh, elements=list(elements), ref=ref, degree=r,
                   num_dofs=num_dofs, conn=conn, dof_coords=dof_coords,
                   boundary_dofs=boundary_dofs)


# ----------------------------------------------------------------------
# assembly
# ----------------------------------------------------------------------

@dataclass
class SparseSystem:
    matrix: sp.csr_matrix = field(repr=False)
    rhs: Optional[np.ndarray] = field(default=None, repr=False)
    constraints: Optional[Dict[int, float]] = None


def assemble_stiffness(space: FeSpace, mode: str = "approx") -> SparseSystem:
    """Stiffness matrix in the requested geometry mode."""
    if mode not in ("approx", "exact"):
        raise ContractError("mode must be 'approx' or 'exact'")
    ref = space.ref
    w = ref.quad_wts
    gref = ref.grad_at_quad                      # (nq, nb, 2)
    ne, nb = space.conn.shape

    data = np.empty((ne, nb, nb))
    interior = [e for e in range(ne) if space.elements[e].kind == "interior"]
    boundary = [e for e in range(ne) if space.elements[e].kind == "boundary"]

    if interior:
        B = np.stack([space.elements[e].B for e in interior])
        detB = np.abs(np.linalg.det(B))
        if (detB <= 0).any():
            bad = interior[int(np.argmin(detB))]
            raise AssemblyError("element %d has a singular map" % bad, element=bad)
        Binv_t = np.transpose(np.linalg.inv(B), (0, 2, 1))
        G = np.einsum("eab,qib->eqia", Binv_t, gref)
        data[interior] = np.einsum("q,eqia,eqja,e->eij", w, G, G, detB)

    for e in boundary:
        el = space.elements[e]
        if mode == "approx":
            J = el.iso_map_grad(ref.quad_pts)            # (nq, 2, 2)
            detJ = np.linalg.det(J)
            if (detJ <= 0).any():
                raise AssemblyError("element %d has a singular map" % e, element=e)
            Jinv_t = np.transpose(np.linalg.inv(J), (0, 2, 1))
            G = np.einsum("qab,qib->qia", Jinv_t, gref)
            data[e] = np.einsum("q,qia,qja,q->ij", w, G, G, detJ)
        else:
            Jx = el.exact_map_grad(ref.quad_pts, check=False)
            detJx = np.linalg.det(Jx)
            if (detJx <= 0).any():
                raise AssemblyError("element %d has a singular exact map" % e,
                                    element=e)
            A = el.coefficient_matrix(ref.quad_pts)      # (nq, 2, 2)
            Jinv_t = np.transpose(np.linalg.inv(Jx), (0, 2, 1))
            G = np.einsum("qab,qib->qia", Jinv_t, gref)
            AG = np.einsum("qab,qib->qia", A, G)
            data[e] = np.einsum("q,qia,qja,q->ij", w, AG, G, detJx)

    rows = np.repeat(space.conn[:, :, None], nb, axis=2)
    cols = np.repeat(space.conn[:, None, :], nb, axis=1)
    mat = sp.coo_matrix((data.ravel(), (rows.ravel(), cols.ravel())),
                        shape=(space.num_dofs, space.num_dofs)).tocsr()
    return SparseSystem(matrix=mat)


def assemble_load(space: FeSpace, f: Callable) -> np.ndarray:
    """Load vector with entries of f against the basis on the computational
    domain; f takes (x, y) arrays."""
    ref = space.ref
    w = ref.quad_wts
    N = ref.basis_at_quad                         # (nq, nb)
    out = np.zeros(space.num_dofs)
    ne = space.conn.shape[0]
    interior = [e for e in range(ne) if space.elements[e].kind == "interior"]
    boundary = [e for e in range(ne) if space.elements[e].kind == "boundary"]
    if interior:
        B = np.stack([space.elements[e].B for e in interior])
        c = np.stack([space.elements[e].c for e in interior])
        detB = np.abs(np.linalg.det(B))
        pts = np.einsum("eab,qb->eqa", B, ref.quad_pts) + c[:, None, :]
        fv = f(pts[..., 0], pts[..., 1])
        loc = np.einsum("q,eq,qi,e->ei", w, fv, N, detB)
        np.add.at(out, space.conn[interior], loc)
    for e in boundary:
        el = space.elements[e]
        pts = el.iso_map(ref.quad_pts)
        detJ = np.linalg.det(el.iso_map_grad(ref.quad_pts))
        fv = f(pts[:, 0], pts[:, 1])
        np.add.at(out, space.conn[e],
                  np.einsum("q,q,qi,q->i", w, fv, N, np.abs(detJ)))
    return out


# ----------------------------------------------------------------------
# Dirichlet constraints
# ----------------------------------------------------------------------

@dataclass
class ReducedSystem:
    matrix: sp.csr_matrix = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)
    num_full: int
    constrained: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def expand(self, x_reduced: np.ndarray) -> np.ndarray:
        full = np.empty(self.num_full)
        full[self.interior] = x_reduced
        full[self.constrained] = self.values
        return full


def apply_dirichlet(space: FeSpace, system: SparseSystem,
                    values: Union[np.ndarray, Dict[int, float]]) -> ReducedSystem:
    """Symmetric elimination of the boundary dofs.

    `values` is either an array aligned with space.boundary_dofs or a mapping
    from every boundary dof to its value.
    """
    bdofs = space.boundary_dofs
    if isinstance(values, dict):
        extra = set(values) - set(bdofs.tolist())
        if extra:
            raise ContractError("values supplied for non-boundary dofs %s"
                                % sorted(extra)[:5])
        missing = set(bdofs.tolist()) - set(values)
        if missing:
            raise ContractError("missing values for boundary dofs %s"
                                % sorted(missing)[:5])
        vals = np.array([values[d] for d in bdofs], dtype=float)
    else:
        vals = np.asarray(values, dtype=float)
        if vals.shape != bdofs.shape:
            raise ContractError("expected %d boundary values, got %d"
                                % (len(bdofs), len(vals)))
    mask = np.ones(space.num_dofs, dtype=bool)
    mask[bdofs] = False
    interior = np.nonzero(mask)[0]
    A = system.matrix
    rhs = system.rhs if system.rhs is not None else np.zeros(space.num_dofs)
    reduced = A[interior][:, interior].tocsr()
    lifted = rhs[interior] - A[interior][:, bdofs] @ vals
    return ReducedSystem(matrix=reduced, rhs=lifted, interior=interior,
                         num_full=space.num_dofs, constrained=bdofs, values=vals)


# ----------------------------------------------------------------------
# solvers
# ----------------------------------------------------------------------

@dataclass
class SolveInfo:
    x: np.ndarray
    iterations: int
    residual: float


def solve_cg(reduced: ReducedSystem, x0: Optional[np.ndarray] = None,
             rtol: float = CG_RTOL) -> SolveInfo:
    """Jacobi-preconditioned conjugate gradients on the reduced system.

    Returns the full coefficient vector with constrained values in place.
    """
    A = reduced.matrix
    b = reduced.rhs
    n = A.shape[0]
    if n == 0:
        return SolveInfo(x=reduced.expand(np.zeros(0)), iterations=0, residual=0.0)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return SolveInfo(x=reduced.expand(np.zeros(n)), iterations=0, residual=0.0)
    diag = A.diagonal()
    if (diag <= 0).any():
        raise SolverError("non-positive diagonal entry; system is not SPD")
    inv_diag = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    r = b - A @ x
    cap = int(20 * np.sqrt(n) + 500)
    res = float(np.linalg.norm(r))
    if res <= rtol * bnorm:
        return SolveInfo(x=reduced.expand(x), iterations=0, residual=res / bnorm)
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, cap + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r))
        if res <= rtol * bnorm:
            return SolveInfo(x=reduced.expand(x), iterations=it, residual=res / bnorm)
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError("conjugate gradients did not reach %.1e within %d iterations"
                      % (rtol, cap), residual=res / bnorm, iterations=cap)


def solve_dense(reduced: ReducedSystem) -> np.ndarray:
    """Direct dense solve, for small systems only; the solver oracle."""
    n = reduced.matrix.shape[0]
    if n > DENSE_LIMIT:
        raise ContractError("dense fallback limited to %d dofs" % DENSE_LIMIT)
    x = np.linalg.solve(reduced.matrix.toarray(), reduced.rhs)
    return reduced.expand(x)


def dump_matrix(system: SparseSystem, path) -> None:
    """Write the matrix as `i j value` lines in coordinate text format."""
    coo = system.matrix.tocoo()
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write("%d %d %.17g\n" % (i, j, v))
