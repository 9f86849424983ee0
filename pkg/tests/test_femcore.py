import numpy as np
import pytest
import scipy.sparse as sp

from isopar import femcore, geometry as geo, isogeom, meshgen
from isopar.errors import ContractError, SolverError
from isopar.refelem import reference_element


def test_dof_counts(space_cache, mesh_cache):
    mesh = mesh_cache("disk", 0.3)
    s1 = space_cache("disk", 0.3, 1)
    assert s1.num_dofs == mesh.num_vertices
    s2 = space_cache("disk", 0.3, 2)
    edges = set()
    for t in mesh.triangles:
        for i in range(3):
            a, b = int(t[i]), int(t[(i + 1) % 3])
            edges.add((min(a, b), max(a, b)))
    assert s2.num_dofs == mesh.num_vertices + len(edges)
    s3 = space_cache("disk", 0.3, 3)
    assert s3.num_dofs == mesh.num_vertices + 2 * len(edges) + mesh.num_triangles


def test_shared_dofs_have_identical_coordinates(space_cache):
    for r in (2, 3):
        space = space_cache("lens", 0.2, r)
        coords = np.full((space.num_dofs, 2), np.nan)
        for e, el in enumerate(space.elements):
            prev = coords[space.conn[e]]
            seen = ~np.isnan(prev[:, 0])
            if seen.any():
                assert np.abs(prev[seen] - el.nodes_phys[seen]).max() <= 1e-12
            coords[space.conn[e]] = el.nodes_phys


def test_boundary_dofs_lie_on_boundary(space_cache, domains):
    for name in ("disk", "lens", "flower"):
        space = space_cache(name, 0.2, 2)
        pts = space.dof_coords[space.boundary_dofs]
        _, _, d = geo.closest_boundary_batch(domains[name].polygon, pts)
        assert d.max() <= 1e-10


def test_interior_dofs_strictly_inside(space_cache, domains):
    space = space_cache("disk", 0.2, 2)
    pts = space.dof_coords[space.interior_dofs]
    assert geo.contains_batch(domains["disk"].polygon, pts).all()


def test_reference_p1_stiffness_matrix():
    # identity-mapped reference triangle gives the textbook matrix
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2]])
    mesh = meshgen.Mesh(vertices=verts, triangles=tris, boundary_edges=[],
                        h=np.sqrt(2.0))
    ref = reference_element(1)
    el = isogeom.ElementGeometry(index=0, kind="interior",
                                 vertex_ids=np.array([0, 1, 2]),
                                 vcoords=verts, ref=ref)
    el.nodes_phys = el.affine_map(ref.nodes)
    space = femcore.build_space(mesh, [el], 1)
    K = femcore.assemble_stiffness(space).matrix.toarray()
    want = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    assert np.abs(K - want).max() <= 1e-14


@pytest.mark.parametrize("name,r", [("disk", 1), ("disk", 2), ("lens", 3),
                                    ("flower", 2)])
def test_dual_mode_assembly_identity(space_cache, name, r):
    space = space_cache(name, 0.2, r)
    A = femcore.assemble_stiffness(space, "approx").matrix
    E = femcore.assemble_stiffness(space, "exact").matrix
    rel = abs(A - E).max() / abs(A).max()
    assert rel <= 1e-12


def test_constants_in_kernel(space_cache):
    space = space_cache("flower", 0.2, 2)
    A = femcore.assemble_stiffness(space).matrix
    ones = np.ones(space.num_dofs)
    assert np.abs(A @ ones).max() / abs(A).max() <= 1e-11


def test_matrix_numerically_symmetric(space_cache):
    space = space_cache("lens", 0.2, 2)
    A = femcore.assemble_stiffness(space).matrix
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()


def test_matrix_positive_semidefinite_small(space_cache):
    space = space_cache("disk", 0.5, 1)
    A = femcore.assemble_stiffness(space).matrix.toarray()
    eigs = np.linalg.eigvalsh(A)
    assert eigs.min() >= -1e-10


def test_assembly_deterministic(space_cache):
    space = space_cache("disk", 0.2, 2)
    A = femcore.assemble_stiffness(space).matrix
    B = femcore.assemble_stiffness(space).matrix
    assert (A != B).nnz == 0
    assert np.array_equal(A.data, B.data)


def test_load_constant_sums_to_area(space_cache):
    space = space_cache("disk", 0.2, 1)
    b = femcore.assemble_load(space, lambda x, y: np.ones_like(x))
    ref = space.ref
    area = 0.0
    for el in space.elements:
        det = np.abs(np.linalg.det(el.iso_map_grad(ref.quad_pts)))
        area += float((ref.quad_wts * det).sum())
    assert abs(b.sum() - area) <= 1e-12 * area


def test_load_zero(space_cache):
    space = space_cache("disk", 0.2, 1)
    b = femcore.assemble_load(space, lambda x, y: np.zeros_like(x))
    assert np.abs(b).max() == 0.0


def test_load_four_approximates_disk_area(space_cache):
    space = space_cache("disk", 0.1, 1)
    b = femcore.assemble_load(space, lambda x, y: np.full_like(x, 4.0))
    # straight elements miss the disk area at O(h^2)
    assert abs(b.sum() - 4 * np.pi) <= 4 * np.pi / 6 * 0.1 ** 2 * 1.5


def test_apply_dirichlet_zero_values(space_cache):
    space = space_cache("disk", 0.3, 1)
    system = femcore.assemble_stiffness(space)
    reduced = femcore.apply_dirichlet(space, system,
                                      np.zeros(len(space.boundary_dofs)))
    assert reduced.matrix.shape[0] == space.num_dofs - len(space.boundary_dofs)
    assert np.abs(reduced.rhs).max() == 0.0


def test_apply_dirichlet_constant_gives_constant(space_cache):
    space = space_cache("lens", 0.2, 2)
    system = femcore.assemble_stiffness(space)
    reduced = femcore.apply_dirichlet(space, system,
                                      np.full(len(space.boundary_dofs), 3.5))
    info = femcore.solve_cg(reduced, x0=np.full(reduced.matrix.shape[0], 3.5))
    assert np.abs(info.x - 3.5).max() <= 1e-10


def test_apply_dirichlet_keeps_symmetry(space_cache):
    space = space_cache("disk", 0.3, 2)
    system = femcore.assemble_stiffness(space)
    reduced = femcore.apply_dirichlet(space, system,
                                      np.ones(len(space.boundary_dofs)))
    M = reduced.matrix
    assert abs(M - M.T).max() <= 1e-12 * abs(M).max()


def test_apply_dirichlet_rejects_non_boundary_dof(space_cache):
    space = space_cache("disk", 0.3, 1)
    system = femcore.assemble_stiffness(space)
    interior = int(space.interior_dofs[0])
    values = {int(d): 0.0 for d in space.boundary_dofs}
    values[interior] = 1.0
    with pytest.raises(ContractError):
        femcore.apply_dirichlet(space, system, values)


def test_cg_identity_one_iteration():
    A = sp.identity(5, format="csr")
    red = femcore.ReducedSystem(matrix=A, rhs=np.arange(1.0, 6.0),
                                interior=np.arange(5), num_full=5,
                                constrained=np.array([], dtype=int),
                                values=np.array([]))
    info = femcore.solve_cg(red)
    assert info.iterations <= 1
    assert np.allclose(info.x, np.arange(1.0, 6.0))


def test_cg_diagonal_2x2():
    A = sp.csr_matrix(np.diag([1.0, 4.0]))
    red = femcore.ReducedSystem(matrix=A, rhs=np.array([1.0, 1.0]),
                                interior=np.arange(2), num_full=2,
                                constrained=np.array([], dtype=int),
                                values=np.array([]))
    info = femcore.solve_cg(red)
    assert np.allclose(info.x, [1.0, 0.25], atol=1e-12)


def test_cg_poisson_reaches_tolerance(space_cache):
    space = space_cache("disk", 0.2, 1)
    system = femcore.assemble_stiffness(space)
    system.rhs = femcore.assemble_load(space, lambda x, y: np.full_like(x, 4.0))
    reduced = femcore.apply_dirichlet(space, system,
                                      np.zeros(len(space.boundary_dofs)))
    info = femcore.solve_cg(reduced)
    assert info.residual <= 1e-12
    # Galerkin residual on interior dofs matches the solver tolerance
    resid = reduced.rhs - reduced.matrix @ info.x[reduced.interior]
    assert np.linalg.norm(resid) <= 1e-11 * np.linalg.norm(reduced.rhs) + 1e-14


def test_cg_agrees_with_dense_oracle(space_cache):
    space = space_cache("lens", 0.2, 2)
    system = femcore.assemble_stiffness(space)
    system.rhs = femcore.assemble_load(space, lambda x, y: x + 2 * y)
    reduced = femcore.apply_dirichlet(space, system,
                                      np.zeros(len(space.boundary_dofs)))
    xi = femcore.solve_cg(reduced).x
    xd = femcore.solve_dense(reduced)
    assert np.abs(xi - xd).max() <= 1e-9 * max(1.0, np.abs(xd).max())


def test_cg_cap_raises():
    # an indefinite-looking system the solver cannot reduce quickly
    n = 40
    rng = np.random.default_rng(3)
    M = rng.standard_normal((n, n))
    A = sp.csr_matrix(M @ M.T + 1e-12 * np.eye(n))
    red = femcore.ReducedSystem(matrix=A, rhs=rng.standard_normal(n),
                                interior=np.arange(n), num_full=n,
                                constrained=np.array([], dtype=int),
                                values=np.array([]))
    info_or_err = None
    try:
        info_or_err = femcore.solve_cg(red, rtol=1e-16)
    except SolverError as err:
        info_or_err = err
        assert err.iterations == int(20 * np.sqrt(n) + 500)
    assert info_or_err is not None


def test_dense_fallback_respects_limit():
    n = femcore.DENSE_LIMIT + 1
    A = sp.identity(n, format="csr")
    red = femcore.ReducedSystem(matrix=A, rhs=np.zeros(n),
                                interior=np.arange(n), num_full=n,
                                constrained=np.array([], dtype=int),
                                values=np.array([]))
    with pytest.raises(ContractError):
        femcore.solve_dense(red)


def test_quadrature_override_keeps_mode_identity(mesh_cache):
    from isopar import isogeom
    mesh = mesh_cache("lens", 0.2)
    _, elems = isogeom.elevate(mesh, 2, quad_degree=10)
    space = femcore.build_space(mesh, elems, 2)
    assert len(space.ref.quad_wts) > 16
    A = femcore.assemble_stiffness(space, "approx").matrix
    E = femcore.assemble_stiffness(space, "exact").matrix
    assert abs(A - E).max() / abs(A).max() <= 1e-12


def test_dump_matrix_round_trip(tmp_path, space_cache):
    space = space_cache("disk", 0.5, 1)
    system = femcore.assemble_stiffness(space)
    path = tmp_path / "mat.txt"
    femcore.dump_matrix(system, path)
    rows, cols, vals = [], [], []
    for line in path.read_text().splitlines():
        i, j, v = line.split()
        rows.append(int(i)); cols.append(int(j)); vals.append(float(v))
    back = sp.coo_matrix((vals, (rows, cols)),
                         shape=system.matrix.shape).tocsr()
    assert abs(back - system.matrix).max() <= 1e-16
