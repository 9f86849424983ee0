import numpy as np
import pytest

from isopar import femcore, geometry as geo, operators as ops
from isopar.errors import ContractError


def test_interpolate_linear_exact_on_straight_mesh(space_cache):
    space = space_cache("square", 0.2, 1)
    g = lambda x, y: 2.0 * x - 0.5 * y + 0.25
    ih = ops.interpolate(space, g)
    assert ops.linf_error(space, ih, g, "omega_h") <= 1e-13


def test_interpolate_constant(space_cache):
    space = space_cache("disk", 0.3, 2)
    ih = ops.interpolate(space, lambda x, y: np.full_like(x, 2.5))
    assert np.abs(ih.coeffs - 2.5).max() == 0.0


def test_interpolate_modes_agree_after_elevation(space_cache):
    space = space_cache("flower", 0.2, 2)
    g = lambda x, y: np.sin(x) * y
    a = ops.interpolate(space, g, "on_omega_h")
    b = ops.interpolate(space, g, "on_omega")
    assert np.abs(a.coeffs - b.coeffs).max() <= 1e-13


def test_interpolation_rate_quadratic_r2(space_cache):
    hs = [0.2, 0.1, 0.05]
    errs = []
    g = lambda x, y: x * x + y * y
    for h in hs:
        space = space_cache("disk", h, 2)
        ih = ops.interpolate(space, g, "on_omega")
        errs.append(ops.linf_error(space, ih, g))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 2.6 <= slope <= 3.4


def test_discrete_harmonic_constant(space_cache):
    space = space_cache("lens", 0.2, 1)
    uh = ops.discrete_harmonic(space, lambda x, y: np.ones_like(x))
    assert np.abs(uh.coeffs - 1.0).max() <= 1e-10


def test_discrete_harmonic_linear_on_straight_mesh(space_cache):
    space = space_cache("square", 0.2, 1)
    uh = ops.discrete_harmonic(space, lambda x, y: x)
    want = space.dof_coords[:, 0]
    assert np.abs(uh.coeffs - want).max() <= 1e-10


def test_discrete_harmonic_matches_dense_oracle(space_cache):
    space = space_cache("lens", 0.2, 1)
    nb = len(space.boundary_dofs)
    vals = np.zeros(nb)
    vals[nb // 3] = 1.0
    uh = ops.discrete_harmonic(space, vals)
    system = femcore.assemble_stiffness(space)
    reduced = femcore.apply_dirichlet(space, system, vals)
    xd = femcore.solve_dense(reduced)
    assert np.abs(uh.coeffs - xd).max() <= 1e-9


def test_solve_poisson_zero_source(space_cache):
    space = space_cache("disk", 0.3, 1)
    uh = ops.solve_poisson(space, lambda x, y: np.zeros_like(x))
    assert np.abs(uh.coeffs).max() == 0.0


def test_solve_poisson_error_drops_with_h(space_cache, domains):
    manu = domains["disk"].manufactured
    e = {}
    for h in (0.2, 0.1):
        space = space_cache("disk", h, 1)
        uh = ops.solve_poisson(space, manu.f)
        e[h] = ops.linf_error(space, uh, manu.u)
    assert e[0.2] / e[0.1] >= 2.2


def test_ritz_projection_idempotent(space_cache):
    space = space_cache("disk", 0.2, 2)
    v = ops.interpolate(space, lambda x, y: 1.0 - x * x - y * y, "on_omega")
    v.coeffs[space.boundary_dofs] = 0.0
    proj = ops.ritz_project(space, v)
    assert np.abs(proj.coeffs - v.coeffs).max() <= 1e-10


def test_ritz_projection_zero(space_cache):
    space = space_cache("disk", 0.3, 1)
    proj = ops.ritz_project(space, lambda x, y: np.zeros_like(x),
                            lambda x, y: np.zeros(np.shape(x) + (2,)))
    assert np.abs(proj.coeffs).max() <= 1e-13


def test_ritz_projection_h1_rate(space_cache, domains):
    hs = [0.2, 0.1, 0.05]
    errs = []
    v = lambda x, y: 1.0 - x * x - y * y
    gv = lambda x, y: np.stack([-2.0 * x, -2.0 * y], axis=-1)
    for h in hs:
        space = space_cache("disk", h, 1)
        proj = ops.ritz_project(space, v, gv)
        errs.append(ops.h1_seminorm_error(space, proj, gv))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 0.7 <= slope <= 1.3


def test_ritz_needs_gradient(space_cache):
    space = space_cache("disk", 0.3, 1)
    with pytest.raises(ContractError):
        ops.ritz_project(space, lambda x, y: x)


def test_linf_error_zero_for_interpolated_linear(space_cache):
    space = space_cache("square", 0.2, 1)
    g = lambda x, y: x - 3.0 * y
    ih = ops.interpolate(space, g)
    assert ops.linf_error(space, ih, g, "omega_h") <= 1e-13


def test_linf_error_zero_function_is_sampled_sup(space_cache, rng):
    space = space_cache("disk", 0.3, 1)
    uh = ops.DiscreteFunction(space, rng.standard_normal(space.num_dofs))
    zero = lambda x, y: np.zeros_like(x)
    assert ops.linf_error(space, uh, zero) == ops.domain_sup(space, uh)


def test_linf_conventions_close(space_cache, domains):
    manu = domains["disk"].manufactured
    space = space_cache("disk", 0.2, 1)
    uh = ops.solve_poisson(space, manu.f)
    a = ops.linf_error(space, uh, manu.u, "omega")
    b = ops.linf_error(space, uh, manu.u, "omega_h")
    # gap bounded by max|grad u| times the geometry deviation
    pts = ops._sample_points(space)
    gap = 0.0
    for el in space.elements:
        if el.kind == "boundary":
            gap = max(gap, np.abs(el.exact_map(pts, check=False)
                                  - el.iso_map(pts)).max())
    gpts = space.dof_coords
    gmax = np.linalg.norm(manu.grad(gpts[:, 0], gpts[:, 1]), axis=-1).max()
    assert abs(a - b) <= 3.0 * gmax * gap + 1e-14


def test_boundary_sup_constant(space_cache):
    space = space_cache("disk", 0.3, 1)
    c = ops.DiscreteFunction(space, np.full(space.num_dofs, -2.0))
    assert ops.boundary_sup(space, c) == pytest.approx(2.0, abs=1e-13)


def test_boundary_sup_nodal_delta(space_cache):
    space = space_cache("disk", 0.3, 1)
    coeffs = np.zeros(space.num_dofs)
    coeffs[space.boundary_dofs[0]] = 1.0
    uh = ops.DiscreteFunction(space, coeffs)
    assert ops.boundary_sup(space, uh) == pytest.approx(1.0, abs=1e-13)


def test_wmp_ratio_exactly_one_for_constants(space_cache):
    space = space_cache("flower", 0.2, 2)
    uh = ops.discrete_harmonic(space, np.ones(len(space.boundary_dofs)))
    ratio = ops.domain_sup(space, uh) / ops.boundary_sup(space, uh)
    assert abs(ratio - 1.0) <= 1e-10


def test_reference_solution_evaluator(space_cache, domains):
    manu = domains["disk"].manufactured
    space = space_cache("disk", 0.1, 2)
    uh = ops.solve_poisson(space, manu.f)
    evaluator = ops.ReferenceSolution(space, uh)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-0.6, 0.6, size=(50, 2))
    got = evaluator(pts[:, 0], pts[:, 1])
    want = manu.u(pts[:, 0], pts[:, 1])
    assert np.abs(got - want).max() <= 5e-4
    # points on the exact boundary evaluate without raising
    bpts, _, _ = domains["disk"].polygon.boundary_samples(16)
    vals = evaluator(bpts[:, 0], bpts[:, 1])
    assert np.abs(vals).max() <= 1e-3
