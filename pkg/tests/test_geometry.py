import math

import numpy as np
import pytest

from isopar import geometry as geo
from isopar.errors import GeometryError


def test_arc_point_endpoints_and_quarter_turn(domains):
    arc = domains["disk"].polygon.arcs[0]
    assert np.allclose(geo.arc_point(arc, 0.0), [1.0, 0.0])
    assert np.allclose(geo.arc_point(arc, 0.25), [0.0, 1.0], atol=1e-15)


def test_arc_point_rejects_out_of_range(domains):
    arc = domains["disk"].polygon.arcs[0]
    with pytest.raises(GeometryError):
        geo.arc_point(arc, 1.5)
    with pytest.raises(GeometryError):
        geo.arc_point(arc, -0.1)


def test_lens_upper_arc_midpoint_equidistant_from_corners(domains):
    poly = domains["lens"].polygon
    corners = np.stack([j.point for j in poly.corners])
    for arc in poly.arcs:
        mid = geo.arc_point(arc, 0.5)
        d = np.linalg.norm(corners - mid, axis=1)
        assert abs(d[0] - d[1]) < 1e-12


def test_closest_boundary_radial_point(domains):
    arc_id, s, d = geo.closest_boundary(domains["disk"].polygon, (2.0, 0.0))
    assert arc_id == 0
    assert d == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(geo.arc_point(domains["disk"].polygon.arcs[0], s), [1, 0],
                       atol=1e-9)


def test_closest_boundary_center_tie_break(domains):
    arc_id, s, d = geo.closest_boundary(domains["disk"].polygon, (0.0, 0.0))
    assert d == pytest.approx(1.0, abs=1e-12)
    assert s == 0.0            # ties resolve to the smallest parameter


def test_closest_boundary_optimality(domains, rng):
    poly = domains["flower"].polygon
    pts = rng.uniform(-1.3, 1.3, size=(200, 2))
    ids, ss, ds = geo.closest_boundary_batch(poly, pts)
    arc = poly.arcs[0]
    interiorish = (ss > 1e-6) & (ss < 1 - 1e-6) & (ds > 1e-9)
    g = arc.point(ss[interiorish])
    t = arc.tangent(ss[interiorish])
    resid = ((pts[interiorish] - g) * t).sum(axis=1)
    bound = 1e-9 * np.linalg.norm(t, axis=1) * ds[interiorish]
    assert (np.abs(resid) <= np.maximum(bound, 1e-12)).all()


def test_closest_boundary_corner_point_brute_force(domains):
    poly = domains["lens"].polygon
    corner = poly.corners[0].point
    p = corner + np.array([0.0, 0.05])
    arc_id, s, d = geo.closest_boundary(poly, p)
    # brute force over a dense boundary polyline
    sgrid = np.linspace(0, 1, 5000)
    brute = min(np.linalg.norm(p - a.point(sgrid), axis=1).min()
                for a in poly.arcs)
    assert d == pytest.approx(brute, abs=1e-6)
    assert d == pytest.approx(np.linalg.norm(p - corner), abs=1e-9)
    assert s in (0.0, 1.0)


def test_closest_boundary_symmetry_disk(domains, rng):
    poly = domains["disk"].polygon
    pts = rng.uniform(-1.5, 1.5, size=(100, 2))
    _, _, d1 = geo.closest_boundary_batch(poly, pts)
    mirrored = pts * np.array([-1.0, 1.0])
    _, _, d2 = geo.closest_boundary_batch(poly, mirrored)
    assert np.abs(d1 - d2).max() < 1e-10


def test_contains_simple(domains):
    disk = domains["disk"].polygon
    assert geo.contains(disk, (0.0, 0.0))
    assert not geo.contains(disk, (2.0, 0.0))
    assert geo.contains(domains["flower"].polygon, (1.1, 0.0))


def test_contains_boundary_band_excluded(domains):
    disk = domains["disk"].polygon
    assert not geo.contains(disk, (1.0, 0.0))


@pytest.mark.parametrize("name,predicate", [
    ("disk", lambda p: np.hypot(p[:, 0], p[:, 1]) < 1.0),
    ("lens", lambda p: (np.hypot(p[:, 0] - 0.4, p[:, 1]) < 1.0)
                       & (np.hypot(p[:, 0] + 0.4, p[:, 1]) < 1.0)),
    ("flower", lambda p: np.hypot(p[:, 0], p[:, 1])
                         < 1.0 + 0.2 * np.cos(5 * np.arctan2(p[:, 1], p[:, 0]))),
])
def test_contains_matches_analytic_description(domains, name, predicate):
    poly = domains[name].polygon
    rng = np.random.default_rng(7)
    lo, hi = poly.bbox[0] - 0.2, poly.bbox[1] + 0.2
    pts = rng.uniform(lo, hi, size=(100000, 2))
    got = geo.contains_batch(poly, pts)
    want = predicate(pts)
    mism = got != want
    if mism.any():
        _, _, d = geo.closest_boundary_batch(poly, pts[mism])
        assert (d <= 1e-8).all(), "disagreement outside the boundary band"


def test_signed_distance(domains):
    d = geo.signed_distance_batch(domains["disk"].polygon,
                                  [[0, 0], [2, 0], [0.5, 0]])
    assert np.allclose(d, [-1.0, 1.0, -0.5], atol=1e-10)


def test_polygon_invariants(domains):
    lens = domains["lens"].polygon
    assert len(lens.corners) == 2
    for j in lens.corners:
        assert 0 < j.opening < math.pi - 1e-6
        assert j.opening == pytest.approx(2 * math.acos(0.4), abs=1e-9)
    disk = domains["disk"].polygon
    assert len(disk.corners) == 0
    assert len(disk.junctions) == 1 and not disk.junctions[0].is_corner


def test_arc_endpoints_match_evaluation(domains):
    for case in domains.values():
        for arc in case.polygon.arcs:
            assert np.linalg.norm(arc.point(0.0) - arc.start) <= 1e-12
            assert np.linalg.norm(arc.point(1.0) - arc.end) <= 1e-12


def test_arc_regularity(domains):
    s = np.linspace(0, 1, 257)
    for case in domains.values():
        for arc in case.polygon.arcs:
            assert np.linalg.norm(arc.tangent(s), axis=1).min() > 0


def test_reversed_orientation_rejected():
    with pytest.raises(GeometryError):
        geo.CurvilinearPolygon(
            [geo.circle_arc(0, (0, 0), 1.0, 0.0, -2 * math.pi)])


def test_open_chain_rejected():
    a0 = geo.circle_arc(0, (0, 0), 1.0, 0.0, math.pi)
    a1 = geo.line_arc(1, (-1.0, 0.0), (0.5, 0.0))  # does not close the loop
    with pytest.raises(GeometryError):
        geo.CurvilinearPolygon([a0, a1])


def test_manufactured_solutions_vanish_on_boundary(domains):
    for name in ("disk", "lens", "square"):
        case = domains[name]
        pts, _, _ = case.polygon.boundary_samples(512)
        vals = case.manufactured.u(pts[:, 0], pts[:, 1])
        assert np.abs(vals).max() <= 1e-10


def test_manufactured_sources_match_laplacian(domains, rng):
    # central differences as the provenance oracle for the hand-derived f
    eps = 1e-5
    for name in ("disk", "lens", "square"):
        case = domains[name]
        pts = []
        while len(pts) < 64:
            cand = rng.uniform(case.polygon.bbox[0] + 0.2,
                               case.polygon.bbox[1] - 0.2, size=(256, 2))
            inside = geo.signed_distance_batch(case.polygon, cand) < -0.05
            pts.extend(cand[inside][:64 - len(pts)])
        pts = np.asarray(pts)
        u = case.manufactured.u
        x, y = pts[:, 0], pts[:, 1]
        lap = (u(x + eps, y) + u(x - eps, y) + u(x, y + eps) + u(x, y - eps)
               - 4 * u(x, y)) / eps ** 2
        f = case.manufactured.f(x, y)
        scale = np.abs(f).max()
        assert np.abs(lap + f).max() <= 1e-4 * max(scale, 1.0)


def test_manufactured_gradients_match_finite_differences(domains, rng):
    eps = 1e-6
    for name in ("disk", "lens", "square"):
        case = domains[name]
        pts = rng.uniform(-0.4, 0.4, size=(32, 2))
        u, grad = case.manufactured.u, case.manufactured.grad
        x, y = pts[:, 0], pts[:, 1]
        gx = (u(x + eps, y) - u(x - eps, y)) / (2 * eps)
        gy = (u(x, y + eps) - u(x, y - eps)) / (2 * eps)
        g = grad(x, y)
        assert np.abs(g[:, 0] - gx).max() < 1e-8
        assert np.abs(g[:, 1] - gy).max() < 1e-8


def test_domain_file_round_trip(tmp_path):
    path = tmp_path / "half.dom"
    path.write_text(
        "# right half disk\n"
        "circle 0 0 1 -1.5707963267948966 1.5707963267948966\n"
        "line 0 1 0 -1\n")
    poly = geo.load_domain_file(path)
    assert len(poly.arcs) == 2
    assert geo.contains(poly, (0.5, 0.0))
    assert not geo.contains(poly, (-0.5, 0.0))
    assert len(poly.corners) == 2


def test_domain_file_bad_line(tmp_path):
    path = tmp_path / "bad.dom"
    path.write_text("circle 0 0\n")
    with pytest.raises(GeometryError):
        geo.load_domain_file(path)
