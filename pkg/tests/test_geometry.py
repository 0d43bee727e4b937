import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from datalyap.errors import DegenerateInput, OutsideRegion
from datalyap.geometry import (
    BOUNDARY,
    HOLE,
    INTERIOR,
    Polytope,
    Tessellation,
    delaunay_tessellate,
    intervals_1d,
    refine_cell,
)


@pytest.fixture(scope="module")
def annulus():
    return delaunay_tessellate(Polytope.cube(1.0), Polytope.cube(0.4), seeds=32, rng_seed=0)


def brute_membership(tess, x, tol=1e-9):
    # independent oracle: solve the barycentric system per cell
    out = set()
    for k, cell in enumerate(tess.cells):
        P = tess.points[cell]
        T = np.vstack([P.T, np.ones(len(P))])
        lam = np.linalg.solve(T, np.append(x, 1.0))
        if lam.min() >= -tol:
            out.add(k)
    return out


def test_polytope_box_membership():
    P = Polytope.box([0, 0], [1, 2])
    assert P.dim == 2
    assert P.contains([[0.5, 1.0]])[0]
    assert not P.contains([[1.5, 1.0]])[0]
    assert P.on_boundary([[1.0, 1.0]])[0]
    assert P.volume() == pytest.approx(2.0)


def test_polytope_point_has_no_interior():
    assert not Polytope.point([0, 0]).has_interior
    assert Polytope.cube(0.1).has_interior


def test_polytope_distance_box():
    P = Polytope.cube(1.0)
    d = P.distance(np.array([[2.0, 0.0], [2.0, 2.0], [0.0, 0.0]]))
    assert np.allclose(d, [1.0, np.sqrt(2), 0.0])


def test_polytope_distance_polygon_matches_box():
    V = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
    rot = np.array([[0, -1], [1, 0]], dtype=float)
    P = Polytope.from_vertices(V @ rot.T)
    X = np.random.default_rng(0).uniform(-3, 3, (200, 2))
    assert np.allclose(P.distance(X), Polytope.cube(1.0).distance(X), atol=1e-10)


def test_polytope_round_trip():
    P = Polytope.cube(0.4)
    assert Polytope.from_dict(P.to_dict()) == P


def test_square_corners_give_two_triangles():
    sq = Polytope.box([0, 0], [1, 1])
    tess = delaunay_tessellate(sq, seeds=np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float))
    assert tess.n_cells == 2
    assert tess.volumes().sum() == pytest.approx(1.0)


def test_annulus_cover_and_hole(annulus):
    annulus.check(n_mc=10_000)
    assert annulus.volumes().sum() == pytest.approx(4.0 - 0.64, rel=1e-9)
    X = np.random.default_rng(1).uniform(-1, 1, (10_000, 2))
    ring = np.abs(X).max(1) > 0.4
    inside = annulus.membership(X[ring]).any(axis=1)
    assert inside.mean() >= 0.999
    bary = annulus.barycenters()
    assert not (np.abs(bary).max(1) < 0.4).any()


def test_tessellation_deterministic():
    region, hole = Polytope.cube(0.5), Polytope.cube(0.12)
    a = delaunay_tessellate(region, hole, seeds=32, rng_seed=7)
    b = delaunay_tessellate(region, hole, seeds=32, rng_seed=7)
    assert a.dumps() == b.dumps()


def test_tessellation_json_round_trip(annulus):
    again = Tessellation.loads(annulus.dumps())
    assert again.dumps() == annulus.dumps()


def test_degenerate_pool_rejected():
    flat = Polytope(np.array([[0.0, 1.0], [0.0, -1.0], [1.0, 0.0], [-1.0, 0.0]]), np.array([0.0, 0.0, 1.0, 0.0]), [[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(DegenerateInput):
        delaunay_tessellate(flat, seeds=np.array([[0.5, 0.0]]))
    with pytest.raises(DegenerateInput):
        Polytope(np.array([[1.0, 0.0]]), np.array([1.0])).check()


def test_refine_single_triangle():
    tri = Polytope.from_vertices([[0, 0], [1, 0], [0, 1]])
    tess = delaunay_tessellate(tri, seeds=np.zeros((0, 2)))
    assert tess.n_cells == 1
    ref = refine_cell(tess, 0)
    assert ref.n_cells == 3
    centre = np.array([1 / 3, 1 / 3])
    assert all(np.any(np.all(np.isclose(ref.points[c], centre), axis=1)) for c in ref.cells)
    assert ref.volumes().sum() == pytest.approx(0.5)


def test_locate_barycenter_and_shared_edge(annulus):
    bary = annulus.barycenters()
    for k in range(annulus.n_cells):
        assert annulus.locate(bary[k]) == {k}
    shared = [(f, ks) for f, ks in annulus.facets().items() if len(ks) == 2]
    assert shared
    for f, ks in shared:
        mid = annulus.points[list(f)].mean(axis=0)
        assert annulus.locate(mid) == set(ks)


def test_locate_outside_raises(annulus):
    with pytest.raises(OutsideRegion):
        annulus.locate(np.array([3.0, 0.0]))
    with pytest.raises(OutsideRegion):
        annulus.locate(np.array([0.0, 0.0]))


def test_locate_matches_bruteforce(annulus):
    X = np.random.default_rng(3).uniform(-1, 1, (300, 2))
    X = X[np.abs(X).max(1) > 0.41]
    for x in X:
        assert annulus.locate(x) == brute_membership(annulus, x)


def test_boundary_flags():
    sq = delaunay_tessellate(Polytope.box([0, 0], [1, 1]), seeds=8, rng_seed=0)
    corner = np.where(np.all(np.isclose(sq.points, [1, 1]), axis=1))[0][0]
    assert sq.flags[corner] == BOUNDARY
    region, hole = Polytope.cube(1.0), Polytope.cube(0.4)
    tess = delaunay_tessellate(region, hole, seeds=16, rng_seed=0, extra_fixed=np.array([[0.4, 0.1]]))
    v = np.where(np.all(np.isclose(tess.points, [0.4, 0.1]), axis=1))[0][0]
    assert tess.flags[v] == HOLE
    assert set(np.unique(tess.flags)) <= {INTERIOR, BOUNDARY, HOLE}


def test_point_prior_flags_origin():
    tess = delaunay_tessellate(Polytope.cube(0.4), Polytope.point([0, 0]), seeds=8, rng_seed=0)
    origin = np.where(np.all(np.isclose(tess.points, 0), axis=1))[0]
    assert len(origin) == 1 and tess.flags[origin[0]] == HOLE
    assert tess.volumes().sum() == pytest.approx(0.64)


def test_intervals_1d():
    tess = intervals_1d([0.0, 0.5, 1.0])
    assert tess.n_cells == 2
    order = np.argsort(tess.points[:, 0])
    assert list(tess.flags[order]) == [BOUNDARY, INTERIOR, BOUNDARY]


@settings(max_examples=15, deadline=None)
@given(n=st.integers(4, 40), seed=st.integers(0, 10_000))
def test_tessellation_volume_property(n, seed):
    tess = delaunay_tessellate(Polytope.cube(1.0), Polytope.cube(0.3), seeds=n, rng_seed=seed)
    assert tess.volumes().sum() == pytest.approx(4.0 - 0.36, rel=1e-9)
    assert (tess.volumes() > 0).all()
