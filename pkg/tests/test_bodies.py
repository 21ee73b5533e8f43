import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convpos.bodies import (
    AffineImage, Ellipsoid, HPolytope, LpBall, VPolytope, apply_affine, as_polytope, ball, body_to_spec, contains,
    cross_polytope, cube, dump_body, gauge, hausdorff_distance, load_body, parse_body, polar_dual, scaled, support,
    translated,
)
from convpos.errors import BodySpecError, SingularMatrixError, UnsupportedBodyError
from convpos.linalg import AffineMap, haar_orthogonal
from convpos.nets import direction_net

SQ = cube(2)
DIAMOND = cross_polytope(2)
DISK = ball(2)


def _bodies_with_origin():
    """A zoo covering every representation."""
    return [
        cube(3), cross_polytope(3), ball(3), LpBall(4, 3, 1.3),
        HPolytope([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1]], [1.0, 2.0, 1.5, 1.0]),
        VPolytope([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, -1.5]]),
        Ellipsoid(np.diag([2.0, 1.0, 0.5]), [0.1, -0.2, 0.05]),
        apply_affine(LpBall(4, 3), AffineMap(np.diag([1.0, 2.0, 0.5]) @ haar_orthogonal(3, 1))),
    ]


# ------------------------------------------------------------ support and gauge


def test_support_examples():
    assert support(SQ, [1.0, 0.0]) == pytest.approx(1.0)
    assert support(DIAMOND, [1.0, 1.0]) == pytest.approx(1.0)
    assert support(Ellipsoid(np.diag([2.0, 1.0])), [1.0, 0.0]) == pytest.approx(2.0)


def test_gauge_examples():
    assert gauge(SQ, [0.5, 0.5]) == pytest.approx(0.5)
    assert gauge(DIAMOND, [1.0, 1.0]) == pytest.approx(2.0)
    for B in (SQ, DIAMOND, DISK, LpBall(4, 2)):
        x = B.support_point(np.array([0.3, 0.8]))
        assert gauge(B, x) == pytest.approx(1.0, abs=1e-12)


def test_support_polytope_representations_agree():
    # the same square as V- and H-polytope and as lp-ball
    V = VPolytope([[1, 1], [-1, 1], [-1, -1], [1, -1]])
    H = HPolytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 1, 1])
    net = direction_net(2, 64)
    np.testing.assert_allclose(V.support(net), SQ.support(net), atol=1e-14)
    np.testing.assert_allclose(H.support(net), SQ.support(net), atol=1e-12)
    np.testing.assert_allclose(V.gauge(net), H.gauge(net), atol=1e-12)


@pytest.mark.parametrize("i", range(8))
def test_gauge_is_support_of_polar(i):
    B = _bodies_with_origin()[i]
    rng = np.random.default_rng(i)
    X = rng.standard_normal((50, 3))
    np.testing.assert_allclose(gauge(B, X), support(polar_dual(B), X), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("i", range(8))
def test_gauge_homogeneous_and_membership(i):
    B = _bodies_with_origin()[i]
    rng = np.random.default_rng(10 + i)
    X = rng.standard_normal((40, 3))
    g = np.atleast_1d(B.gauge(X))
    np.testing.assert_allclose(np.atleast_1d(B.gauge(2.5 * X)), 2.5 * g, rtol=1e-12)
    inside = B.contains_points(X)
    assert np.array_equal(inside, g <= 1.0)


# ------------------------------------------------------------ affine images


def test_apply_affine_scalar_ball():
    E = apply_affine(DISK, AffineMap(2 * np.eye(2)))
    np.testing.assert_allclose(support(E, direction_net(2, 16)), 2.0)
    rot = np.array([[1.0, 1.0], [-1.0, 1.0]]) / math.sqrt(2)
    E2 = apply_affine(DISK, AffineMap(rot @ np.diag([2.0, 1.0])))
    assert isinstance(E2, Ellipsoid)


def test_apply_affine_diamond_rotation():
    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    R = np.array([[c, -s], [s, c]])
    B = apply_affine(DIAMOND, R)
    assert isinstance(B, (VPolytope, HPolytope))
    V = np.array(sorted(map(tuple, np.round(B.vertices, 12))))
    h = math.sqrt(2) / 2
    np.testing.assert_allclose(V, sorted([(-h, -h), (-h, h), (h, -h), (h, h)]), atol=1e-12)


def test_apply_affine_hpolytope_preserves_membership():
    H = HPolytope([[1, 0], [0, 1], [-1, -1]], [1.0, 1.0, 1.0])
    A = np.array([[1.5, 0.3], [-0.2, 0.8]])
    z = np.array([0.2, -0.1])
    img = apply_affine(H, AffineMap(A, z))
    X = np.random.default_rng(1).uniform(-3, 3, (400, 2))
    assert np.array_equal(H.contains_points(X), img.contains_points(X @ A.T + z, tol=0.0))


@pytest.mark.parametrize("i", range(8))
def test_apply_affine_composition(i):
    B = _bodies_with_origin()[i]
    rng = np.random.default_rng(20 + i)
    T1 = AffineMap(np.eye(3) + 0.3 * rng.standard_normal((3, 3)), 0.1 * rng.standard_normal(3))
    T2 = AffineMap(haar_orthogonal(3, i) @ np.diag([1.2, 0.7, 1.0]), 0.1 * rng.standard_normal(3))
    net = direction_net(3, 256)
    a = support(apply_affine(apply_affine(B, T1), T2), net)
    b = support(apply_affine(B, T2.compose(T1)), net)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_apply_affine_singular():
    with pytest.raises(SingularMatrixError):
        apply_affine(SQ, np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_ell4_image_is_affine_image():
    B = apply_affine(LpBall(4, 2), np.array([[1.0, 0.5], [0.0, 1.0]]))
    assert isinstance(B, AffineImage)
    with pytest.raises(UnsupportedBodyError):
        polar_dual(translated(B, [0.1, 0.0]))


def test_ell4_polar_exponent():
    P = polar_dual(LpBall(4, 2, 2.0))
    assert P.p == pytest.approx(4 / 3) and P.radius == 0.5
    with pytest.raises(UnsupportedBodyError):
        dump_body(P)


# ------------------------------------------------------------ polarity


def test_polar_examples():
    P = polar_dual(DIAMOND)
    assert isinstance(P, LpBall) and P.p == math.inf and P.radius == 1.0
    E = polar_dual(Ellipsoid(np.diag([2.0, 1.0])))
    np.testing.assert_allclose(E.shape, np.diag([0.5, 1.0]), atol=1e-14)


@pytest.mark.parametrize("i", range(7))
def test_bipolar(i):
    B = _bodies_with_origin()[i]
    net = direction_net(3, 256)
    np.testing.assert_allclose(support(polar_dual(polar_dual(B)), net), support(B, net), rtol=1e-9, atol=1e-12)


# ------------------------------------------------------------ containment and Hausdorff distance


def test_contains_examples():
    ok, v = contains(SQ, DIAMOND)
    assert ok and v == 0.0
    ok, v = contains(DIAMOND, SQ)
    assert not ok and v == pytest.approx(1.0)
    assert contains(DISK, ball(2, 0.999))[0]


def test_hausdorff_examples():
    assert hausdorff_distance(SQ, SQ) == 0.0
    assert hausdorff_distance(DISK, ball(2, 2.0)) == pytest.approx(1.0, abs=1e-12)


def test_hausdorff_square_diamond_dense_net():
    # oracle: max over a very fine circle of ‖u‖_1 − ‖u‖_∞
    th = np.linspace(0, 2 * np.pi, 200_001)
    U = np.column_stack([np.cos(th), np.sin(th)])
    ref = np.max(np.abs(U).sum(1) - np.abs(U).max(1))
    d = hausdorff_distance(DIAMOND, SQ)
    assert d == pytest.approx(ref, abs=1e-9)
    assert d == pytest.approx(math.sqrt(2) / 2, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
def test_mutual_containment_implies_small_distance(r, dx, dy):
    A = translated(scaled(SQ, r), [dx, dy])
    B = VPolytope(as_polytope(A).vertices)
    tol = 1e-9
    if contains(A, B, tol)[0] and contains(B, A, tol)[0]:
        assert hausdorff_distance(A, B) <= tol * 2 * math.sqrt(2) * r + 1e-12


# ------------------------------------------------------------ file format


def test_parse_lp_ball():
    B = parse_body('{"type": "lp-ball", "p": "inf", "n": 3, "radius": 1.0}')
    assert isinstance(B, LpBall) and B.p == math.inf and B.dim == 3 and B.symmetric


def test_parse_square_symmetric_flag():
    B = parse_body({"type": "v-polytope", "vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]]})
    assert B.symmetric
    T = parse_body({"type": "v-polytope", "vertices": [[1, 0], [0, 1], [-1, -1]]})
    assert not T.symmetric


@pytest.mark.parametrize(
    "spec, where",
    [
        ({"type": "h-polytope", "normals": [[1, 0], [-1, 0], [0, 1]], "offsets": [1, 1, 1]}, "unbounded"),
        ({"type": "h-polytope", "normals": [[1, 0], [-1, 0], [0, 1], [0, -1]], "offsets": [1, 1, 0, 1]}, "offsets[2]"),
        ({"type": "v-polytope", "vertices": [[1, 0], [2, 0], [3, 0]]}, "vertices"),
        ({"type": "v-polytope", "vertices": [[1, 0], [2, 1], [2, -1]]}, "origin"),
        ({"type": "ellipsoid", "shape": [[1, 0], [0, -1]]}, "shape"),
        ({"type": "ellipsoid", "shape": [[1, 0], [0, 1]], "center": [2, 0]}, "center"),
        ({"type": "lp-ball", "p": 3, "n": 2}, "p"),
        ({"type": "lp-ball", "p": 2, "n": 0}, "n"),
        ({"type": "cylinder"}, "type"),
    ],
)
def test_parse_rejects(spec, where):
    with pytest.raises(BodySpecError, match=where.replace("[", r"\[").replace("]", r"\]")):
        parse_body(spec)


def test_parse_rejects_bad_json():
    with pytest.raises(BodySpecError, match="line 1"):
        parse_body("{not json")


@pytest.mark.parametrize("i", range(7))
def test_spec_round_trip(i, tmp_path):
    B = _bodies_with_origin()[i]
    p = tmp_path / "b.json"
    p.write_text(dump_body(B))
    B2 = load_body(p)
    net = direction_net(3, 128)
    np.testing.assert_allclose(support(B2, net), support(B, net), atol=1e-12)
    assert body_to_spec(B2)["type"] == body_to_spec(B)["type"]


def test_volumes():
    assert SQ.volume() == pytest.approx(4.0)
    assert DIAMOND.volume() == pytest.approx(2.0)
    assert DISK.volume() == pytest.approx(math.pi)
    assert cube(3).volume() == pytest.approx(8.0)
    assert Ellipsoid(np.diag([2.0, 1.0, 0.5])).volume() == pytest.approx(4 / 3 * math.pi)
