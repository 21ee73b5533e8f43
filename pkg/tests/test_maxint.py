import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convpos.bodies import Ellipsoid, HPolytope, VPolytope, apply_affine, ball, cross_polytope, cube, translated
from convpos.errors import UnsupportedBodyError
from convpos.linalg import AffineMap, matrix_exp
from convpos.maxint import (
    FlowOptions, anisotropy, boundary_integrals, flow_csv, intersection_volume, isotropy_report, maxint_flow,
    radial_derivative, volume_derivative,
)

UNIT = VPolytope([[0, 0], [1, 0], [1, 1], [0, 1]])
OFFSET_RECT = VPolytope([[0.25, -0.5], [0.75, -0.5], [0.75, 0.5], [0.25, 0.5]])


def random_polytope(rng, n, k=None, center=None):
    k = k or (6 if n == 2 else 9)
    X = rng.standard_normal((k, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    X *= rng.uniform(0.7, 1.3, (k, 1))
    return VPolytope(X + (0 if center is None else center))


def traceless(rng, n):
    A = rng.standard_normal((n, n))
    return A - np.trace(A) / n * np.eye(n)


# ------------------------------------------------------------ intersection volume


def test_volume_disjoint():
    assert intersection_volume(cube(2), translated(cube(2), [3.0, 0.0])).volume == 0.0


def test_volume_nested():
    r = intersection_volume(cube(2), UNIT)
    assert r.method == "exact" and r.volume == pytest.approx(1.0, abs=1e-12)


def test_volume_offset_unit_squares():
    assert intersection_volume(UNIT, translated(UNIT, [0.5, 0.0])).volume == pytest.approx(0.5, abs=1e-12)


def test_volume_lens_of_disks():
    # oracle: circular lens area 2 arccos(d/2) − (d/2)√(4 − d²) for unit disks
    for d in (0.3, 1.0, 1.7):
        ref = 2 * math.acos(d / 2) - d / 2 * math.sqrt(4 - d * d)
        got = intersection_volume(ball(2), translated(ball(2), [d, 0.0])).volume
        assert got == pytest.approx(ref, abs=1e-12)


def test_volume_box_3d():
    r = intersection_volume(cube(3), translated(cube(3), [0.5, 0.2, 0.1]))
    assert r.volume == pytest.approx(1.5 * 1.8 * 1.9, abs=1e-12)


def test_volume_disk_square():
    # oracle: disk of radius 1.2 minus four circular segments of height 0.2
    r, h = 1.2, 0.2
    seg = r * r * math.acos((r - h) / r) - (r - h) * math.sqrt(2 * r * h - h * h)
    got = intersection_volume(cube(2), ball(2, r)).volume
    assert got == pytest.approx(math.pi * r * r - 4 * seg, abs=1e-12)


def test_volume_swap_symmetry():
    rng = np.random.default_rng(3)
    for n in (2, 3):
        for _ in range(5):
            K, L = random_polytope(rng, n), random_polytope(rng, n, center=0.3 * rng.standard_normal(n))
            assert intersection_volume(K, L).volume == pytest.approx(intersection_volume(L, K).volume, abs=1e-13)


def test_volume_monte_carlo_agrees_and_is_deterministic():
    K, L = cube(2), translated(ball(2), [0.5, 0.3])
    ex = intersection_volume(K, L).volume
    a = intersection_volume(K, L, method="mc", samples=200_000, seed=4)
    b = intersection_volume(K, L, method="mc", samples=200_000, seed=4, jobs=3)
    assert a.method == "monte-carlo" and a.stderr > 0
    assert abs(a.volume - ex) <= 4 * a.stderr
    assert a.volume == b.volume


def test_volume_exact_unsupported():
    with pytest.raises(UnsupportedBodyError, match="mc"):
        intersection_volume(cube(5), cross_polytope(5), method="exact")


# ------------------------------------------------------------ boundary integrals


def test_full_boundary_square():
    # per facet: length 2, centroid ±e_i, normal ±e_i → 2 e_i⊗e_i twice each
    bi = boundary_integrals(None, cube(2))
    np.testing.assert_allclose(bi.flux, 0.0, atol=1e-15)
    np.testing.assert_allclose(bi.moment, 4 * np.eye(2), atol=1e-14)
    assert bi.trace == pytest.approx(2 * cube(2).volume())


def test_offset_rectangle_integrals():
    # hand clipping: facets x=3/4, x=1/4, y=1/2 each of length 1/2 inside [0,1]²,
    # centroids (3/4,1/4), (1/4,1/4), (1/2,1/2); moment = Σ length·centroid⊗normal
    bi = boundary_integrals(UNIT, OFFSET_RECT)
    np.testing.assert_allclose(bi.flux, [0.0, 0.5], atol=1e-15)
    ref = 0.5 * (np.outer([0.75, 0.25], [1, 0]) + np.outer([0.25, 0.25], [-1, 0]) + np.outer([0.5, 0.5], [0, 1]))
    np.testing.assert_allclose(bi.moment, ref, atol=1e-15)
    assert not bi.one_sided


def test_strictly_inside_divergence():
    L = translated(cube(2, 0.4), [0.1, -0.2])
    bi = boundary_integrals(cube(2), L)
    np.testing.assert_allclose(bi.flux, 0.0, atol=1e-15)
    assert bi.trace == pytest.approx(2 * L.volume(), abs=1e-12)


def test_coincident_facets_flagged():
    assert boundary_integrals(cube(2), cube(2)).one_sided
    assert boundary_integrals(UNIT, translated(UNIT, [0.5, 0.0])).one_sided


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3, 4]))
def test_closed_surface_identities(seed, n):
    L = random_polytope(np.random.default_rng(seed), n, k=3 * n + 2)
    bi = boundary_integrals(None, L)
    assert bi.flux_norm <= 1e-12
    assert abs(bi.trace - n * L.volume()) <= 1e-9


def test_ellipse_full_boundary():
    E = Ellipsoid(np.array([[2.0, 0.3], [0.3, 1.0]]), [0.2, -0.1])
    bi = boundary_integrals(None, E)
    assert bi.flux_norm <= 1e-12
    assert bi.trace == pytest.approx(2 * E.volume(), abs=1e-10)


# ------------------------------------------------------------ derivatives


def test_offset_rectangle_derivative():
    assert volume_derivative(UNIT, OFFSET_RECT, u=[0.0, 1.0]) == 0.5


def test_closed_surface_derivative_zero():
    bi = boundary_integrals(None, cube(2))
    assert volume_derivative(cube(2), cube(2), u=[0.3, -0.7], integrals=bi) == 0.0


def _fd(K, L, u, A, h=1e-5):
    def V(t):
        return intersection_volume(K, apply_affine(L, AffineMap(matrix_exp(t * A), t * u))).volume

    return (V(h) - V(-h)) / (2 * h)


@pytest.mark.parametrize("n", [2, 3])
def test_derivative_matches_finite_difference(n):
    rng = np.random.default_rng(100 + n)
    done = 0
    while done < 10:
        K = random_polytope(rng, n)
        L = random_polytope(rng, n, center=0.4 * rng.standard_normal(n))
        bi = boundary_integrals(K, L)
        if bi.one_sided or intersection_volume(K, L).volume == 0.0:
            continue
        u, A = rng.standard_normal(n), traceless(rng, n)
        an = volume_derivative(K, L, u=u, A=A, integrals=bi)
        assert abs(an - _fd(K, L, u, A)) <= 1e-6
        done += 1


def test_derivative_curved_pair():
    K = Ellipsoid(np.diag([1.3, 0.8]), [0.1, 0.0])
    L = translated(cube(2, 0.9), [0.3, -0.2])
    rng = np.random.default_rng(9)
    u, A = rng.standard_normal(2), traceless(rng, 2)
    assert abs(volume_derivative(K, L, u=u, A=A) - _fd(K, L, u, A)) <= 1e-6


def test_radial_quadrature_cross_check():
    K = HPolytope([[1, 0], [0, 1], [-1, -0.5], [-0.3, 1]], [1.0, 0.9, 1.1, 1.0])
    L = apply_affine(cube(2), AffineMap(np.array([[0.9, 0.2], [0.0, 0.8]]), [0.15, 0.05]))
    rng = np.random.default_rng(1)
    u, A = rng.standard_normal(2), traceless(rng, 2)
    exact = volume_derivative(K, L, u=u, A=A)
    assert abs(radial_derivative(K, L, u=u, A=A) - exact) <= 1e-4


# ------------------------------------------------------------ flow and certificate


def test_flow_stationary_start():
    tr = maxint_flow(cube(2), cube(2, 1.0))
    assert tr.converged and len(tr.steps) == 1


def test_flow_offset_disks_concentric():
    tr = maxint_flow(ball(2), translated(ball(2), [0.4, 0.2]))
    assert tr.converged
    last = tr.steps[-1]
    assert last.flux_norm <= 1e-6 and last.anisotropy <= 1e-5
    assert last.volume == pytest.approx(math.pi, abs=1e-7)


def test_flow_small_square_recenters_against_grid_search():
    K, L = cube(2), translated(cube(2, 0.5), [0.9, 0.2])
    tr = maxint_flow(K, L)
    assert tr.converged
    # oracle: best translation on a grid (the linear part cannot raise volume above vol(L))
    g = np.linspace(-1.5, 1.5, 61)
    best = max(intersection_volume(K, translated(cube(2, 0.5), [x, y])).volume for x in g for y in g)
    assert tr.steps[-1].volume == pytest.approx(best, abs=1e-12)
    assert tr.steps[-1].anisotropy <= 1e-5


@pytest.mark.parametrize("mode", ["full-affine", "positive"])
def test_flow_monotone_and_unimodular(mode):
    K = HPolytope([[1, 0], [0, 1], [-1, -1]], [1.0, 1.0, 1.0])
    L = translated(cube(2, 0.6), [0.4, 0.1])
    tr = maxint_flow(K, L, mode, FlowOptions(max_iter=40))
    vols = [s.volume for s in tr.steps]
    assert all(b >= a for a, b in zip(vols, vols[1:]))
    for s in tr.steps:
        assert abs(np.linalg.det(s.linear) - 1.0) <= 1e-12
        if mode == "positive":
            np.testing.assert_allclose(s.linear, s.linear.T, atol=1e-12)
    text = flow_csv(tr)
    assert text.splitlines()[0] == "step,volume,flux_norm,anisotropy,step_size,det_drift"
    assert len(text.splitlines()) == len(tr.steps) + 1


def test_flow_3d_boxes():
    tr = maxint_flow(cube(3), translated(cube(3), [0.3, 0.2, 0.1]), opts=FlowOptions(max_iter=30))
    assert tr.converged and tr.steps[-1].volume == pytest.approx(8.0, abs=1e-7)


def test_flow_monte_carlo_stops():
    tr = maxint_flow(cube(2), translated(cube(2), [0.5, 0.3]),
                     opts=FlowOptions(volume_method="mc", samples=20_000, max_iter=30))
    assert tr.method == "monte-carlo"
    assert tr.status in ("noise-limited", "max-iter", "converged")


def test_flow_requires_overlap():
    with pytest.raises(ValueError):
        maxint_flow(cube(2), translated(cube(2), [5.0, 0.0]))


def test_isotropy_concentric_squares():
    rep = isotropy_report(cube(2), cube(2, 0.5))
    assert rep["flux_norm"] == 0.0 and rep["anisotropy_full"] == 0.0 and rep["anisotropy_sym"] == 0.0
    assert rep["swapped"]["flux_norm"] == 0.0 and rep["swapped"]["anisotropy_full"] == 0.0
    assert rep["certification"] == "first-order"


def test_isotropy_after_flow():
    tr = maxint_flow(ball(2), translated(ball(2), [0.4, 0.2]))
    rep = isotropy_report(tr.K, tr.final)
    assert rep["flux_norm"] <= 2e-6 and rep["anisotropy_full"] <= 2e-5
    assert rep["swapped"]["flux_norm"] <= 2e-6 and rep["swapped"]["anisotropy_full"] <= 2e-5


def _clipped_edge_moment(V, lo=-1.0, hi=1.0):
    """Σ over edges of the CCW polygon V of length·centroid⊗normal, clipped to [lo, hi]²."""
    M = np.zeros((2, 2))
    for p, q in zip(V, np.roll(V, -1, axis=0)):
        d = q - p
        t0, t1 = 0.0, 1.0
        for k in range(2):
            for bound, sgn in ((lo, -1), (hi, 1)):
                num, den = sgn * (bound - p[k]), sgn * d[k]
                if den == 0:
                    if num < 0:
                        t0, t1 = 1.0, 0.0
                elif den > 0:
                    t1 = min(t1, num / den)
                else:
                    t0 = max(t0, num / den)
        if t1 <= t0:
            continue
        a, b = p + t0 * d, p + t1 * d
        nrm = np.array([d[1], -d[0]]) / np.linalg.norm(d)
        M += np.linalg.norm(b - a) * np.outer((a + b) / 2, nrm)
    return M


def test_isotropy_detects_shear():
    S = 0.9 * np.array([[1.0, 0.5], [0.0, 1.0]])
    Q = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], float)
    rep = isotropy_report(cube(2), VPolytope(Q @ S.T))
    M = _clipped_edge_moment(Q @ S.T)
    assert rep["anisotropy_full"] == pytest.approx(np.linalg.norm(2 * M / np.trace(M) - np.eye(2)), abs=1e-12)
    assert rep["anisotropy_full"] > 0.1


def test_anisotropy_conventions():
    assert anisotropy(np.zeros((2, 2))) == 0.0
    assert anisotropy(-np.eye(2)) == math.inf
    assert anisotropy(3 * np.eye(3)) == 0.0
