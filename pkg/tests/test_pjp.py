import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convpos.bodies import HPolytope, VPolytope, apply_affine, ball, contains, cross_polytope, cube, scaled
from convpos.errors import ConvergenceError
from convpos.linalg import AffineMap, haar_orthogonal
from convpos.pjp import (
    ContactPair, PjpProblem, SolverOptions, extract_contact_pairs, normalize_position, recenter_contact_pairs,
    solve_decomposition_weights, solve_positive_john, verify_positive_john,
)

TRI = HPolytope([[0, -1], [1, 1], [-1, 1]], [1.0, 1.0, 1.0])


def _solve(K, L, **kw):
    prob = PjpProblem(K, L, **kw)
    return prob, solve_positive_john(prob)


def _pairset(pairs, digits=6):
    return sorted((tuple(np.round(p.x, digits) + 0.0), tuple(np.round(p.y, digits) + 0.0)) for p in pairs)


# ------------------------------------------------------------ solver examples


def test_diamond_in_square_identity():
    _, sol = _solve(cube(2), cross_polytope(2))
    np.testing.assert_allclose(sol.P, np.eye(2), atol=1e-6)
    np.testing.assert_allclose(sol.z, 0.0, atol=1e-6)
    assert sol.kkt_residual <= 1e-6


def test_square_in_diamond_half():
    _, sol = _solve(cross_polytope(2), cube(2))
    np.testing.assert_allclose(sol.P, 0.5 * np.eye(2), atol=1e-6)
    np.testing.assert_allclose(sol.z, 0.0, atol=1e-6)


def test_scaling_ball_in_cube():
    _, sol = _solve(cube(2, 3.0), ball(2))
    np.testing.assert_allclose(sol.P, 3 * np.eye(2), atol=1e-6)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cube_in_cross_polytope(n):
    prob, sol = _solve(cross_polytope(n), cube(n))
    np.testing.assert_allclose(sol.P, np.eye(n) / n, atol=1e-6)
    pairs = extract_contact_pairs(prob, sol, frame="normalized")
    dec = solve_decomposition_weights(pairs, "symmetrized")
    assert dec.residual <= 1e-6
    assert abs(dec.weight_sum - n) <= 1e-5


def test_solution_is_feasible():
    K = HPolytope([[1, 0], [0, 1], [-1, -2], [-1, 1]], [1.0, 1.5, 2.0, 1.2])
    L = apply_affine(cube(2), AffineMap(np.array([[1.0, 0.4], [0.0, 0.6]])))
    prob, sol = _solve(K, L)
    img = apply_affine(L, AffineMap(sol.P, sol.z))
    assert contains(K, img, 1e-8)[0]
    assert np.all(np.linalg.eigvalsh(sol.P) > 0)


def test_nonconvergence_raises():
    with pytest.raises(ConvergenceError):
        solve_positive_john(PjpProblem(cube(2), cross_polytope(2)), SolverOptions(max_newton=2))


# ------------------------------------------------------------ contact pairs


def test_contact_pairs_axis_tangency():
    prob, sol = _solve(cube(2), cross_polytope(2))
    got = _pairset(extract_contact_pairs(prob, sol))
    want = sorted(((s * e).tolist(), (s * e).tolist()) for e in np.eye(2) for s in (1, -1))
    assert got == [(tuple(x), tuple(y)) for x, y in want]


def test_contact_pairs_square_in_diamond():
    prob, sol = _solve(cross_polytope(2), cube(2))
    pairs = extract_contact_pairs(prob, sol)
    eps = [np.array([a, b], float) for a in (1, -1) for b in (1, -1)]
    assert _pairset(pairs) == sorted((tuple(e / 2), tuple(e)) for e in eps)


def test_contact_pair_invariants():
    K = HPolytope([[1, 0], [0, 1], [-1, -2], [-1, 1]], [1.0, 1.5, 2.0, 1.2])
    prob, sol = _solve(K, ball(2))
    img = apply_affine(ball(2), AffineMap(sol.P, sol.z))
    for p in extract_contact_pairs(prob, sol):
        if p.flag:
            continue
        assert abs(p.pairing - 1.0) <= 1e-7
        assert abs(K.gauge(p.x) - 1.0) <= 1e-6
        assert abs(img.gauge(p.x) - 1.0) <= 1e-6


def test_concentric_balls_all_net_points_active():
    prob, sol = _solve(ball(2), ball(2))
    assert sol.approximate
    pairs = extract_contact_pairs(prob, sol)
    assert len(pairs) > 16
    for p in pairs:
        assert abs(np.linalg.norm(p.x) - 1.0) <= 1e-6


# ------------------------------------------------------------ decomposition weights


def test_weights_coordinate_pairs():
    pairs = [ContactPair(s * e, s * e) for e in np.eye(2) for s in (1.0, -1.0)]
    dec = solve_decomposition_weights(pairs, "symmetrized")
    np.testing.assert_allclose(dec.weights, 0.5, atol=1e-12)
    assert dec.matrix_residual <= 1e-12 and dec.vector_residual <= 1e-12


def test_weights_sign_vector_pairs_against_linear_solve():
    eps = [np.array([a, b], float) for a in (1, -1) for b in (1, -1)]
    pairs = [ContactPair(e / 2, e) for e in eps]
    dec = solve_decomposition_weights(pairs, "symmetrized")
    # oracle: the 4x4 square system in the unknown weights, solved directly
    rows = [np.concatenate([0.5 * (np.outer(e / 2, e) + np.outer(e, e / 2)).ravel()[[0, 1, 3]], e]) for e in eps]
    A = np.array(rows).T
    t = np.array([1.0, 0.0, 1.0, 0.0, 0.0])
    ref = np.linalg.lstsq(A, t, rcond=None)[0]
    np.testing.assert_allclose(dec.weights, ref, atol=1e-12)
    np.testing.assert_allclose(dec.weights, 0.5, atol=1e-12)
    assert dec.weight_sum == pytest.approx(2.0)


def test_weights_rank_deficient():
    dec = solve_decomposition_weights([ContactPair(np.array([1.0, 0.0]), np.array([1.0, 0.0]))], "symmetrized")
    assert dec.matrix_residual >= 1.0 - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_trace_identity(seed):
    # random polygon container around a random smaller body
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 8))
    ang = np.sort(rng.uniform(0, 2 * np.pi, m)) + 0.0
    normals = np.column_stack([np.cos(ang), np.sin(ang)])
    if np.max(np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))) >= np.pi - 0.05:
        return
    K = HPolytope(normals, rng.uniform(0.8, 1.5, m))
    prob, sol = _solve(K, cross_polytope(2))
    for mode in ("symmetrized", "genuine"):
        dec = solve_decomposition_weights(extract_contact_pairs(prob, sol, frame="normalized"), mode)
        if dec.residual <= 1e-6:
            assert abs(dec.weight_sum - 2) <= 1e-5


# ------------------------------------------------------------ normalization and recentering


def test_normalize_identity_solution_is_noop():
    prob, sol = _solve(cube(2), cross_polytope(2))
    K2, L2 = normalize_position(prob, sol)
    net = np.random.default_rng(0).standard_normal((50, 2))
    np.testing.assert_allclose(K2.support(net), prob.K.support(net), atol=1e-8)
    np.testing.assert_allclose(L2.support(net), prob.L.support(net), atol=1e-8)


def test_normalize_square_in_diamond():
    prob, sol = _solve(cross_polytope(2), cube(2))
    K2, L2 = normalize_position(prob, sol)
    net = np.random.default_rng(1).standard_normal((50, 2))
    np.testing.assert_allclose(L2.support(net), scaled(cube(2), 1 / math.sqrt(2)).support(net), atol=1e-8)
    np.testing.assert_allclose(K2.support(net), scaled(cross_polytope(2), math.sqrt(2)).support(net), atol=1e-8)
    sol2 = solve_positive_john(PjpProblem(K2, L2))
    np.testing.assert_allclose(sol2.P, np.eye(2), atol=1e-6)
    np.testing.assert_allclose(sol2.z, 0.0, atol=1e-6)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_normalize_random_pair_resolves_to_identity(seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((7, 2))
    V = V - V.mean(0)
    K = VPolytope(np.vstack([V, [[2, 0], [0, 2], [-2, 0], [0, -2]]]))
    L = VPolytope(rng.standard_normal((5, 2)) * 0.3 + np.array([[0.05, 0.0]]) + np.array([[0.4, 0], [0, 0.4], [-0.4, 0], [0, -0.4], [0.1, 0.1]]))
    prob, sol = _solve(K, L)
    K2, L2 = normalize_position(prob, sol)
    sol2 = solve_positive_john(PjpProblem(K2, L2))
    np.testing.assert_allclose(sol2.P, np.eye(2), atol=1e-6)
    np.testing.assert_allclose(sol2.z, 0.0, atol=1e-6)


def test_recenter_symmetric_pairs_noop():
    pairs = [ContactPair(s * e, s * e) for e in np.eye(2) for s in (1.0, -1.0)]
    rc = recenter_contact_pairs(pairs, np.full(4, 0.5))
    np.testing.assert_array_equal(rc.shift, 0.0)
    for p, q in zip(pairs, rc.pairs):
        np.testing.assert_array_equal(p.x, q.x)
        np.testing.assert_array_equal(p.y, q.y)
    np.testing.assert_array_equal(rc.weights, 0.5)


def test_recenter_sign_vector_pairs():
    eps = [np.array([a, b], float) for a in (1, -1) for b in (1, -1)]
    rc = recenter_contact_pairs([ContactPair(e / 2, e) for e in eps], np.full(4, 0.5))
    np.testing.assert_allclose(rc.shift, 0.0, atol=1e-15)


@pytest.mark.parametrize("L", [scaled(TRI, -1.0), TRI], ids=["reversed", "same"])
def test_recenter_simplex_in_simplex(L):
    prob, sol = _solve(TRI, L)
    pairs = extract_contact_pairs(prob, sol, frame="normalized")
    dec = solve_decomposition_weights(pairs, "genuine")
    assert dec.residual <= 1e-6
    rc = recenter_contact_pairs(pairs, dec.weights)
    # oracle: evaluate the rescaling by hand from the pairs and weights
    X = np.array([p.x for p in pairs])
    Y = np.array([p.y for p in pairs])
    c = dec.weights
    a = c @ X / 3
    gam = 1 / (1 - Y @ a)
    U, V, w = X - a, Y * gam[:, None], c / gam
    np.testing.assert_allclose(rc.shift, a, atol=1e-14)
    assert np.linalg.norm(w @ U) <= 1e-6 and np.linalg.norm(w @ V) <= 1e-6
    np.testing.assert_allclose(np.einsum("i,ij,ik->jk", w, U, V), np.eye(2), atol=1e-6)
    assert rc.sum_u <= 1e-6 and rc.sum_v <= 1e-6 and rc.matrix_residual <= 1e-6


def test_recenter_undefined_raises():
    pairs = [ContactPair(np.array([3.0, 0.0]), np.array([1 / 3, 0.0])), ContactPair(np.array([0.0, 1.0]), np.array([0.0, 1.0]))]
    with pytest.raises(ValueError, match="recentering undefined"):
        recenter_contact_pairs(pairs, np.array([6.0, 0.1]))


# ------------------------------------------------------------ certificate


def test_verify_examples():
    assert verify_positive_john(cube(2), cross_polytope(2)).is_pjp
    cert = verify_positive_john(cube(2), cross_polytope(2, 0.9))
    assert not cert.is_pjp and cert.message == "no contact pairs found"
    assert verify_positive_john(cross_polytope(2), cube(2, 0.5)).is_pjp
    assert not verify_positive_john(cross_polytope(2), cube(2)).contained


@pytest.mark.parametrize(
    "K, L",
    [(cube(2), cross_polytope(2)), (cross_polytope(2), cube(2)), (cube(3), ball(3)), (TRI, scaled(TRI, -1.0)),
     (cube(2), apply_affine(cross_polytope(2), np.diag([1.0, 0.5])))],
)
def test_certificate_soundness(K, L):
    # the solver returns (I, 0) exactly when the certificate holds
    _, sol = _solve(K, L)
    at_identity = np.linalg.norm(sol.P - np.eye(K.dim)) <= 1e-6 and np.linalg.norm(sol.z) <= 1e-6
    assert at_identity == verify_positive_john(K, L).is_pjp


# ------------------------------------------------------------ properties


@pytest.mark.parametrize("K, L", [(cross_polytope(3), cube(3)), (TRI, cube(2)), (cube(2), TRI), (cube(2), ball(2))])
def test_uniqueness_across_schedules(K, L):
    prob = PjpProblem(K, L)
    a = solve_positive_john(prob)
    b = solve_positive_john(prob, SolverOptions(mu0=10.0, mu_factor=3.0, mu_final=1e-10))
    assert np.linalg.norm(a.P - b.P) <= 1e-5 and np.linalg.norm(a.z - b.z) <= 1e-5


@pytest.mark.parametrize("K, L", [(cross_polytope(3), cube(3)), (TRI, cube(2)), (cube(2), ball(2))])
def test_shrinking_container_decreases_logdet(K, L):
    a = solve_positive_john(PjpProblem(K, L))
    b = solve_positive_john(PjpProblem(scaled(K, 0.9), L))
    assert b.logdet < a.logdet
    assert b.logdet == pytest.approx(a.logdet + K.dim * math.log(0.9), abs=1e-6)


def test_symmetric_mode_fixes_translation():
    prob, sol = _solve(cube(3), haar_rot_cross(3))
    assert prob.is_symmetric and sol.symmetric
    np.testing.assert_array_equal(sol.z, 0.0)


def haar_rot_cross(n):
    return apply_affine(cross_polytope(n), haar_orthogonal(n, 3))
