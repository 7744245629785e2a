import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactlab import geom
from contactlab.errors import DegeneratePoint, OutOfChart, TangencyViolation


def e(j, m):
    v = np.zeros(m, dtype=complex)
    v[j] = 1.0
    return v


def test_j_mul_on_real_pair():
    assert np.allclose(geom.to_real(geom.j_mul(geom.from_real([1.0, 0.0]))), [0.0, 1.0])


def test_j_mul_squares_to_minus_identity(rng):
    v = geom.from_real(rng.standard_normal((50, 6)))
    assert np.allclose(geom.j_mul(geom.j_mul(v)), -v)
    assert np.max(np.abs(geom.real_inner(v, geom.j_mul(v)))) < 1e-14


def test_real_roundtrip(rng):
    a = rng.standard_normal((4, 8))
    assert np.array_equal(geom.to_real(geom.from_real(a)), a)


def test_alpha_examples(rng):
    assert geom.alpha1_eval(e(0, 2), 1j * e(0, 2)) == pytest.approx(1.0)
    assert geom.alpha1_eval(e(0, 2), e(1, 2)) == pytest.approx(0.0)
    x = geom.random_sphere(2, 100, rng)
    assert np.allclose(geom.alpha1(x, 1j * x), 1.0, atol=1e-14)


def test_alpha_rejects_normal_vectors():
    x = e(0, 2)
    with pytest.raises(TangencyViolation):
        geom.alpha1_eval(x, x)


def test_reeb_axioms(rng):
    for n in (1, 2, 3):
        x = geom.random_sphere(n, 1000, rng)
        R = geom.reeb_field(x)
        w = geom.random_tangent(x, rng)
        assert np.max(np.abs(geom.alpha1(x, R) - 1.0)) <= 1e-10
        assert np.max(np.abs(geom.dalpha1(R, w))) <= 1e-8


def test_dalpha_matches_coordinate_formula(rng):
    u, v = geom.from_real(rng.standard_normal((2, 20, 6)))
    ur, vr = geom.to_real(u), geom.to_real(v)
    # 2 sum dx ^ dy
    expected = 2 * np.sum(ur[:, 0::2] * vr[:, 1::2] - ur[:, 1::2] * vr[:, 0::2], axis=1)
    assert np.allclose(geom.dalpha1(u, v), expected)


def test_reeb_flow_examples(rng):
    x = geom.random_sphere(1, 5, rng)
    assert np.allclose(geom.reeb_flow(x, 0.0), x)
    assert np.allclose(geom.reeb_flow(x, 2 * np.pi), x, atol=1e-14)
    assert np.allclose(geom.reeb_flow(e(0, 2), np.pi / 2), 1j * e(0, 2))


def test_reeb_flow_broadcasts_times(rng):
    x = geom.random_sphere(1, 3, rng)
    t = np.array([0.1, 0.2, 0.3])
    out = geom.reeb_flow(x, t)
    for i in range(3):
        assert np.allclose(out[i], np.exp(1j * t[i]) * x[i])


def test_quotient_examples(rng):
    assert geom.lens_project(e(0, 2), 2).equals(geom.lens_project(-e(0, 2), 2))
    x = geom.random_sphere(1, 1, rng)[0]
    assert geom.cp_project(np.exp(0.7j) * x).equals(geom.cp_project(x))
    y = np.exp(2j * np.pi / 3) * x
    assert not geom.lens_project(y, 2).equals(geom.lens_project(x, 2))
    assert geom.lens_distance(x, y, 2) > 0.1


def test_lens_distance_is_well_defined(rng):
    for k in (2, 3, 5):
        x, y = geom.random_sphere(2, 2, rng)
        d = geom.lens_distance(x, y, k)
        for j in range(k):
            for m in range(k):
                w = np.exp(2j * np.pi * j / k)
                u = np.exp(2j * np.pi * m / k)
                assert geom.lens_distance(w * x, u * y, k) == pytest.approx(d, abs=1e-14)


def test_projections_are_reeb_invariant(rng):
    x = geom.random_sphere(2, 50, rng)
    for xi, t in zip(x, rng.uniform(0, 7, 50)):
        assert geom.cp_project(geom.reeb_flow(xi, t)).distance(geom.cp_project(xi)) <= 1e-12
        for k in (2, 3):
            a = geom.lens_project(geom.reeb_flow(xi, 2 * np.pi / k), k)
            assert a.distance(geom.lens_project(xi, k)) <= 1e-12


def test_canonical_representative_has_positive_last_coordinate(rng):
    x = geom.random_sphere(2, 1, rng)[0]
    c = geom.canonical_cp(np.exp(2.2j) * x)
    assert c[-1].imag == pytest.approx(0.0, abs=1e-15) and c[-1].real > 0
    # last nonzero coordinate decides when the final one vanishes
    v = np.array([0.6, 0.8j, 0.0])
    c = geom.canonical_cp(v)
    assert c[1].real == pytest.approx(0.8) and c[2] == 0


def test_zero_vector_is_rejected():
    with pytest.raises(DegeneratePoint):
        geom.cp_project(np.zeros(3))
    with pytest.raises(DegeneratePoint):
        geom.lens_project(np.zeros(2), 3)


def test_chart_center_and_roundtrip(rng):
    p = geom.darboux_embed(np.zeros(2))
    assert np.allclose(p.homogeneous, [0, 0, 1])
    z = geom.from_real(rng.standard_normal((100, 4)))
    z *= (rng.uniform(0, 1.4, 100) / np.linalg.norm(z, axis=1))[:, None]
    for zi in z:
        assert np.max(np.abs(geom.darboux_invert(geom.darboux_embed(zi)) - zi)) <= 1e-10


def test_chart_rejects_points_outside():
    with pytest.raises(OutOfChart):
        geom.chart_section(np.array([1.5, 0.0]))
    with pytest.raises(OutOfChart):
        geom.chart_coords(np.array([1.0, 0.0]))


def test_chart_is_symplectic(rng):
    for n in (1, 2):
        for _ in range(100):
            z = geom.from_real(rng.standard_normal(2 * n))
            z *= rng.uniform(0, 1.3) / np.linalg.norm(z)
            u, v = geom.from_real(rng.standard_normal((2, 2 * n)))
            assert abs(geom.pullback_omega_fd(z, u, v) - geom.omega0(u, v)) <= 1e-6


def test_chart_radius_matches_inverse(rng):
    x = geom.random_sphere(2, 200, rng)
    direct = np.sum(np.abs(geom.chart_coords(x)) ** 2, axis=1)
    assert np.allclose(geom.chart_radius_sq(x), direct, atol=1e-12)


def test_ball_membership_examples_and_oracle(rng):
    assert geom.ball_membership(e(2, 3), 0.3)
    assert not geom.ball_membership(e(0, 3), 1.0)
    x = geom.random_sphere(2, 1000, rng)
    for r in (0.5, 1.0, 1.3):
        oracle = np.linalg.norm(geom.chart_coords(x), axis=1) < r
        assert np.array_equal(geom.ball_membership(x, r), oracle)


def test_lifted_ball_samples_are_inside(rng):
    x = geom.sample_lifted_ball(2, 0.7, 500, rng)
    assert np.allclose(np.linalg.norm(x, axis=1), 1.0)
    assert np.all(geom.ball_membership(x, 0.7 + 1e-12))


def test_quasi_random_points_are_deterministic():
    a = geom.quasi_random_sphere(1, 100, seed=3)
    b = geom.quasi_random_sphere(1, 100, seed=3)
    assert np.array_equal(a, b)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0)


def test_random_unitary_preserves_alpha(rng):
    U = geom.random_unitary(2, rng)
    x = geom.random_sphere(2, 20, rng)
    w = geom.random_tangent(x, rng)
    assert np.allclose(geom.alpha1(x @ U.T, w @ U.T), geom.alpha1(x, w))


def test_workspace_validation():
    with pytest.raises(ValueError):
        geom.Workspace(n=0)
    with pytest.raises(ValueError):
        geom.Workspace(k=0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(-10, 10))
def test_reeb_flow_preserves_norm_and_alpha(coords, t):
    v = geom.from_real(coords)
    if np.linalg.norm(v) < 1e-3:
        return
    x = geom.normalize(v)
    y = geom.reeb_flow(x, t)
    assert abs(np.linalg.norm(y) - 1) < 1e-12
    assert abs(geom.alpha1(y, 1j * y) - 1) < 1e-12
    assert geom.cp_distance(x, y) < 1e-7


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 5), st.integers(0, 5), st.integers(0, 2**31 - 1))
def test_lens_distance_property(k, j, m, seed):
    r = np.random.default_rng(seed)
    x, y = geom.random_sphere(1, 2, r)
    w = np.exp(2j * np.pi * j / k)
    u = np.exp(2j * np.pi * m / k)
    assert abs(geom.lens_distance(w * x, u * y, k) - geom.lens_distance(x, y, k)) < 1e-12
