import dataclasses

import numpy as np
import pytest

from contactlab import flows, geom, product, profiles, spectra
from contactlab.errors import ConstraintViolation, MissingConformalFactor, StructureViolation

from test_flows import generic_hamiltonian


def point(x1, x2, theta=0.0):
    return product.ProductPoint(np.asarray(x1, complex), np.asarray(x2, complex), theta)


def test_beta_examples():
    p = point([1, 0], [1, 0])
    zero = np.zeros(2, complex)
    assert product.beta_eval(p, (zero, np.array([1j, 0]), 0.0)) == pytest.approx(1.0)
    assert product.beta_eval(p, (np.array([1j, 0]), zero, 0.0)) == pytest.approx(-1.0)
    q = point([1, 0], [1, 0], theta=np.log(3.0))
    assert product.beta_eval(q, (np.array([1j, 0]), zero, 5.0)) == pytest.approx(-3.0)


def test_product_reeb_axioms(rng):
    for _ in range(500):
        x1, x2 = geom.random_sphere(1, 2, rng)
        p = point(x1, x2, float(rng.normal()))
        R = product.product_reeb_field(p)
        assert product.beta_eval(p, R) == pytest.approx(1.0, abs=1e-12)
        v = product.random_product_tangent(p, rng)
        assert abs(product.dbeta(p, R, v)) <= 1e-12


def test_dbeta_matches_finite_differences(rng):
    for _ in range(50):
        x1, x2 = geom.random_sphere(2, 2, rng)
        p = point(x1, x2, float(rng.normal()))
        u, v = product.random_product_tangent(p, rng), product.random_product_tangent(p, rng)
        assert product.dbeta(p, u, v) == pytest.approx(product.dbeta_fd(p, u, v), abs=1e-6)


def test_mismatched_factors_rejected():
    with pytest.raises(ValueError):
        point([1, 0], [1, 0, 0])


def test_graph_of_identity_is_the_diagonal(rng):
    x = geom.random_sphere(1, 20, rng)
    s = product.graph_sample(flows.constant_hamiltonian(0.0, 1), x, 1.0, 100, rng, record_every=20)
    g = product.graph_of(s)
    seeds, imgs, gs = g.diagonal_image(-1)
    assert np.allclose(seeds, imgs) and np.all(gs == 0)
    assert g.legendrian_residual() <= 1e-11


def test_graph_of_reeb_flow(rng):
    x = geom.random_sphere(1, 20, rng)
    s = product.graph_sample(flows.constant_hamiltonian(1.0, 1), x, 0.8, 200, rng, record_every=50)
    g = product.graph_of(s)
    seeds, imgs, gs = g.diagonal_image(-1)
    assert np.max(np.abs(imgs - geom.reeb_flow(seeds, 0.8))) <= 1e-10
    assert np.max(np.abs(gs)) <= 1e-12
    p = g.apply(-1, x[0], 0, 0.5)
    assert p.theta == pytest.approx(0.5)


@pytest.mark.parametrize("make_h", [
    lambda: flows.radial_lift(profiles.make_profile(1.0, 0.1), 1),
    lambda: generic_hamiltonian(1),
])
def test_graph_is_legendrian(rng, make_h):
    x = geom.random_sphere(1, 30, rng)
    s = product.graph_sample(make_h(), x, 1.0, 800, rng, record_every=100)
    assert product.GraphIsotopy(s).legendrian_residual() <= 1e-8
    product.graph_of(s)


def test_graph_rejects_missing_factor_and_bad_stencil(rng):
    x = geom.random_sphere(1, 5, rng)
    s = product.graph_sample(flows.constant_hamiltonian(1.0, 1), x, 0.5, 100, rng)
    broken = dataclasses.replace(s, g=None)
    with pytest.raises(MissingConformalFactor):
        product.graph_of(broken)
    bad_g = s.g.copy()
    bad_g[:, -1] += 0.3
    with pytest.raises(StructureViolation):
        product.graph_of(dataclasses.replace(s, g=bad_g))


@pytest.mark.parametrize("make_h", [
    lambda: flows.constant_hamiltonian(1.0, 1),
    lambda: flows.radial_lift(profiles.make_profile(1.0, 0.1), 1),
    lambda: flows.radial_lift(profiles.make_profile(1.0, 0.1), 1).scaled(-1.0),
    lambda: generic_hamiltonian(1),
])
def test_hamiltonian_of_the_graph(rng, make_h):
    h = make_h()
    x = geom.random_sphere(1, 40, rng)
    s = flows.integrate_contact_flow(h, x, 1.0, 2000, record_every=20)
    assert product.check_ham_graph(s, h) <= 1e-6


def test_ham_graph_needs_uniform_records(rng):
    h = flows.constant_hamiltonian(1.0, 1)
    s = flows.integrate_contact_flow(h, geom.random_sphere(1, 3, rng), 1.0, 100, record_every=50)
    with pytest.raises(ValueError):
        product.check_ham_graph(s, h)


def test_spectrum_via_graph_reeb(rng):
    h = flows.constant_hamiltonian(1.0, 1)
    s = flows.integrate_contact_flow(h, geom.random_sphere(1, 4, rng), 1.3, 100, record_every=None)
    spec = product.spectrum_via_graph(product.GraphIsotopy(s, spectra.ReebMap(1, 1.3)), n_points=300)
    assert spectra.spectra_agree(spec.values, [1.3])[0]


def test_spectrum_via_graph_radial(rng):
    f = profiles.make_profile(1.0, 0.1)
    h = flows.radial_lift(f, 1)
    s = flows.integrate_contact_flow(h, geom.random_sphere(1, 4, rng), 1.0, 400, record_every=None)
    graph = product.GraphIsotopy(s, spectra.FlowMap(h, 1.0))
    spec = product.spectrum_via_graph(graph, n_points=500)
    assert spectra.spectra_agree(spec.values, spectra.spectrum_radial(f, 1.0).all_values())[0]


def test_spectrum_via_graph_unitary(rng):
    a, b = 0.4, 2.5
    U = np.diag(np.exp(1j * np.array([a, b])))
    s = flows.integrate_contact_flow(flows.constant_hamiltonian(0.0, 1), geom.random_sphere(1, 2, rng), 1.0, 20,
                                     record_every=None)
    spec = product.spectrum_via_graph(product.GraphIsotopy(s, spectra.UnitaryMap(U)), n_points=500)
    assert spectra.spectra_agree(spec.values, [a, b])[0]
    with pytest.raises(ValueError):
        product.spectrum_via_graph(product.GraphIsotopy(s))


def test_order_selector_bounds_bracket_the_selector(rng):
    f = profiles.make_profile(1.0, 0.1)
    h = flows.radial_lift(f, 1)
    x = np.concatenate([geom.random_sphere(1, 40, rng), [[0.0, 1.0]]])
    s = flows.integrate_contact_flow(h, x, 1.0, 1000, record_every=10)
    lo, hi = product.order_selector_bounds(product.GraphIsotopy(s), h, 1.0)
    assert lo >= -1e-6 and hi == pytest.approx(f.height, abs=1e-6)
    lo2, hi2 = product.order_selector_bounds(product.GraphIsotopy(s), h, -1.0)
    assert lo2 == pytest.approx(-hi) and hi2 == pytest.approx(-lo)


def test_strict_flows_keep_theta(rng):
    h = flows.radial_lift(profiles.make_profile(1.2, 0.1), 2)
    x = geom.random_sphere(2, 50, rng)
    s = product.graph_sample(h, x, 1.0, 800, rng, record_every=100)
    assert np.max(np.abs(s.g)) <= 1e-8


def test_prequantization_nonsqueeze():
    with pytest.raises(ConstraintViolation):
        product.prequantization_nonsqueeze(2, 1.5, 0.5)
    d = product.prequantization_nonsqueeze(3, 1.2, 0.8)
    assert d.witness_j == 1 and d.verdict == "cannot squeeze"
    assert any("sqrt(2)" in note for note in d.notes)
