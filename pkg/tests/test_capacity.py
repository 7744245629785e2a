import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactlab import capacity, flows, geom, profiles, spectra
from contactlab.errors import DisplacementNotVerified, InsufficientSamples

TWO_PI = 2 * np.pi


def brute_witness(k, a1, a2):
    """Smallest j with pi a1^2 > (2 pi/k) j >= pi a2^2, by direct search in floats."""
    for j in range(1, int(k * a1 * a1) + 2):
        if k * a1 * a1 > 2 * j >= k * a2 * a2:
            return j
    return None


# --------------------------------------------------------------------------
# displacement check
# --------------------------------------------------------------------------

def test_identity_and_reeb_do_not_displace():
    ball = capacity.LiftedBall(0.5)
    ident = spectra.FlowMap(flows.constant_hamiltonian(0.0, 1), 1.0, steps=20)
    reeb = spectra.FlowMap(flows.constant_hamiltonian(1.0, 1), 1.3, steps=40)
    assert not capacity.verify_alpha_displacement(ident, ball, samples=500)
    assert not capacity.verify_alpha_displacement(reeb, ball, samples=500)
    assert not capacity.verify_alpha_displacement(reeb, ball, samples=500, circle_invariant=False, reeb_grid=4)


def test_displacement_sample_floor():
    ident = spectra.FlowMap(flows.constant_hamiltonian(0.0, 1), 1.0, steps=20)
    with pytest.raises(InsufficientSamples):
        capacity.verify_alpha_displacement(ident, capacity.LiftedBall(0.5), samples=499)


def test_lifted_ball_samples_inside(rng):
    ball = capacity.LiftedBall(0.7, n=2)
    x = ball.sample(300, rng)
    assert np.all(ball.contains(x)) and np.all(ball.margin(x) < 0)


# --------------------------------------------------------------------------
# lower bound
# --------------------------------------------------------------------------

def test_lower_bound_examples():
    lb = capacity.capacity_lower_bound(2, 1.0, [0.1])
    assert lb.value == pytest.approx(np.pi - 0.1, abs=1e-5)
    lb = capacity.capacity_lower_bound(2, float(geom.SQRT2), [0.01])
    assert lb.value == pytest.approx(TWO_PI - 0.01, abs=1e-5)
    assert lb.analytic_limit == pytest.approx(TWO_PI)


def test_lower_bound_increases_as_eps_shrinks():
    lb = capacity.capacity_lower_bound(3, 1.0, [0.1, 0.01, 0.001])
    vals = [lb.by_eps[e] for e in (0.1, 0.01, 0.001)]
    assert vals[0] < vals[1] < vals[2] < np.pi
    assert lb.value == vals[2]


def test_lower_bound_numeric_cross_check():
    lb = capacity.capacity_lower_bound(1, 0.8, [0.05], numeric_check=True, numeric_points=500)
    assert lb.value == pytest.approx(np.pi * 0.64 - 0.05, abs=1e-5)


def test_lower_bound_domain():
    with pytest.raises(ValueError):
        capacity.capacity_lower_bound(1, 1.5, [0.1])
    with pytest.raises(ValueError):
        capacity.capacity_lower_bound(0, 1.0, [0.1])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 1.4), st.floats(0.2, 1.4), st.integers(1, 6))
def test_lower_bound_monotone_in_radius(r1, r2, k):
    a, b = sorted((r1, r2))
    eps = 0.01
    assert capacity.capacity_lower_bound(k, a, [eps], T_points=11).value <= \
        capacity.capacity_lower_bound(k, b, [eps], T_points=11).value


# --------------------------------------------------------------------------
# upper bound
# --------------------------------------------------------------------------

def test_upper_bound_verified_at_small_radius():
    D = profiles.make_translation_displacer(0.3, 0.1)
    ub = capacity.capacity_upper_bound(2, 0.3, float(geom.SQRT2), D, samples=500, steps=400)
    assert ub.verified and ub.margin > 0
    assert ub.value >= np.pi * 0.09  # soundness: never below the capacity limit
    lb = capacity.capacity_lower_bound(2, 0.3, [0.01])
    assert lb.value <= ub.value


def test_declared_upper_bound():
    delta = 0.05
    D = profiles.make_declared_displacer(1.0, np.pi + delta, 1.0)
    with pytest.raises(DisplacementNotVerified):
        capacity.capacity_upper_bound(2, 1.0, float(geom.SQRT2), D)
    ub = capacity.capacity_upper_bound(2, 1.0, float(geom.SQRT2), D, allow_declared=True)
    assert not ub.verified and ub.value == pytest.approx(np.pi + delta)
    assert "declared" in ub.label


def test_report_carries_both_bounds():
    D = profiles.make_declared_displacer(1.0, np.pi + 0.05, 1.0)
    rep = capacity.capacity_report(2, 1.0, [0.1, 0.01], D=D, allow_declared=True)
    assert rep.check() == []
    assert rep.lower_bound == pytest.approx(np.pi - 0.01, abs=1e-5)
    assert rep.ceil_lower == pytest.approx(np.pi)
    assert rep.csv_row().count(",") == 5
    assert set(rep.to_dict()["lower_by_eps"]) == {"0.1", "0.01"}


# --------------------------------------------------------------------------
# non-squeezing arithmetic
# --------------------------------------------------------------------------

@pytest.mark.parametrize("k,a1,a2,j", [
    (2, np.sqrt(2), 0.9, 1),
    (2, 1.0, 1.0, None),
    (4, 1.0, 0.7, 1),
    (1, np.sqrt(2), 1.0, None),
    (10, 1.0, 0.75, 3),
])
def test_nonsqueeze_examples(k, a1, a2, j):
    d = capacity.nonsqueeze_decide(k, a1, a2)
    assert d.witness_j == j
    assert d.verdict == ("cannot squeeze" if j else "no obstruction")


def test_nonsqueeze_brute_force(rng):
    for _ in range(1000):
        k = int(rng.integers(1, 20))
        a1, a2 = rng.uniform(0.05, 1.5, size=2)
        assert capacity.nonsqueeze_decide(k, a1, a2).witness_j == brute_witness(k, a1, a2)


def test_nonsqueeze_input_validation():
    with pytest.raises(ValueError):
        capacity.nonsqueeze_decide(0, 1.0, 0.5)
    with pytest.raises(ValueError):
        capacity.nonsqueeze_decide(2, -1.0, 0.5)


def test_boundary_is_weak_on_the_right():
    # (2 pi / k) j == pi a2^2 exactly: still a witness
    d = capacity.nonsqueeze_decide(2, 1.2, 1.0)
    assert d.witness_j == 1
    # pi a1^2 == (2 pi / k) j exactly: strict side fails
    assert capacity.nonsqueeze_decide(2, 1.0, 0.5).witness_j is None


def test_experiment_fires_for_large_k():
    ex = capacity.full_nonsqueezing_experiment(10, 1.0, 0.75)
    assert ex.fires and ex.witness_j is not None
    assert ex.decision.witness_j is not None
    assert ex.analytic_upper == pytest.approx(np.pi * 0.5625)
    assert "analytic" in ex.notes[0]
    assert '"fires": true' in ex.to_json()


@pytest.mark.parametrize("r_in,r_out", [(1.0, 0.75), (1.4, 0.2), (0.5, 0.1)])
def test_experiment_never_fires_for_k1(r_in, r_out):
    ex = capacity.full_nonsqueezing_experiment(1, r_in, r_out)
    assert not ex.fires and ex.decision.witness_j is None
