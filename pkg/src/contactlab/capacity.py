"""Capacity bounds for lifted Darboux balls and the non-squeezing decision.

Lower bounds come from selector traces of radial lifts; upper bounds come
from the oscillation ``max h - min h`` of a lifted displacer whose time-1
map is checked to displace the ball.  Reports always carry both.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import geom
from .errors import DisplacementNotVerified, InsufficientSamples, StructureViolation
from .flows import build_upper_bound_hamiltonian, radial_lift
from .profiles import DisplacementHamiltonian, make_profile, rescale_displacer
from .selector import ceil_mult, track_selector
from .spectra import TWO_PI, ContactMap, FlowMap, spectrum_numeric, spectrum_radial

MIN_SAMPLES = 500
GUARD = 1e-12


@dataclass(frozen=True)
class LiftedBall:
    """``B_k(r)``: the sphere over the chart ball of radius ``r`` (circle invariant)."""

    r: float
    n: int = 1

    def contains(self, x) -> np.ndarray:
        return np.asarray(geom.ball_membership(np.atleast_2d(x), self.r))

    def margin(self, x) -> np.ndarray:
        """Chart distance outside the ball (negative inside)."""
        return np.sqrt(geom.chart_radius_sq(np.atleast_2d(x))) - self.r

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return geom.sample_lifted_ball(self.n, self.r * (1 - 1e-12), size, rng)


@dataclass
class DisplacementCheck:
    displaced: bool
    margin: float
    samples: int

    def __bool__(self):
        return self.displaced


def verify_alpha_displacement(phi: ContactMap, domain, samples: int = 2000, seed: int = 0,
                              circle_invariant: bool = True, reeb_grid: int = 16) -> DisplacementCheck:
    """Sampled test that ``phi`` maps the Reeb saturation of ``domain`` off itself.

    ``domain`` provides ``contains``, ``margin`` and ``sample``.  For domains
    that are not circle invariant the saturation is sampled on a grid of
    ``reeb_grid`` Reeb times.
    """
    if samples < MIN_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_SAMPLES} samples, got {samples}")
    rng = np.random.default_rng(seed)
    x = domain.sample(samples, rng)
    if circle_invariant:
        y, _ = phi(x)
        inside = domain.contains(y)
        margin = float(np.min(domain.margin(y)))
        return DisplacementCheck(not bool(np.any(inside)), margin, samples)
    shifts = TWO_PI * np.arange(reeb_grid) / reeb_grid
    margin = np.inf
    hit = False
    for s in shifts:
        y, _ = phi(geom.reeb_flow(x, s))
        for u in shifts:
            z = geom.reeb_flow(y, -u)
            hit |= bool(np.any(domain.contains(z)))
            margin = min(margin, float(np.min(domain.margin(z))))
    return DisplacementCheck(not hit, margin, samples * reeb_grid)


# --------------------------------------------------------------------------
# Lower bound
# --------------------------------------------------------------------------

@dataclass
class LowerBound:
    value: float
    by_eps: dict
    analytic_limit: float
    label: str = "selector trace at T=1; analytic limit is the eps -> 0 supremum"


def capacity_lower_bound(k: int, r: float, eps_grid, n: int = 1, T_points: int = 101,
                         numeric_check: bool = False, numeric_points: int = 2000) -> LowerBound:
    """``max_eps c(phi_h^1)`` over radial lifts ``h`` supported in ``B_k(r)``.

    Each trace must end on ``pi r^2 - eps`` (within ``1e-5``).  With
    ``numeric_check`` the value is also located in the numerically computed
    spectrum of the integrated flow.
    """
    if not 0 < r <= geom.SQRT2 * (1 + GUARD):
        raise ValueError("r must lie in (0, sqrt(2)]")
    if k < 1:
        raise ValueError("k must be >= 1")
    r = min(r, geom.SQRT2)
    T = np.linspace(0.0, 1.0, T_points)
    by_eps = {}
    for eps in eps_grid:
        f = make_profile(r, float(eps))
        trace = track_selector(lambda t: spectrum_radial(f, t), T, nonnegative=True)
        c = float(trace.values[-1])
        if abs(c - (np.pi * r * r - eps)) > 1e-5:
            raise StructureViolation(f"trace ends at {c} instead of pi r^2 - eps")
        if numeric_check:
            spec = spectrum_numeric(FlowMap(radial_lift(f, n), 1.0), n_points=numeric_points)
            if not spec.values.size or np.min(np.abs(spec.values - (c % TWO_PI))) > 1e-5:
                raise StructureViolation(f"selector value {c} is missing from the numeric spectrum")
        by_eps[float(eps)] = c
    return LowerBound(max(by_eps.values()), by_eps, float(np.pi * r * r))


# --------------------------------------------------------------------------
# Upper bound
# --------------------------------------------------------------------------

@dataclass
class UpperBound:
    value: float
    verified: bool
    label: str
    margin: float | None
    samples: int
    displacer: dict


def capacity_upper_bound(k: int, r: float, lam_R: float, D: DisplacementHamiltonian, n: int = 1,
                         samples: int = 2000, steps: int = 800, seed: int = 0,
                         allow_declared: bool = False) -> UpperBound:
    """Oscillation of the lifted displacer, after checking it displaces ``B_k(r)``.

    ``D`` is rescaled to displace the disk of radius ``r``.  Declared
    displacers (energy certificate only) are accepted with
    ``allow_declared`` and labelled as unverified.

    Raises
    ------
    DisplacementNotVerified
        If the sampled check fails, or ``D`` is declared and not allowed.
    """
    if abs(D.displaced_radius - r) > 1e-12 * max(1.0, r):
        D = rescale_displacer(D, r / D.displaced_radius)
    if D.is_declared:
        if not allow_declared:
            raise DisplacementNotVerified("declared displacer: energy certificate only, no evaluation rule")
        return UpperBound(D.energy, False, "declared (externally certified, not verified here)", None, 0,
                          D.to_dict())
    h = build_upper_bound_hamiltonian(D, lam_R, k, n, seed=seed)
    check = verify_alpha_displacement(FlowMap(h, 1.0, steps), LiftedBall(r, n), samples, seed)
    if not check:
        raise DisplacementNotVerified(f"lifted flow does not displace B_k({r}); margin {check.margin:.3e}")
    lo, hi = h.value_range()
    return UpperBound(hi - lo, True, "verified displacement energy", check.margin, check.samples, D.to_dict())


# --------------------------------------------------------------------------
# Reports and non-squeezing arithmetic
# --------------------------------------------------------------------------

@dataclass
class CapacityReport:
    k: int
    r: float
    n: int
    lower_bound: float
    lower_by_eps: dict
    analytic_limit: float
    ceil_lower: float
    upper_bound: float | None
    upper_label: str | None
    upper_margin: float | None
    samples: int
    displacer: dict | None = None

    def check(self) -> list[str]:
        problems = []
        if self.lower_bound >= np.pi * self.r ** 2:
            problems.append("lower bound is not below pi r^2")
        if self.upper_bound is not None and self.lower_bound > self.upper_bound + 1e-6:
            problems.append("lower bound exceeds upper bound")
        return problems

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lower_by_eps"] = {repr(k): v for k, v in self.lower_by_eps.items()}
        return d

    def csv_row(self) -> str:
        return ",".join(repr(v) for v in (self.k, self.r, self.lower_bound, self.ceil_lower,
                                          self.upper_bound, self.analytic_limit))


def capacity_report(k: int, r: float, eps_grid, D: DisplacementHamiltonian | None = None, lam_R: float = geom.SQRT2,
                    n: int = 1, samples: int = 2000, allow_declared: bool = False, seed: int = 0) -> CapacityReport:
    lb = capacity_lower_bound(k, r, eps_grid, n=n)
    ub = None
    if D is not None:
        ub = capacity_upper_bound(k, r, lam_R, D, n=n, samples=samples, seed=seed, allow_declared=allow_declared)
    return CapacityReport(
        k=k, r=r, n=n, lower_bound=lb.value, lower_by_eps=lb.by_eps, analytic_limit=lb.analytic_limit,
        ceil_lower=ceil_mult(lb.value, TWO_PI / k),
        upper_bound=None if ub is None else ub.value,
        upper_label=None if ub is None else ub.label,
        upper_margin=None if ub is None else ub.margin,
        samples=0 if ub is None else ub.samples,
        displacer=None if ub is None else ub.displacer,
    )


@dataclass(frozen=True)
class NonSqueezeDecision:
    k: int
    a1: float
    a2: float
    witness_j: int | None
    verdict: str
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {"k": self.k, "a1": self.a1, "a2": self.a2, "witness_j": self.witness_j,
                "verdict": self.verdict, "notes": list(self.notes)}


def _is_witness(k: int, a1: float, a2: float, j: int) -> bool:
    # pi a1^2 > (2 pi / k) j >= pi a2^2  <=>  k a1^2 > 2 j >= k a2^2, compared exactly on the float inputs
    upper = k * Fraction(a1) ** 2
    lower = k * Fraction(a2) ** 2
    two_j = Fraction(2 * j)
    strict = upper > two_j and not abs(upper - two_j) <= GUARD * two_j
    weak = two_j >= lower or abs(two_j - lower) <= GUARD * two_j
    return bool(strict and weak)


def nonsqueeze_decide(k: int, a1: float, a2: float) -> NonSqueezeDecision:
    """Smallest ``j >= 1`` with ``pi a1^2 > (2 pi / k) j >= pi a2^2``, if any."""
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")
    if not (a1 > 0 and a2 > 0):
        raise ValueError("radii must be positive")
    k = int(k)
    for j in range(1, math.ceil(k * a1 * a1 / 2) + 1):
        if _is_witness(k, a1, a2, j):
            return NonSqueezeDecision(k, a1, a2, j, "cannot squeeze",
                                      (f"B_k({a1!r}) admits no contact squeezing into B_k({a2!r})",))
    return NonSqueezeDecision(k, a1, a2, None, "no obstruction", ("the ceiling arithmetic gives no witness j",))


@dataclass
class NonSqueezeExperiment:
    decision: NonSqueezeDecision
    lower: float
    ceil_lower: float
    analytic_upper: float
    certified_upper: float | None
    fires: bool
    fires_certified: bool | None
    witness_j: int | None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["decision"] = self.decision.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _chain_witness(k: int, ceil_lower: float, upper: float) -> int | None:
    P = TWO_PI / k
    for j in range(1, int(math.ceil(ceil_lower / P)) + 1):
        if ceil_lower > P * j * (1 + GUARD) and P * j >= upper * (1 - GUARD):
            return j
    return None


def full_nonsqueezing_experiment(k: int, r_in: float, r_out: float, D: DisplacementHamiltonian | None = None,
                                 eps_grid=(0.01, 0.001), n: int = 1, lam_R: float = geom.SQRT2,
                                 samples: int = 2000, seed: int = 0) -> NonSqueezeExperiment:
    """Evaluate both sides of the ceiling chain for ``B_k(r_in)`` into ``B_k(r_out)``.

    The chain fires when some ``j`` has ``ceil(lower(r_in)) > (2 pi / k) j >= upper(r_out)``.
    ``analytic_upper = pi r_out^2`` is the limit of optimal displacers and is
    labelled as such; a certified upper bound is computed only when ``D`` is given.
    """
    decision = nonsqueeze_decide(k, r_in, r_out)
    eps_grid = [e for e in eps_grid if e < np.pi * r_in * r_in]
    lb = capacity_lower_bound(k, r_in, eps_grid, n=n)
    cl = ceil_mult(lb.value, TWO_PI / k)
    analytic = float(np.pi * r_out * r_out)
    j = _chain_witness(k, cl, analytic)
    notes = ["analytic_upper is the analytic limit pi r_out^2, not a computed bound"]
    certified = fires_cert = None
    if D is not None:
        ub = capacity_upper_bound(k, r_out, lam_R, D, n=n, samples=samples, seed=seed)
        certified = ub.value
        fires_cert = _chain_witness(k, cl, certified) is not None
        notes.append(f"certified upper bound from {ub.label}")
    return NonSqueezeExperiment(decision, lb.value, cl, analytic, certified, j is not None, fires_cert, j, notes)
