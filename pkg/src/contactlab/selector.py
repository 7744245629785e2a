"""Spectral selector values by continuity tracking, plus ceiling arithmetic.

The selector is defined operationally: start from ``c(0) = 0`` and follow
the spectrum continuously in the isotopy parameter.  Sign hints pick the
branch leaving 0; any later crossing of two branches is reported as an
:class:`AmbiguousCrossing` carrying the partial trace.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geom
from .errors import AmbiguousCrossing, EmptySpectrum
from .flows import ContactHamiltonian, radial_lift
from .profiles import make_profile
from .spectra import (
    DEDUP_TOL,
    TWO_PI,
    ComposedMap,
    FlowMap,
    SpectrumSet,
    conjugate,
    spectra_agree,
    spectrum_branches,
    spectrum_numeric,
    spectrum_radial,
)

CEIL_GUARD = 1e-12


# --------------------------------------------------------------------------
# Ceilings
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CeilingValue:
    x: float
    P: float
    multiple: int

    @property
    def value(self) -> float:
        return self.P * self.multiple


def ceil_multiple(x: float, P: float) -> CeilingValue:
    """Smallest multiple ``P m >= x``; ``x`` within a relative ``1e-12`` of ``P m`` counts as equal."""
    if not P > 0:
        raise ValueError("P must be positive")
    q = x / P
    nearest = round(q)
    if abs(q - nearest) <= CEIL_GUARD * max(1.0, abs(q)):
        return CeilingValue(x, P, int(nearest))
    return CeilingValue(x, P, math.ceil(q))


def ceil_mult(x: float, P: float) -> float:
    return ceil_multiple(x, P).value


# --------------------------------------------------------------------------
# Reeb oracle
# --------------------------------------------------------------------------

def maslov_reeb(T: float, n: int = 1) -> int:
    """Maslov index ``2(n+1) ceil(T / 2 pi)`` of the Reeb flow up to time ``T``."""
    return 2 * (n + 1) * ceil_multiple(T, TWO_PI).multiple


def reeb_selector_oracle(T: float, k: int = 1, n: int = 1) -> float:
    """``inf {t : maslov(reeb^{T - t}) <= 0}`` computed by bisection on the staircase.

    The index of ``reeb^{-t} o reeb^T`` is that of ``reeb^{T - t}``; the
    predicate is monotone in ``t``, so bisection converges to the jump.
    """
    if k < 1:
        raise ValueError("k must be >= 1")

    def below(t):
        # exact staircase here: the guard band would shift the jump by 2 pi * 1e-12
        return 2 * (n + 1) * math.ceil((T - t) / TWO_PI) <= 0

    lo, hi = T - 1.0, T + 1.0
    while below(lo):
        lo -= 1.0
    while not below(hi):
        hi += 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if below(mid):
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------
# Traces
# --------------------------------------------------------------------------

@dataclass
class SelectorTrace:
    T: np.ndarray
    values: np.ndarray
    branch: list
    ambiguous: np.ndarray
    complete: bool = True
    crossing: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.size and self.values[0] != 0.0:
            raise ValueError("a selector trace starts at c(0) = 0")

    def to_columns(self) -> str:
        buf = io.StringIO()
        buf.write("T,c\n")
        for t, c in zip(self.T, self.values):
            buf.write(f"{float(t)!r},{float(c)!r}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "T": [float(t) for t in self.T],
            "c": [float(c) for c in self.values],
            "branch": self.branch,
            "complete": self.complete,
            "crossing": self.crossing,
        }


def _pick_initial(slopes, nonnegative: bool, nonpositive: bool, tie_break: str):
    slopes = list(slopes)
    if nonnegative and not nonpositive:
        pool = [a for a in slopes if a > 0]
        pick = max
    elif nonpositive and not nonnegative:
        pool = [a for a in slopes if a < 0]
        pick = min
    else:
        pool = [a for a in slopes if a == 0] if len(set(slopes)) > 1 else slopes
        pick = None
    if not pool:
        raise EmptySpectrum("no branch leaving 0 is compatible with the sign hints")
    distinct = sorted(set(pool))
    if len(distinct) == 1:
        return distinct[0]
    if tie_break == "max" and pick is not None:
        return pick(distinct)
    raise AmbiguousCrossing(f"branches {distinct} leave 0 together and hints do not separate them", location=0.0)


def branch_diagram(slopes, T_grid, m_range=range(-1, 3)) -> dict:
    """Values of every branch ``a T + 2 pi m`` over ``T_grid`` (for plotting)."""
    T = np.asarray(T_grid, dtype=float)
    return {f"a={a:.12g},m={m}": (a * T + TWO_PI * m).tolist() for a in slopes for m in m_range}


def track_selector(
    family: Callable[[float], SpectrumSet],
    T_grid,
    nonnegative: bool = False,
    nonpositive: bool = False,
    tie_break: str = "error",
    lipschitz: float | None = None,
) -> SelectorTrace:
    """Follow the selector from ``c(0) = 0`` along ``T_grid``.

    ``family(T)`` returns a spectrum, either analytic (branches) or numeric.
    ``tie_break = "max"`` resolves several hint-compatible branches leaving 0
    by the extreme one (largest for nonnegative, smallest for nonpositive).
    ``lipschitz`` bounds ``|dc/dT|`` for numeric families.

    Raises
    ------
    AmbiguousCrossing
        At the first later crossing; ``err.trace`` holds the truncated trace.
    EmptySpectrum
        If no spectrum value continues the trace.
    """
    T = np.asarray(T_grid, dtype=float)
    if T.size == 0 or T[0] != 0.0 or np.any(np.diff(T) <= 0):
        raise ValueError("T_grid must be increasing and start at 0")
    if tie_break not in ("error", "max"):
        raise ValueError("tie_break must be 'error' or 'max'")
    first = family(T[min(1, T.size - 1)])
    if first.is_analytic:
        return _track_analytic(first, T, nonnegative, nonpositive, tie_break)
    if lipschitz is None:
        raise ValueError("numeric tracking needs a Lipschitz bound")
    return _track_numeric(family, T, nonnegative, nonpositive, tie_break, lipschitz)


def _track_analytic(spec: SpectrumSet, T, nonnegative, nonpositive, tie_break) -> SelectorTrace:
    slopes = sorted({b.slope for b in spec.branches})
    a = _pick_initial(slopes, nonnegative, nonpositive, tie_break)
    # first T > 0 where a T = b T + 2 pi m for another branch value
    crossing = None
    Tmax = T[-1]
    for b in slopes:
        if b == a:
            continue
        step = TWO_PI / abs(a - b)
        if step <= Tmax + 1e-15:
            crossing = step if crossing is None else min(crossing, step)
    if crossing is None:
        return SelectorTrace(T, a * T, [a] * T.size, np.zeros(T.size, dtype=bool), meta={"slope": a})
    keep = T < crossing
    m = int(keep.sum())
    flags = np.zeros(m, dtype=bool)
    flags[-1] = True  # last grid point before the crossing
    trace = SelectorTrace(T[keep], a * T[keep], [a] * m, flags, complete=False, crossing=float(crossing),
                          meta={"slope": a})
    raise AmbiguousCrossing(f"branch of slope {a:.6g} crosses another branch at T = {crossing:.6g}",
                            location=float(crossing), trace=trace)


def _lifts_near(values, center, radius):
    out = []
    for v in values:
        m0 = math.ceil((center - radius - v) / TWO_PI)
        m1 = math.floor((center + radius - v) / TWO_PI)
        out.extend(v + TWO_PI * m for m in range(m0, m1 + 1))
    return np.array(sorted(out))


def _track_numeric(family, T, nonnegative, nonpositive, tie_break, L) -> SelectorTrace:
    vals = [0.0]
    branch = ["start"]
    amb = [False]
    slope = 0.0
    for i in range(1, T.size):
        dT = T[i] - T[i - 1]
        spec = family(T[i])
        base = spec.all_values((-TWO_PI, TWO_PI)) if spec.is_analytic else spec.values
        pred = vals[-1] + slope * dT
        radius = L * dT + 10 * DEDUP_TOL
        cand = _lifts_near(base, pred, radius)
        if i == 1:
            tol = 10 * DEDUP_TOL
            if nonnegative and not nonpositive:
                cand = cand[cand > tol]
            elif nonpositive and not nonnegative:
                cand = cand[cand < -tol]
        if cand.size == 0:
            raise EmptySpectrum(f"no spectrum value continues the trace at T = {T[i]:.6g}")
        # merge numerically equal candidates
        groups = [cand[0]]
        for c in cand[1:]:
            if c - groups[-1] > 10 * DEDUP_TOL:
                groups.append(c)
        if len(groups) > 1:
            if i == 1 and tie_break == "max" and (nonnegative ^ nonpositive):
                groups = [max(groups) if nonnegative else min(groups)]
            else:
                trace = SelectorTrace(T[:i], np.array(vals), branch, np.array(amb[:-1] + [True]),
                                      complete=False, crossing=float(T[i]))
                raise AmbiguousCrossing(f"{len(groups)} spectrum values continue the trace at T = {T[i]:.6g}",
                                        location=float(T[i]), trace=trace)
        v = float(groups[0])
        slope = (v - vals[-1]) / dT
        vals.append(v)
        branch.append("numeric")
        amb.append(False)
    return SelectorTrace(T, np.array(vals), branch, np.array(amb))


def selector_energy_bounds(h: ContactHamiltonian, T: float) -> tuple[float, float]:
    """``(T min h, T max h)`` (swapped for negative ``T``)."""
    lo, hi = h.value_range()
    a, b = T * lo, T * hi
    return (min(a, b), max(a, b))


# --------------------------------------------------------------------------
# Axiom harness
# --------------------------------------------------------------------------

DEFAULT_AXIOM_CONFIG = {
    "n_values": [1, 2],
    "k_values": [2, 3],
    "radii": [0.6, 1.0, 1.3],
    "eps_pairs": [[0.2, 0.05], [0.5, 0.1]],
    "T_points": 51,
    "shifts": [0.3],
    "seed": 0,
    "numeric": True,
    "numeric_points": 1000,
}


def _entry(axiom, instance, passed, margin, detail=""):
    return {"axiom": axiom, "instance": instance, "passed": bool(passed), "margin": float(margin), "detail": detail}


def check_selector_axioms(config: dict | None = None) -> list[dict]:
    """Evaluate selector axioms on a generated family suite; failures are report entries."""
    cfg = dict(DEFAULT_AXIOM_CONFIG)
    cfg.update(config or {})
    rng = np.random.default_rng(cfg["seed"])
    T = np.linspace(0.0, 1.0, int(cfg["T_points"]))
    report = []

    def radial_family(f, sign=1.0, shift=0.0):
        return lambda t: spectrum_branches([sign * f.height + shift, shift], t)

    for n in cfg["n_values"]:
        for r in cfg["radii"]:
            for e_big, e_small in cfg["eps_pairs"]:
                f1, f2 = make_profile(r, e_big), make_profile(r, e_small)
                tag = f"n={n},r={r},eps={e_big}/{e_small}"
                tr1 = track_selector(radial_family(f1), T, nonnegative=True)
                tr2 = track_selector(radial_family(f2), T, nonnegative=True)
                h1, h2 = radial_lift(f1, n), radial_lift(f2, n)

                # normalization
                report.append(_entry("normalization", tag, tr1.values[0] == 0.0, -abs(tr1.values[0])))

                # monotonicity: pointwise h1 <= h2 must give c1 <= c2
                x = geom.random_sphere(n, 2000, rng)
                pointwise = float(np.max(h1.evaluate(0, x) - h2.evaluate(0, x)))
                margin = tr2.values[-1] - tr1.values[-1]
                report.append(_entry("monotonicity", tag, pointwise <= 1e-12 and margin >= -1e-12, margin,
                                     f"max(h1-h2)={pointwise:.2e}"))

                # spectrality and energy sandwich along the traces
                for f, tr, h in ((f1, tr1, h1), (f2, tr2, h2)):
                    gap = max(
                        min(abs(c - v) for v in spectrum_radial(f, t).all_values((-TWO_PI, 2 * TWO_PI)))
                        for t, c in zip(tr.T, tr.values)
                    )
                    report.append(_entry("spectrality", f"{tag},eps={f.eps}", gap <= 1e-5, 1e-5 - gap))
                    slack = min(
                        min(c - selector_energy_bounds(h, t)[0], selector_energy_bounds(h, t)[1] - c)
                        for t, c in zip(tr.T, tr.values)
                    )
                    report.append(_entry("energy_sandwich", f"{tag},eps={f.eps}", slack >= -1e-9, slack))

                # positivity and the reversed family
                report.append(_entry("positivity", tag, tr1.values[-1] > 0, tr1.values[-1]))
                rev = track_selector(radial_family(f1, sign=-1.0), T, nonpositive=True)
                lo, hi = selector_energy_bounds(h1.scaled(-1.0), 1.0)
                slack = min(rev.values[-1] - lo, hi - rev.values[-1])
                report.append(_entry("energy_sandwich", f"{tag},reversed", slack >= -1e-9, slack))

                # Reeb shift: c(reeb^s o phi) = c(phi) + s
                for s in cfg["shifts"]:
                    sh = track_selector(radial_family(f1, shift=s), T, nonnegative=True, tie_break="max")
                    err = abs(sh.values[-1] - (tr1.values[-1] + s))
                    report.append(_entry("reeb_shift", f"{tag},s={s}", err <= 1e-9, 1e-9 - err))

        # numeric spectrum check of strict conjugation and spectrality (one family per n)
        if cfg["numeric"]:
            f = make_profile(1.0, cfg["eps_pairs"][0][1])
            h = radial_lift(f, n)
            U = geom.random_unitary(n, rng)
            phi = FlowMap(h, 1.0)
            npts = int(cfg["numeric_points"])
            s1 = spectrum_numeric(phi, n_points=npts, seed=cfg["seed"])
            s2 = spectrum_numeric(conjugate(U, phi), n_points=npts, seed=cfg["seed"])
            ok, gap = spectra_agree(s1.values, s2.values)
            report.append(_entry("conjugation_spectrum", f"n={n},r=1,eps={f.eps}", ok, 1e-5 - gap))
            c1 = f.height
            for k in cfg["k_values"]:
                P = TWO_PI / k
                c_conj = min(s2.values, key=lambda v: abs(v - c1)) if s2.values.size else np.nan
                same = ceil_mult(c_conj, P) == ceil_mult(c1, P)
                report.append(_entry("conjugation_ceiling_numeric", f"n={n},k={k}", same, -abs(c_conj - c1)))
            gap = float(np.min(np.abs(s1.values - c1))) if s1.values.size else np.inf
            report.append(_entry("spectrality_numeric", f"n={n},r=1,eps={f.eps}", gap <= 1e-5, 1e-5 - gap))

        # triangle inequality on commuting lifts with disjoint chart supports
        for r1, r2 in ((0.6, 0.8), (1.0, 0.9)):
            fa, fb = make_profile(r1, 0.1), make_profile(r2, 0.1)
            ca = track_selector(lambda t: spectrum_branches([fa.height, 0.0], t), T, nonnegative=True).values[-1]
            cb = track_selector(lambda t: spectrum_branches([fb.height, 0.0], t), T, nonnegative=True).values[-1]
            comp = track_selector(lambda t: spectrum_branches([fa.height, fb.height, 0.0], t), T,
                                  nonnegative=True, tie_break="max").values[-1]
            report.append(_entry("triangle", f"n={n},r={r1}/{r2}", comp <= ca + cb + 1e-12, ca + cb - comp))
        if cfg["numeric"]:
            # the two lifts are centred at e_{n+1} and e_1, with disjoint supports
            swap = np.eye(n + 1)[:, ::-1]
            ha = radial_lift(make_profile(0.6, 0.1), n)
            hb = radial_lift(make_profile(0.8, 0.1), n, center=swap)
            ok = composition_is_commuting(ha, hb, samples=100, seed=cfg["seed"])
            report.append(_entry("triangle_commuting", f"n={n}", ok, 0.0, "sampled flow commutation"))

    # Reeb oracle
    Tr = np.linspace(0.0, 4 * np.pi, 101)
    tr = track_selector(lambda t: spectrum_branches([1.0], t), Tr, nonnegative=True)
    err = max(abs(c - reeb_selector_oracle(t, k=2)) for t, c in zip(Tr, tr.values))
    report.append(_entry("reeb_oracle", "T in [0, 4pi]", err <= 1e-9, 1e-9 - err))
    return report


def composition_is_commuting(h1: ContactHamiltonian, h2: ContactHamiltonian, samples: int = 200, seed: int = 0,
                             T: float = 1.0, steps: int = 400, tol: float = 1e-7) -> bool:
    """Sampled check that the time-``T`` flows of ``h1`` and ``h2`` commute."""
    x = geom.random_sphere(h1.n, samples, np.random.default_rng(seed))
    a, b = FlowMap(h1, T, steps), FlowMap(h2, T, steps)
    y1, _ = ComposedMap(a, b)(x)
    y2, _ = ComposedMap(b, a)(x)
    return bool(np.max(np.linalg.norm(y1 - y2, axis=1)) <= tol)

