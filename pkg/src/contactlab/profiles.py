"""Radial profiles, cutoffs and planar displacement Hamiltonians.

All smooth transitions use the quintic smoothstep ``S(u) = 6u^5 - 15u^4 + 10u^3``,
whose pieces are polynomials; this keeps plateau values exact and lets the
displacement Hamiltonians round-trip through a piecewise-polynomial text
format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .errors import InfeasibleProfile

PI = np.pi

_S = Polynomial([0, 0, 0, 10, -15, 6])
_S_INT = Polynomial([0, 0, 0, 0, 2.5, -3, 1])  # antiderivative of S, value 1/2 at u = 1


def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def smoothstep_deriv(u):
    u = np.clip(u, 0.0, 1.0)
    return 30.0 * u * u * (1.0 - u) * (1.0 - u)


def _smoothstep_int(u):
    u = np.clip(u, 0.0, 1.0)
    return u ** 4 * (2.5 + u * (-3.0 + u))


# --------------------------------------------------------------------------
# Radial profile f with f(t) = plateau near 0, -pi < f' <= 0, supp f in [0, r^2)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Profile ``f`` of the radial Hamiltonian ``H(z) = f(|z|^2)``.

    The derivative is ``f' = -slope * B`` where ``B`` rises from 0 to 1 on
    ``[plateau_end, plateau_end + ramp]``, stays 1, and falls back to 0 on
    ``[descent_end - ramp, descent_end]``.
    """

    r: float
    eps: float
    plateau_end: float
    descent_end: float
    ramp: float

    @property
    def height(self) -> float:
        return PI * self.r ** 2 - self.eps

    @property
    def total_descent(self) -> float:
        return (self.descent_end - self.plateau_end) - self.ramp

    @property
    def slope(self) -> float:
        """Magnitude of the steepest descent, ``max |f'|``."""
        return self.height / self.total_descent

    def _integral_b(self, t):
        a, b, tau = self.plateau_end, self.descent_end, self.ramp
        t = np.asarray(t, dtype=float)
        out = np.where(t <= a, 0.0, 0.0)
        rising = (t > a) & (t <= a + tau)
        flat = (t > a + tau) & (t <= b - tau)
        falling = (t > b - tau) & (t < b)
        out = np.where(rising, tau * _smoothstep_int((t - a) / tau), out)
        out = np.where(flat, 0.5 * tau + (t - a - tau), out)
        out = np.where(falling, 0.5 * tau + (b - a - 2 * tau) + tau * (0.5 - _smoothstep_int((b - t) / tau)), out)
        out = np.where(t >= b, self.total_descent, out)
        return out

    def _b(self, t):
        a, b, tau = self.plateau_end, self.descent_end, self.ramp
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        out = np.where((t > a) & (t < a + tau), smoothstep((t - a) / tau), out)
        out = np.where((t >= a + tau) & (t <= b - tau), 1.0, out)
        out = np.where((t > b - tau) & (t < b), smoothstep((b - t) / tau), out)
        return out

    def __call__(self, s):
        return profile_eval(self, s)

    def deriv(self, s):
        return profile_deriv(self, s)

    def second_deriv(self, s):
        a, b, tau = self.plateau_end, self.descent_end, self.ramp
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        out = np.where((s > a) & (s < a + tau), smoothstep_deriv((s - a) / tau) / tau, out)
        out = np.where((s > b - tau) & (s < b), -smoothstep_deriv((b - s) / tau) / tau, out)
        return -self.slope * out

    def to_dict(self) -> dict:
        return dict(r=self.r, eps=self.eps, plateau_end=self.plateau_end,
                    descent_end=self.descent_end, ramp=self.ramp)


def profile_eval(f: RadialProfile, s):
    s = np.asarray(s, dtype=float)
    val = f.height * (1.0 - f._integral_b(s) / f.total_descent)
    val = np.where(s >= f.descent_end, 0.0, val)
    return val if val.ndim else float(val)


def profile_deriv(f: RadialProfile, s):
    s = np.asarray(s, dtype=float)
    val = -f.slope * f._b(s)
    return val if val.ndim else float(val)


# Preferred ceiling for the descent slope; steeper descents are used only when needed.
_SOFT_SLOPE = 0.75 * PI
_MIN_SLOPE_MARGIN = 1e-6
_DESCENT_END_FRAC = 1.0 - 1e-4


def make_profile(r: float, eps: float, plateau_end: float | None = None) -> RadialProfile:
    """Build a profile with plateau ``pi r^2 - eps`` supported in ``[0, r^2)``.

    The default layout starts descending at ``r^2 / 2`` with slope at most
    ``0.75 pi``.  When that is too steep the descent is widened; if even the
    full interval needs a slope above ``0.75 pi``, the slope is set halfway
    between the smallest feasible one and ``pi``, which keeps the rotation
    angle ``2 f'`` well away from ``-2 pi``.

    Raises
    ------
    InfeasibleProfile
        If no admissible descent fits inside ``[0, r^2)``.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if not 0 < eps < PI * r * r:
        raise ValueError("eps must lie in (0, pi r^2)")
    height = PI * r * r - eps
    b = r * r * _DESCENT_END_FRAC
    margin = 0.5 * (PI - height / b)
    if margin <= _MIN_SLOPE_MARGIN:
        raise InfeasibleProfile(f"descent {height:.6g} over width {b:.6g} needs slope >= pi")

    a = 0.5 * r * r if plateau_end is None else float(plateau_end)
    if not 0 < a < b:
        raise ValueError("plateau_end must lie in (0, r^2)")
    tau = 0.1 * (b - a)
    if height / ((b - a) - tau) <= _SOFT_SLOPE:
        return RadialProfile(r, eps, a, b, tau)

    if plateau_end is None:
        a = b - height / (0.9 * _SOFT_SLOPE)
        if a >= 1e-2 * r * r:
            return RadialProfile(r, eps, a, b, 0.1 * (b - a))
        # plateau and ramps shrink together; slope pi - margin
        a = 0.5 * (b - height / (PI - margin))
        return RadialProfile(r, eps, a, b, a)
    raise InfeasibleProfile(
        f"no descent from {height:.6g} to 0 fits in [{a:.4g}, {b:.4g}) with slope > -pi"
    )


# --------------------------------------------------------------------------
# Cutoffs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Cutoff:
    """``rho(x) = 1 - S((|x|^2 - a^2) / (b^2 - a^2))``: 1 inside ``a``, 0 outside ``b``."""

    inner_radius: float
    outer_radius: float

    def _u(self, sq):
        a2, b2 = self.inner_radius ** 2, self.outer_radius ** 2
        return (sq - a2) / (b2 - a2)

    def of_sq(self, sq):
        return 1.0 - smoothstep(self._u(np.asarray(sq, dtype=float)))

    def dsq(self, sq):
        """Derivative with respect to ``|x|^2``."""
        a2, b2 = self.inner_radius ** 2, self.outer_radius ** 2
        return -smoothstep_deriv(self._u(np.asarray(sq, dtype=float))) / (b2 - a2)

    def __call__(self, x):
        x = np.asarray(x)
        return self.of_sq(np.sum(np.abs(x) ** 2, axis=-1))

    def grad(self, x):
        """Gradient as a complex vector ``d/dx + i d/dy`` (or real if ``x`` is real)."""
        x = np.asarray(x)
        sq = np.sum(np.abs(x) ** 2, axis=-1)
        return 2.0 * self.dsq(sq)[..., None] * x


def make_cutoff(inner_radius: float, outer_radius: float) -> Cutoff:
    if not 0 < inner_radius < outer_radius:
        raise ValueError("need 0 < inner_radius < outer_radius")
    return Cutoff(float(inner_radius), float(outer_radius))


# --------------------------------------------------------------------------
# Piecewise polynomials and separable planar Hamiltonians
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewisePolynomial:
    """Polynomial pieces on ``[breaks[i], breaks[i+1]]``; zero outside.

    Piece ``i`` is stored in the local variable ``u = x - breaks[i]``.
    """

    breaks: tuple
    coeffs: tuple  # one coefficient tuple (lowest degree first) per piece

    def __post_init__(self):
        if len(self.coeffs) != len(self.breaks) - 1:
            raise ValueError("need exactly one coefficient list per interval")
        if any(b1 >= b2 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breakpoints must be increasing")

    @property
    def pieces(self):
        return [Polynomial(c) for c in self.coeffs]

    def _eval(self, x, deriv: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        br = self.breaks
        for i, p in enumerate(self.pieces):
            q = p.deriv(deriv) if deriv else p
            last = i == len(self.coeffs) - 1
            mask = (x >= br[i]) & ((x <= br[i + 1]) if last else (x < br[i + 1]))
            if np.any(mask):
                out[mask] = q(x[mask] - br[i])
        return out

    def __call__(self, x):
        return self._eval(x)

    def deriv(self, x):
        return self._eval(x, 1)

    def extrema(self) -> tuple[float, float]:
        """Exact min and max over the real line (zero outside the pieces counts)."""
        vals = [0.0]
        for (lo, hi), p in zip(zip(self.breaks, self.breaks[1:]), self.pieces):
            cand = [0.0, hi - lo]
            for root in p.deriv().roots():
                if abs(root.imag) < 1e-12 and 0 <= root.real <= hi - lo:
                    cand.append(root.real)
            vals.extend(p(np.array(cand)))
        return float(min(vals)), float(max(vals))

    def rescaled(self, s: float) -> "PiecewisePolynomial":
        """``x -> p(x / s)``; local variables scale the same way."""
        coeffs = tuple(tuple(c / s ** j for j, c in enumerate(cs)) for cs in self.coeffs)
        return PiecewisePolynomial(tuple(b * s for b in self.breaks), coeffs)

    def to_dict(self) -> dict:
        return {"breaks": list(self.breaks), "coeffs": [list(c) for c in self.coeffs]}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewisePolynomial":
        return cls(tuple(float(b) for b in d["breaks"]), tuple(tuple(float(c) for c in cs) for cs in d["coeffs"]))


def _poly_tuple(p: Polynomial) -> tuple:
    return tuple(float(c) for c in p.coef)


def _bump(lo: float, hi: float, width: float) -> PiecewisePolynomial:
    """1 on ``[lo, hi]``, smoothstep ramps of ``width`` on each side, 0 beyond."""
    u = Polynomial([0.0, 1.0 / width])
    return PiecewisePolynomial(
        (lo - width, lo, hi, hi + width),
        (_poly_tuple(_S(u)), (1.0,), _poly_tuple(1 - _S(u))),
    )


def _clamped_identity(c: float, width: float) -> PiecewisePolynomial:
    """Odd function equal to ``y`` on ``[-c, c]``, tapering to 0 by ``|y| = c + width``."""
    u = Polynomial([0.0, 1.0 / width])
    left = Polynomial([-(c + width), 1.0]) * _S(u)  # y = u - c - w on the left ramp
    right = Polynomial([c, 1.0]) * (1 - _S(u))  # y = u + c on the right ramp
    return PiecewisePolynomial(
        (-c - width, -c, c, c + width),
        (_poly_tuple(left), (-c, 1.0), _poly_tuple(right)),
    )


@dataclass(frozen=True)
class DisplacementHamiltonian:
    """Compactly supported ``H(x, y) = scale * px(x) * py(y)`` on R^2.

    ``sweep_radius`` bounds the norm of every point of the disk of radius
    ``displaced_radius`` along the time-1 flow.  A displacer may instead be
    *declared*: no evaluation rule, only an externally certified energy.
    """

    scale: float
    px: PiecewisePolynomial | None
    py: PiecewisePolynomial | None
    support_radius: float
    displaced_radius: float
    sweep_radius: float
    declared_energy: float | None = None
    name: str = "separable"
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def is_declared(self) -> bool:
        return self.px is None

    def __call__(self, x, y):
        if self.is_declared:
            raise TypeError("declared displacers carry no evaluation rule")
        return self.scale * self.px(x) * self.py(y)

    def grad(self, x, y):
        px, py = self.px(x), self.py(y)
        return self.scale * self.px.deriv(x) * py, self.scale * px * self.py.deriv(y)

    def vector_field(self, x, y):
        """Hamiltonian vector field ``J grad H = (-dH/dy, dH/dx)``."""
        hx, hy = self.grad(x, y)
        return -hy, hx

    def extrema(self) -> tuple[float, float]:
        if self.is_declared:
            return 0.0, float(self.declared_energy)
        ax = self.px.extrema()
        ay = self.py.extrema()
        prods = [self.scale * u * v for u in ax for v in ay]
        return min(prods), max(prods)

    @property
    def energy(self) -> float:
        if self.is_declared:
            return float(self.declared_energy)
        lo, hi = self.extrema()
        return hi - lo

    def to_dict(self) -> dict:
        d = {
            "kind": "declared" if self.is_declared else "separable",
            "name": self.name,
            "support_radius": self.support_radius,
            "displaced_radius": self.displaced_radius,
            "sweep_radius": self.sweep_radius,
        }
        if self.is_declared:
            d["declared_energy"] = self.declared_energy
        else:
            d.update(scale=self.scale, x_factor=self.px.to_dict(), y_factor=self.py.to_dict())
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def displacer_from_dict(d: dict) -> DisplacementHamiltonian:
    kind = d.get("kind", "separable")
    common = dict(
        support_radius=float(d["support_radius"]),
        displaced_radius=float(d["displaced_radius"]),
        sweep_radius=float(d.get("sweep_radius", d["support_radius"])),
        name=d.get("name", kind),
    )
    if kind == "declared":
        return DisplacementHamiltonian(0.0, None, None, declared_energy=float(d["declared_energy"]), **common)
    if kind != "separable":
        raise ValueError(f"unknown displacer kind {kind!r}")
    return DisplacementHamiltonian(
        float(d["scale"]),
        PiecewisePolynomial.from_dict(d["x_factor"]),
        PiecewisePolynomial.from_dict(d["y_factor"]),
        **common,
    )


def displacer_from_json(text: str) -> DisplacementHamiltonian:
    return displacer_from_dict(json.loads(text))


def make_translation_displacer(r: float, margin: float, transition: float | None = None) -> DisplacementHamiltonian:
    """Displacer whose time-1 flow translates the disk of radius ``r`` by ``2r + margin``.

    ``H = -d * chi(x) * sigma(y)`` with ``d = 2r + margin``; on the strip the
    disk sweeps, ``chi = 1`` and ``sigma(y) = y`` so the flow is the rigid
    translation ``(x, y) -> (x + d t, y)``.
    """
    if r <= 0 or margin <= 0:
        raise ValueError("r and margin must be positive")
    d = 2 * r + margin
    w = transition if transition is not None else 0.25 * r
    pad = 0.5 * margin
    c = r + pad
    px = _bump(-r - pad, d + r + pad, w)
    py = _clamped_identity(c, w)
    support = float(np.hypot(max(d + r + pad + w, r + pad + w), c + w))
    sweep = float(np.hypot(d + r, r))
    return DisplacementHamiltonian(
        -d, px, py, support_radius=support, displaced_radius=r, sweep_radius=sweep,
        name="translation", meta={"shift": d, "margin": margin},
    )


def make_declared_displacer(r: float, energy: float, support_radius: float, sweep_radius: float | None = None,
                            name: str = "declared") -> DisplacementHamiltonian:
    """A displacer known only through an external energy certificate."""
    return DisplacementHamiltonian(
        0.0, None, None, support_radius=support_radius, displaced_radius=r,
        sweep_radius=sweep_radius if sweep_radius is not None else support_radius,
        declared_energy=float(energy), name=name,
    )


def rescale_displacer(H: DisplacementHamiltonian, r: float) -> DisplacementHamiltonian:
    """``H_r = r^2 H(. / r)``: displaces the disk scaled by ``r``."""
    if r <= 0:
        raise ValueError("r must be positive")
    common = dict(
        support_radius=H.support_radius * r,
        displaced_radius=H.displaced_radius * r,
        sweep_radius=H.sweep_radius * r,
        name=H.name,
        meta=dict(H.meta, rescaled_by=r),
    )
    if H.is_declared:
        return DisplacementHamiltonian(0.0, None, None, declared_energy=H.declared_energy * r * r, **common)
    return DisplacementHamiltonian(H.scale * r * r, H.px.rescaled(r), H.py.rescaled(r), **common)


def planar_flow(H: DisplacementHamiltonian, points, t: float = 1.0, steps: int = 2000) -> np.ndarray:
    """RK4 flow of ``H`` on R^2 for points of shape ``(N, 2)``."""
    p = np.array(points, dtype=float, ndmin=2)
    dt = t / steps

    def field(q):
        u, v = H.vector_field(q[:, 0], q[:, 1])
        return np.stack([u, v], axis=1)

    for _ in range(steps):
        k1 = field(p)
        k2 = field(p + 0.5 * dt * k1)
        k3 = field(p + 0.5 * dt * k2)
        k4 = field(p + dt * k3)
        p = p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def scalar_function(f: Callable) -> Callable:
    """Vectorize a scalar callable over numpy arrays."""
    return np.vectorize(f, otypes=[float])
