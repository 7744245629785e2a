"""Ambient complex geometry: the unit sphere, lens spaces, CP^n and a Darboux chart.

Points of S^{2n+1} are complex arrays of shape ``(n+1,)`` (or batches of shape
``(N, n+1)``).  Lens-space and projective points are never stored as cosets;
they keep a sphere representative and compare through quotient distances.

Conventions
-----------
* ``<u, v>_R = Re(sum(conj(u) * v))`` is the Euclidean inner product.
* ``alpha1_x(w) = Im(sum(conj(x) * w))`` is ``sum(x_j dy_j - y_j dx_j)``.
* ``d alpha1(u, v) = 2 Im(sum(conj(u) * v))`` (that is ``2 sum dx ^ dy``).
* The Reeb flow of ``alpha1`` is ``x -> exp(i t) x``.
* The chart ``Psi(z) = [z / sqrt(2) : sqrt(1 - |z|^2 / 2)]`` embeds the open
  ball of radius sqrt(2) in C^n symplectically into (CP^n, omega), where
  ``pi^* omega = d alpha1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, qmc, unitary_group

from .errors import DegeneratePoint, OutOfChart, TangencyViolation

DEFAULT_TOL = 1e-9
SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class Workspace:
    """Dimension and tolerance shared by a run."""

    n: int = 1
    k: int = 1
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.k < 1:
            raise ValueError("k must be a positive integer")


# --------------------------------------------------------------------------
# Linear algebra on C^{n+1}
# --------------------------------------------------------------------------

def as_vector(v) -> np.ndarray:
    return np.asarray(v, dtype=complex)


def from_real(coords) -> np.ndarray:
    """Map real coordinates ``(x_1, y_1, ..., x_m, y_m)`` to ``(x_1 + i y_1, ...)``."""
    a = np.asarray(coords, dtype=float)
    return a[..., 0::2] + 1j * a[..., 1::2]


def to_real(v) -> np.ndarray:
    v = as_vector(v)
    out = np.empty(v.shape[:-1] + (2 * v.shape[-1],))
    out[..., 0::2] = v.real
    out[..., 1::2] = v.imag
    return out


def j_mul(v) -> np.ndarray:
    """The complex structure J (multiplication by i)."""
    return 1j * as_vector(v)


def real_inner(u, v) -> np.ndarray:
    return np.real(np.sum(np.conj(u) * v, axis=-1))


def herm_inner(u, v) -> np.ndarray:
    return np.sum(np.conj(u) * v, axis=-1)


def normalize(v) -> np.ndarray:
    v = as_vector(v)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(nrm == 0):
        raise DegeneratePoint("cannot normalize the zero vector")
    return v / nrm


def alpha1(x, w) -> np.ndarray:
    """Unchecked, vectorized evaluation of alpha1 at ``x`` on ``w``."""
    return np.imag(np.sum(np.conj(x) * w, axis=-1))


def dalpha1(u, v) -> np.ndarray:
    return 2.0 * np.imag(np.sum(np.conj(u) * v, axis=-1))


def omega0(u, v) -> np.ndarray:
    """Standard symplectic form ``sum dx ^ dy`` on C^n."""
    return np.imag(np.sum(np.conj(u) * v, axis=-1))


def alpha1_eval(x, w, tol: float = DEFAULT_TOL) -> float:
    """alpha1 at a sphere point ``x`` on a tangent vector ``w``.

    Raises
    ------
    TangencyViolation
        If ``w`` is not tangent to the sphere at ``x`` within ``tol``.
    """
    x = as_vector(x)
    w = as_vector(w)
    if abs(real_inner(x, w)) > tol * max(1.0, np.linalg.norm(w)):
        raise TangencyViolation(f"<x, w> = {real_inner(x, w):.3e} is not ~0")
    return float(alpha1(x, w))


def tangent_project(x, w) -> np.ndarray:
    """Orthogonal projection of ambient ``w`` onto T_x S^{2n+1}."""
    return w - real_inner(x, w)[..., None] * x


def contact_project(x, w) -> np.ndarray:
    """Orthogonal projection onto the contact plane ``xi_x`` (orthogonal to x, ix)."""
    return w - herm_inner(x, w)[..., None] * x


def reeb_field(x) -> np.ndarray:
    return 1j * as_vector(x)


def reeb_flow(x, t) -> np.ndarray:
    """Reeb flow of alpha1: ``exp(i t) x``.  ``t`` broadcasts over leading axes."""
    x = as_vector(x)
    t = np.asarray(t, dtype=float)
    return np.exp(1j * t)[..., None] * x if t.ndim else np.exp(1j * float(t)) * x


# --------------------------------------------------------------------------
# Point types
# --------------------------------------------------------------------------

def _check_unit(v, tol=1e-12):
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise ValueError(f"not a unit vector (|v| = {np.linalg.norm(v)!r})")


@dataclass(frozen=True, eq=False)
class SpherePoint:
    v: np.ndarray

    def __post_init__(self):
        v = as_vector(self.v).copy()
        _check_unit(v)
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.v.shape[-1] - 1

    def distance(self, other: "SpherePoint") -> float:
        return float(np.linalg.norm(self.v - other.v))

    def equals(self, other: "SpherePoint", tol: float = DEFAULT_TOL) -> bool:
        return self.distance(other) <= tol


@dataclass(frozen=True, eq=False)
class LensPoint:
    rep: SpherePoint
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def distance(self, other: "LensPoint") -> float:
        if other.k != self.k:
            raise ValueError("lens points live in different lens spaces")
        return lens_distance(self.rep.v, other.rep.v, self.k)

    def equals(self, other: "LensPoint", tol: float = DEFAULT_TOL) -> bool:
        return self.distance(other) <= tol


@dataclass(frozen=True, eq=False)
class ProjPoint:
    rep: SpherePoint

    def distance(self, other: "ProjPoint") -> float:
        return float(np.linalg.norm(self.rep.v - other.rep.v))

    def equals(self, other: "ProjPoint", tol: float = DEFAULT_TOL) -> bool:
        return self.distance(other) <= tol

    @property
    def homogeneous(self) -> np.ndarray:
        return self.rep.v


def lens_distance(x, y, k: int) -> float:
    """Quotient distance ``min_j |exp(2 pi i j / k) x - y|`` on L_k."""
    roots = np.exp(2j * np.pi * np.arange(k) / k)
    return float(np.min(np.linalg.norm(roots[:, None] * as_vector(x)[None, :] - as_vector(y)[None, :], axis=1)))


def lens_project(x, k: int) -> LensPoint:
    x = as_vector(x)
    if np.linalg.norm(x) == 0:
        raise DegeneratePoint("zero vector has no lens-space image")
    return LensPoint(SpherePoint(normalize(x)), k)


def canonical_cp(x, tol: float = 1e-14) -> np.ndarray:
    """Representative whose last nonzero coordinate is real and positive."""
    x = normalize(x)
    nz = np.nonzero(np.abs(x) > tol)[0]
    c = x[nz[-1]]
    return x * (np.conj(c) / abs(c))


def cp_project(x) -> ProjPoint:
    x = as_vector(x)
    if np.linalg.norm(x) == 0:
        raise DegeneratePoint("zero vector has no projective image")
    return ProjPoint(SpherePoint(canonical_cp(x)))


def cp_distance(x, y) -> float:
    """Quotient distance ``min_theta |exp(i theta) x - y|`` on CP^n."""
    x = normalize(x)
    y = normalize(y)
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * abs(herm_inner(x, y)))))


# --------------------------------------------------------------------------
# Darboux chart
# --------------------------------------------------------------------------

def chart_section(z) -> np.ndarray:
    """Local section ``z -> (z / sqrt 2, sqrt(1 - |z|^2 / 2))`` into the sphere."""
    z = as_vector(z)
    s = 1.0 - 0.5 * np.sum(np.abs(z) ** 2, axis=-1)
    if np.any(s <= 0):
        raise OutOfChart("|z| must be < sqrt(2)")
    last = np.sqrt(s)[..., None].astype(complex)
    return np.concatenate([z / SQRT2, last], axis=-1)


def darboux_embed(z) -> ProjPoint:
    return ProjPoint(SpherePoint(chart_section(z)))


def chart_coords(x) -> np.ndarray:
    """Chart coordinates ``Psi^{-1}(pi(x))`` of sphere points (vectorized)."""
    x = as_vector(x)
    c = x[..., -1]
    ac = np.abs(c)
    if np.any(ac == 0):
        raise OutOfChart("last homogeneous coordinate vanishes")
    phase = np.conj(c) / ac
    return SQRT2 * x[..., :-1] * phase[..., None]


def chart_radius_sq(x) -> np.ndarray:
    """``|Psi^{-1}(pi(x))|^2 = 2 (1 - |x_{n+1}|^2)``; defined on the whole sphere."""
    x = as_vector(x)
    return 2.0 * (1.0 - np.abs(x[..., -1]) ** 2)


def darboux_invert(p: ProjPoint) -> np.ndarray:
    return chart_coords(p.rep.v)


def ball_membership(x, r: float) -> np.ndarray | bool:
    """Whether ``x`` lies in the lift of the Darboux ball of radius ``r``."""
    if not 0 < r <= SQRT2:
        raise ValueError("r must lie in (0, sqrt(2)]")
    x = as_vector(x)
    res = np.abs(x[..., -1]) ** 2 > 1.0 - 0.5 * r * r
    return bool(res) if np.ndim(res) == 0 else res


def pullback_omega_fd(z, u, v, h: float = 1e-6) -> float:
    """Finite-difference ``(Psi^* omega)_z(u, v)`` via d alpha1 on the chart section."""
    z = as_vector(z)
    du = (chart_section(z + h * u) - chart_section(z - h * u)) / (2 * h)
    dv = (chart_section(z + h * v) - chart_section(z - h * v)) / (2 * h)
    return float(dalpha1(du, dv))


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------

def random_sphere(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((size, 2 * n + 2))
    return normalize(from_real(g))


def quasi_random_sphere(n: int, size: int, seed: int = 0) -> np.ndarray:
    """Scrambled-Sobol Gaussian points pushed to the sphere."""
    sampler = qmc.Sobol(d=2 * n + 2, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(size, 2))))
    u = sampler.random_base2(m)[:size]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    return normalize(from_real(norm.ppf(u)))


def random_tangent(x, rng: np.random.Generator) -> np.ndarray:
    x = as_vector(x)
    w = from_real(rng.standard_normal(x.shape[:-1] + (2 * x.shape[-1],)))
    return tangent_project(x, w)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(n + 1, random_state=rng)


def sample_lifted_ball(n: int, r: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform chart-ball samples of radius ``r`` lifted with random Reeb phases."""
    g = from_real(rng.standard_normal((size, 2 * n)))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = r * rng.uniform(0, 1, size) ** (1.0 / (2 * n))
    z = g * rad[:, None]
    x = chart_section(z)
    return reeb_flow(x, rng.uniform(0, 2 * np.pi, size))
