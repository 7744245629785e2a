"""Contact Hamiltonian flows on S^{2n+1} and lifts of Hamiltonians on CP^n.

Gradients are complex arrays ``dh/dx + i dh/dy`` so that
``dh_x(w) = real_inner(grad, w)``.  The contact vector field of ``h`` is

    Y = h * (i x) + 1/2 * i * P_xi(grad h),

which satisfies ``alpha1(Y) = h`` and ``dalpha1(Y, .) = dh(R) alpha1 - dh`` on
the tangent space.  The conformal factor ``g_t`` is carried as an extra RK4
state with ``dg/dt = dh_t(R)(x_t)``.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import geom
from .errors import OutOfChart, ResolutionTooCoarse, SingularFrame, SupportOverflow
from .profiles import DisplacementHamiltonian, RadialProfile, make_cutoff, planar_flow

log = logging.getLogger(__name__)

FD_STEP = 1e-6
FLAG_SAMPLES = 100
FLAG_PHASES = 10
FLAG_TOL = 1e-10


def _fd_gradient(func: Callable, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central differences of ``func`` along every real coordinate direction."""
    x = np.asarray(x, dtype=complex)
    grad = np.zeros_like(x)
    m = x.shape[-1]
    for j in range(m):
        for unit, weight in ((1.0, 1.0), (1j, 1j)):
            e = np.zeros(m, dtype=complex)
            e[j] = unit * step
            d = (func(x + e) - func(x - e)) / (2 * step)
            grad[..., j] += weight * d
    return grad


@dataclass(frozen=True, eq=False)
class ContactHamiltonian:
    """A (possibly time-dependent) Hamiltonian ``h(t, x)`` on the sphere.

    ``func`` and ``grad`` act on batches ``x`` of shape ``(N, n+1)``.  Flags
    left as ``None`` are detected by sampling; flags passed as ``True`` are
    verified by sampling and rejected if they fail.
    """

    n: int
    func: Callable
    grad: Callable | None = None
    is_autonomous: bool | None = None
    is_circle_invariant: bool | None = None
    profile: RadialProfile | None = None
    center: np.ndarray | None = None
    value_bounds: tuple | None = None
    name: str = "h"

    def __post_init__(self):
        rng = np.random.default_rng(12345)
        x = geom.random_sphere(self.n, FLAG_SAMPLES, rng)
        base = self.evaluate(0.0, x)
        scale = max(1.0, float(np.max(np.abs(base))))

        times = rng.uniform(-3, 3, FLAG_PHASES)
        auto = all(np.max(np.abs(self.evaluate(t, x) - base)) <= FLAG_TOL * scale for t in times)
        phases = rng.uniform(0, 2 * np.pi, FLAG_PHASES)
        circ = all(
            np.max(np.abs(self.evaluate(0.0, geom.reeb_flow(x, s)) - base)) <= FLAG_TOL * scale for s in phases
        )
        for flag, found in (("is_autonomous", auto), ("is_circle_invariant", circ)):
            claimed = getattr(self, flag)
            if claimed and not found:
                raise ValueError(f"{self.name}: claimed {flag} fails on samples")
            if claimed is None:
                object.__setattr__(self, flag, bool(found))
        if self.profile is not None:
            c = self._center_column()
            s = 2.0 * (1.0 - np.abs(geom.herm_inner(c, x)) ** 2)
            if np.max(np.abs(self.profile(s) - base)) > FLAG_TOL * scale:
                raise ValueError(f"{self.name}: is not the radial lift of its profile")

    def _center_column(self) -> np.ndarray:
        if self.center is None:
            c = np.zeros(self.n + 1, dtype=complex)
            c[-1] = 1.0
            return c
        return np.asarray(self.center)[:, -1]

    @property
    def is_radial_lift(self) -> bool:
        return self.profile is not None

    def evaluate(self, t, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return np.asarray(self.func(t, np.atleast_2d(x)), dtype=float).reshape(x.shape[:-1])

    def gradient(self, t, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        xb = np.atleast_2d(x)
        if self.grad is not None:
            g = self.grad(t, xb)
        else:
            g = _fd_gradient(lambda y: self.func(t, y), xb)
        return np.asarray(g, dtype=complex).reshape(x.shape)

    def value_range(self, samples: int = 20000, seed: int = 0) -> tuple[float, float]:
        """``(min h, max h)``: exact when known, otherwise sampled at t = 0."""
        if self.value_bounds is not None:
            return tuple(float(v) for v in self.value_bounds)
        vals = self.evaluate(0.0, geom.quasi_random_sphere(self.n, samples, seed))
        return float(vals.min()), float(vals.max())

    # -- derived Hamiltonians -------------------------------------------

    def scaled(self, c: float) -> "ContactHamiltonian":
        """``c * h``; ``c = -1`` generates the inverse isotopy for autonomous ``h``."""
        g = self.grad
        bounds = None
        if self.value_bounds is not None:
            lo, hi = c * self.value_bounds[0], c * self.value_bounds[1]
            bounds = (min(lo, hi), max(lo, hi))
        return ContactHamiltonian(
            self.n,
            lambda t, x: c * self.func(t, x),
            None if g is None else (lambda t, x: c * g(t, x)),
            is_autonomous=self.is_autonomous,
            is_circle_invariant=self.is_circle_invariant,
            value_bounds=bounds,
            name=f"{c:g}*{self.name}",
        )

    def shifted(self, c: float) -> "ContactHamiltonian":
        """``h + c``; for circle-invariant ``h`` this composes with the Reeb flow at speed ``c``."""
        bounds = None if self.value_bounds is None else (self.value_bounds[0] + c, self.value_bounds[1] + c)
        return ContactHamiltonian(
            self.n,
            lambda t, x: self.func(t, x) + c,
            self.grad,
            is_autonomous=self.is_autonomous,
            is_circle_invariant=self.is_circle_invariant,
            value_bounds=bounds,
            name=f"{self.name}+{c:g}",
        )

    def conjugated(self, U) -> "ContactHamiltonian":
        """Hamiltonian ``h o U^{-1}`` of the conjugate isotopy ``U phi U^{-1}``."""
        U = np.asarray(U, dtype=complex)
        Uh = U.conj().T

        def func(t, x):
            return self.func(t, x @ Uh.T)

        def grad(t, x):
            return self.gradient(t, x @ Uh.T) @ U.T

        center = None
        if self.profile is not None:
            center = U if self.center is None else U @ np.asarray(self.center)
        return ContactHamiltonian(
            self.n, func, grad,
            is_autonomous=self.is_autonomous,
            is_circle_invariant=self.is_circle_invariant,
            profile=self.profile,
            center=center,
            value_bounds=self.value_bounds,
            name=f"U.{self.name}",
        )


def constant_hamiltonian(c: float, n: int) -> ContactHamiltonian:
    c = float(c)
    return ContactHamiltonian(
        n,
        lambda t, x: np.full(x.shape[:-1], c),
        lambda t, x: np.zeros_like(x),
        is_autonomous=True,
        is_circle_invariant=True,
        value_bounds=(c, c),
        name=f"const({c:g})",
    )


def radial_lift(f: RadialProfile, n: int, center=None) -> ContactHamiltonian:
    """``h(x) = f(2(1 - |<c, x>|^2))`` with ``c`` the last column of ``center`` (default ``e_{n+1}``)."""
    U = None if center is None else np.asarray(center, dtype=complex)
    c = np.zeros(n + 1, dtype=complex)
    c[-1] = 1.0
    if U is not None:
        c = U[:, -1]

    def func(t, x):
        return f(2.0 * (1.0 - np.abs(x @ c.conj()) ** 2))

    def grad(t, x):
        u = x @ c.conj()
        fp = f.deriv(2.0 * (1.0 - np.abs(u) ** 2))
        return (-4.0 * fp * u)[..., None] * c

    return ContactHamiltonian(
        n, func, grad,
        is_autonomous=True, is_circle_invariant=True,
        profile=f, center=U,
        value_bounds=(0.0, f.height),
        name=f"radial(r={f.r:g},eps={f.eps:g})",
    )


# --------------------------------------------------------------------------
# Base Hamiltonians on CP^n, given in the Darboux chart
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChartHamiltonian:
    """A function ``G(z)`` on the chart ball, vanishing for ``|z| >= support_radius``."""

    n: int
    func: Callable
    grad: Callable | None
    support_radius: float
    value_bounds: tuple | None = None
    name: str = "G"

    def __post_init__(self):
        if not 0 < self.support_radius < geom.SQRT2:
            raise OutOfChart("support must lie inside the chart ball of radius sqrt(2)")

    def gradient(self, z):
        if self.grad is not None:
            return self.grad(z)
        return _fd_gradient(self.func, z)

    def vector_field(self, z):
        """Hamiltonian vector field ``J grad G``."""
        return 1j * self.gradient(z)


def lift_hamiltonian(G: ChartHamiltonian) -> ContactHamiltonian:
    """Lift ``h = G o Psi^{-1} o pi_1`` of a chart-supported base Hamiltonian."""
    n = G.n
    rmax2 = G.support_radius ** 2

    def _inside(x):
        return geom.chart_radius_sq(x) < rmax2

    def func(t, x):
        out = np.zeros(x.shape[:-1])
        m = _inside(x)
        if np.any(m):
            out[m] = G.func(geom.chart_coords(x[m]))
        return out

    def grad(t, x):
        out = np.zeros_like(x)
        m = _inside(x)
        if not np.any(m):
            return out
        xm = x[m]
        c = xm[:, -1]
        ac2 = np.abs(c) ** 2
        p = np.conj(c) / np.sqrt(ac2)
        xp = xm[:, :-1]
        gG = G.gradient(geom.SQRT2 * xp * p[:, None])
        q = np.real(np.sum(np.conj(gG) * (-1j) * geom.SQRT2 * p[:, None] * xp, axis=-1))
        out[m, :-1] = geom.SQRT2 * np.conj(p)[:, None] * gG
        out[m, -1] = 1j * q * c / ac2
        return out

    return ContactHamiltonian(
        n, func, grad,
        is_autonomous=True, is_circle_invariant=True,
        value_bounds=G.value_bounds,
        name=f"lift({G.name})",
    )


def radial_chart_hamiltonian(f: RadialProfile, n: int) -> ChartHamiltonian:
    """``H(z) = f(|z|^2)`` on the chart."""
    def func(z):
        return f(np.sum(np.abs(z) ** 2, axis=-1))

    def grad(z):
        return 2.0 * f.deriv(np.sum(np.abs(z) ** 2, axis=-1))[..., None] * z

    return ChartHamiltonian(n, func, grad, support_radius=min(f.r, geom.SQRT2 * (1 - 1e-12)),
                            value_bounds=(0.0, f.height), name="radial")


# --------------------------------------------------------------------------
# Vector fields and flows
# --------------------------------------------------------------------------

def _check_frame(x):
    nrm = np.linalg.norm(x, axis=-1)
    # the frame {x, ix} has condition number 1 for |x| > 0 and degenerates only at 0
    if np.any(nrm < 1e-12 ** 0.5):
        raise SingularFrame("the frame {x, ix} is singular (|x| ~ 0)")


def contact_vector_field(h: ContactHamiltonian, t, x) -> np.ndarray:
    """Contact vector field ``Y_h`` at sphere points ``x`` (single or batch)."""
    x = np.asarray(x, dtype=complex)
    _check_frame(x)
    hv = h.evaluate(t, x)
    gr = h.gradient(t, x)
    return hv[..., None] * (1j * x) + 0.5j * geom.contact_project(x, gr)


def vector_field_residual(h: ContactHamiltonian, t, x, rng: np.random.Generator) -> float:
    """Max defect of the two defining identities of ``Y_h`` at the points ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    Y = contact_vector_field(h, t, x)
    hv = h.evaluate(t, x)
    gr = h.gradient(t, x)
    w = geom.random_tangent(x, rng)
    dhR = geom.real_inner(gr, 1j * x)
    lhs = geom.dalpha1(Y, w)
    rhs = dhR * geom.alpha1(x, w) - geom.real_inner(gr, w)
    return float(max(np.max(np.abs(geom.alpha1(x, Y) - hv)), np.max(np.abs(lhs - rhs))))


def _rhs(h: ContactHamiltonian, t, x):
    hv = h.evaluate(t, x)
    gr = h.gradient(t, x)
    ix = 1j * x
    Y = hv[..., None] * ix + 0.5j * geom.contact_project(x, gr)
    return Y, geom.real_inner(gr, ix)


@dataclass(frozen=True, eq=False)
class ContactIsotopySample:
    """Time-sampled isotopy: ``points[i, j]`` is ``phi_{times[j]}(seeds[i])``."""

    times: np.ndarray
    points: np.ndarray
    g: np.ndarray
    T: float
    steps: int
    integrator: str = "rk4"
    max_drift: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def seeds(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def endpoints(self) -> np.ndarray:
        return self.points[:, -1]

    @property
    def g_end(self) -> np.ndarray:
        return self.g[:, -1]

    def to_columns(self) -> str:
        """CSV with columns ``seed, t, re_1, im_1, ..., g``."""
        m = self.points.shape[-1]
        header = ["seed", "t"] + [f"{p}_{j + 1}" for j in range(m) for p in ("re", "im")] + ["g"]
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for i in range(self.points.shape[0]):
            for j, t in enumerate(self.times):
                coords = geom.to_real(self.points[i, j])
                row = [str(i), repr(float(t))] + [repr(float(c)) for c in coords] + [repr(float(self.g[i, j]))]
                buf.write(",".join(row) + "\n")
        return buf.getvalue()


def integrate_contact_flow(
    h: ContactHamiltonian,
    seeds,
    T: float,
    steps: int,
    record_every: int | None = 1,
) -> ContactIsotopySample:
    """Fixed-step RK4 for ``x' = Y_h(t, x)``, ``g' = dh_t(R)(x)`` on ``[0, T]``.

    ``record_every = k`` stores every k-th step (and the last); ``None``
    stores only the endpoints.  Points are renormalized onto the sphere after
    every step; the largest pre-renormalization drift is kept in
    ``max_drift``.
    """
    if steps < 1 or steps < 100 * abs(T) / (2 * np.pi):
        raise ResolutionTooCoarse(f"{steps} steps is below the floor 100*T/2pi for T={T:g}")
    x = np.atleast_2d(np.array(seeds, dtype=complex))
    _check_frame(x)
    N = x.shape[0]
    g = np.zeros(N)
    dt = T / steps
    keep = set(range(0, steps + 1, record_every)) | {steps} if record_every else {0, steps}
    times, pts, gs = [], [], []
    drift = 0.0
    for s in range(steps + 1):
        if s in keep:
            times.append(s * dt)
            pts.append(x.copy())
            gs.append(g.copy())
        if s == steps:
            break
        t = s * dt
        k1, l1 = _rhs(h, t, x)
        k2, l2 = _rhs(h, t + 0.5 * dt, x + 0.5 * dt * k1)
        k3, l3 = _rhs(h, t + 0.5 * dt, x + 0.5 * dt * k2)
        k4, l4 = _rhs(h, t + dt, x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        g = g + dt / 6.0 * (l1 + 2 * l2 + 2 * l3 + l4)
        nrm = np.linalg.norm(x, axis=-1)
        drift = max(drift, float(np.max(np.abs(nrm - 1.0))))
        x = x / nrm[:, None]
    if drift > 1e-9:
        log.info("renormalization drift %.3e in %s (steps=%d)", drift, h.name, steps)
    return ContactIsotopySample(
        times=np.array(times),
        points=np.stack(pts, axis=1),
        g=np.stack(gs, axis=1),
        T=float(T),
        steps=int(steps),
        max_drift=drift,
        meta={"hamiltonian": h.name},
    )


def flow_endpoints(h: ContactHamiltonian, seeds, T: float, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """``(phi_T(x), g_T(x))`` without storing trajectories."""
    s = integrate_contact_flow(h, seeds, T, steps, record_every=None)
    return s.endpoints, s.g_end


def radial_flow_r2n(f: RadialProfile, x, t) -> np.ndarray:
    """Closed-form flow ``exp(2 f'(|x|^2) J t) x`` of ``H = f(|x|^2)`` on C^n."""
    x = np.asarray(x, dtype=complex)
    ang = 2.0 * f.deriv(np.sum(np.abs(x) ** 2, axis=-1)) * t
    return np.exp(1j * np.asarray(ang))[..., None] * x if np.ndim(ang) else np.exp(1j * ang) * x


def chart_flow(G: ChartHamiltonian, z, T: float, steps: int, record_every: int | None = None):
    """RK4 flow of ``J grad G`` in chart coordinates; returns ``(times, trajectory)``."""
    z = np.atleast_2d(np.array(z, dtype=complex))
    dt = T / steps
    times, traj = [0.0], [z.copy()]
    for s in range(steps):
        k1 = G.vector_field(z)
        k2 = G.vector_field(z + 0.5 * dt * k1)
        k3 = G.vector_field(z + 0.5 * dt * k2)
        k4 = G.vector_field(z + dt * k3)
        z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (record_every and (s + 1) % record_every == 0) or s + 1 == steps:
            if times[-1] != (s + 1) * dt:
                times.append((s + 1) * dt)
                traj.append(z.copy())
    return np.array(times), np.stack(traj, axis=1)


def _cp_distances(x, y) -> np.ndarray:
    ov = np.abs(np.sum(np.conj(geom.normalize(x)) * geom.normalize(y), axis=-1))
    return np.sqrt(np.maximum(0.0, 2.0 - 2.0 * ov))


def lift_identity_residual(G: ChartHamiltonian, z, T: float = 1.0, steps: int = 2000, records: int = 20,
                           exact_flow: Callable | None = None) -> float:
    """Max quotient distance between the projected lifted flow and the chart flow of ``G``.

    Trajectories start at ``chart_section(z)`` and are compared at ``records``
    equally spaced times in ``(0, T]``.  ``exact_flow(z, t)``, when given,
    replaces the RK4 chart flow (e.g. :func:`radial_flow_r2n` for radial ``G``).
    """
    if steps % records:
        raise ValueError("records must divide steps")
    every = steps // records
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    up = integrate_contact_flow(lift_hamiltonian(G), geom.chart_section(z), T, steps, record_every=every)
    if exact_flow is None:
        _, down = chart_flow(G, z, T, steps, record_every=every)
    else:
        down = np.stack([exact_flow(z, t) for t in up.times], axis=1)
    return float(np.max(_cp_distances(up.points[:, 1:], geom.chart_section(down[:, 1:]))))


def equivariance_residual(h: ContactHamiltonian, x, T: float = 1.0, steps: int = 2000, records: int = 20,
                          phases=(0.7, 2.1, 4.4)) -> float:
    """Max ``|phi_t(e^{i s} x) - e^{i s} phi_t(x)|`` (plus the matching gap in ``g``)."""
    if steps % records:
        raise ValueError("records must divide steps")
    every = steps // records
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    base = integrate_contact_flow(h, x, T, steps, record_every=every)
    worst = 0.0
    for s in phases:
        rot = integrate_contact_flow(h, np.exp(1j * s) * x, T, steps, record_every=every)
        dx = np.max(np.linalg.norm(rot.points - np.exp(1j * s) * base.points, axis=-1))
        worst = max(worst, float(dx), float(np.max(np.abs(rot.g - base.g))))
    return worst


# --------------------------------------------------------------------------
# Upper-bound construction
# --------------------------------------------------------------------------

def build_upper_bound_hamiltonian(D: DisplacementHamiltonian, lam_R: float, k: int, n: int,
                                  check_samples: int = 300, seed: int = 0) -> ContactHamiltonian:
    """Lift of ``K(z) = rho(z) * D(z_1)`` to the sphere.

    ``rho`` is a cutoff equal to 1 on a ball containing the region swept by
    ``B^{2n}(r)`` under ``D x id`` and vanishing outside ``0.999 * lam_R``.

    Raises
    ------
    SupportOverflow
        If the swept region does not fit, or sampled trajectories escape the
        plateau of the cutoff.
    """
    if D.is_declared:
        raise TypeError("a declared displacer has no evaluation rule to lift")
    if k < 1:
        raise ValueError("k must be >= 1")
    r = D.displaced_radius
    limit = 0.999 * min(lam_R, geom.SQRT2)
    swept = float(np.hypot(D.sweep_radius, r)) if n > 1 else D.sweep_radius
    if swept >= limit:
        raise SupportOverflow(f"swept radius {swept:.4f} does not fit inside {limit:.4f}")
    inner = swept + 0.1 * (limit - swept)
    rho = make_cutoff(inner, limit)

    # sampled sweep check in the first complex coordinate
    rng = np.random.default_rng(seed)
    ang = rng.uniform(0, 2 * np.pi, check_samples)
    rad = r * np.sqrt(rng.uniform(0, 1, check_samples))
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    reach = np.max(np.linalg.norm(pts, axis=1))
    for _ in range(10):
        pts = planar_flow(D, pts, 0.1, steps=40)
        reach = max(reach, float(np.max(np.linalg.norm(pts, axis=1))))
    reach_total = float(np.hypot(reach, r)) if n > 1 else reach
    if reach_total >= inner:
        raise SupportOverflow(f"sampled sweep reaches {reach_total:.4f} beyond the cutoff plateau {inner:.4f}")

    def func(z):
        z1 = z[..., 0]
        return rho(z) * D(z1.real, z1.imag)

    def grad(z):
        z1 = z[..., 0]
        dv = D(z1.real, z1.imag)
        gx, gy = D.grad(z1.real, z1.imag)
        out = rho.grad(z) * dv[..., None]
        out[..., 0] += rho(z) * (gx + 1j * gy)
        return out

    G = ChartHamiltonian(n, func, grad, support_radius=limit, value_bounds=D.extrema(), name=f"K[{D.name}]")
    h = lift_hamiltonian(G)
    return replace(h, name=f"upper(k={k},{D.name})")
