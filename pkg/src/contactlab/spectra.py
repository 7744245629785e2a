"""Translated points and spectra of contactomorphisms of the sphere.

A time-1 map is a :class:`ContactMap`: calling it on a batch of sphere
points returns the images together with the conformal factors ``g``
(``phi^* alpha1 = e^g alpha1``).  A point ``x`` is a translated point with
time shift ``t`` when ``exp(-i t) phi(x) = x`` and ``g(x) = 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .errors import StructureViolation
from .flows import ContactHamiltonian, flow_endpoints, integrate_contact_flow
from .profiles import RadialProfile

TWO_PI = 2.0 * np.pi
RESIDUAL_TARGET = 1e-7
DEDUP_TOL = 1e-5


# --------------------------------------------------------------------------
# Maps
# --------------------------------------------------------------------------

class ContactMap:
    """Base class: ``phi(x) -> (image, g)`` on batches of shape ``(N, n+1)``."""

    n: int

    def __call__(self, x):
        raise NotImplementedError

    def seed_hints(self) -> np.ndarray:
        """Extra seed points likely to be translated points (may be empty)."""
        return np.zeros((0, self.n + 1), dtype=complex)

    def compose(self, other: "ContactMap") -> "ContactMap":
        """``self o other``."""
        return ComposedMap(other, self)


class IdentityMap(ContactMap):
    def __init__(self, n: int):
        self.n = n

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=complex))
        return x.copy(), np.zeros(x.shape[0])


class ReebMap(ContactMap):
    def __init__(self, n: int, s: float):
        self.n = n
        self.s = float(s)

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=complex))
        return geom.reeb_flow(x, self.s), np.zeros(x.shape[0])


class UnitaryMap(ContactMap):
    """``x -> U x``; unitaries preserve alpha1, so ``g = 0``."""

    def __init__(self, U):
        self.U = np.asarray(U, dtype=complex)
        self.n = self.U.shape[0] - 1

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=complex))
        return x @ self.U.T, np.zeros(x.shape[0])

    def seed_hints(self) -> np.ndarray:
        # eigenvectors are exactly the translated points
        _, V = np.linalg.eig(self.U)
        return geom.normalize(V.T)

    def inverse(self) -> "UnitaryMap":
        return UnitaryMap(self.U.conj().T)


class FlowMap(ContactMap):
    """Time-``T`` map of a contact Hamiltonian, integrated with RK4."""

    def __init__(self, h: ContactHamiltonian, T: float = 1.0, steps: int | None = None):
        self.h = h
        self.n = h.n
        self.T = float(T)
        self.steps = steps if steps is not None else max(400, math.ceil(100 * abs(T) / TWO_PI))
        self._hints = None

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=complex))
        if self.T == 0:
            return x.copy(), np.zeros(x.shape[0])
        return flow_endpoints(self.h, x, self.T, self.steps)

    def seed_hints(self) -> np.ndarray:
        if self._hints is None:
            self._hints = critical_seeds(self.h) if self.h.is_autonomous else np.zeros((0, self.n + 1), complex)
        return self._hints


class ComposedMap(ContactMap):
    """``second o first``; conformal factors add: ``g = g1 + g2 o first``."""

    def __init__(self, first: ContactMap, second: ContactMap):
        if first.n != second.n:
            raise ValueError("dimension mismatch")
        self.first, self.second, self.n = first, second, first.n

    def __call__(self, x):
        y, g1 = self.first(x)
        z, g2 = self.second(y)
        return z, g1 + g2

    def seed_hints(self) -> np.ndarray:
        hints = [self.first.seed_hints()]
        second = self.second.seed_hints()
        if isinstance(self.first, UnitaryMap):
            second = second @ self.first.inverse().U.T
        hints.append(second)
        return np.concatenate(hints, axis=0)


def conjugate(U, phi: ContactMap) -> ContactMap:
    """``U o phi o U^{-1}``."""
    Um = UnitaryMap(U)
    return ComposedMap(ComposedMap(Um.inverse(), phi), Um)


def critical_seeds(h: ContactHamiltonian, samples: int = 2000, starts: int = 8, seed: int = 0,
                   max_iter: int = 400) -> np.ndarray:
    """Approximate critical points of an autonomous ``h`` by normalized gradient ascent and descent.

    Where ``dh`` vanishes the contact vector field is ``h R``, so such points
    (when also ``dh(R) = 0``) are translated points with shift ``T h(x)``.
    """
    pts = geom.quasi_random_sphere(h.n, samples, seed + 7)
    vals = h.evaluate(0.0, pts)
    order = np.argsort(vals)
    out = []
    for sign, idx in ((1.0, order[::-1][:starts]), (-1.0, order[:starts])):
        x = pts[idx].copy()
        hv = sign * vals[idx]
        step = np.full(len(idx), 0.05)
        for _ in range(max_iter):
            d = sign * geom.tangent_project(x, h.gradient(0.0, x))
            nd = np.linalg.norm(d, axis=1)
            active = (nd > 1e-14) & (step > 1e-10)
            if not np.any(active):
                break
            dirn = np.where(active[:, None], d / np.where(nd > 0, nd, 1.0)[:, None], 0.0)
            trial = geom.normalize(x + step[:, None] * dirn)
            tv = sign * h.evaluate(0.0, trial)
            ok = active & (tv >= hv)
            x[ok] = trial[ok]
            hv[ok] = tv[ok]
            step = np.where(ok, np.minimum(2 * step, 0.05), np.where(active, 0.5 * step, step))
        out.append(x)
    return np.concatenate(out, axis=0)


# --------------------------------------------------------------------------
# Residuals
# --------------------------------------------------------------------------

def residual_from_image(x, y, g, t) -> np.ndarray:
    """``|exp(-i t) y - x| + |g|`` (vectorized)."""
    return np.linalg.norm(geom.reeb_flow(y, -np.asarray(t)) - x, axis=-1) + np.abs(g)


def translated_point_residual(phi: ContactMap, x, t) -> float | np.ndarray:
    x = np.asarray(x, dtype=complex)
    y, g = phi(np.atleast_2d(x))
    r = residual_from_image(np.atleast_2d(x), y, g, t)
    return float(r[0]) if x.ndim == 1 else r


def is_discriminant_point(phi: ContactMap, x, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=complex)
    y, g = phi(np.atleast_2d(x))
    return bool(np.linalg.norm(y[0] - x) <= tol and abs(g[0]) <= tol)


# --------------------------------------------------------------------------
# Spectrum containers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumBranch:
    """The family ``T -> slope * T + 2 pi m`` for all integers ``m``."""

    slope: float
    valid: tuple = (-np.inf, np.inf)

    def values(self, T: float, window=(0.0, TWO_PI)) -> np.ndarray:
        base = self.slope * T
        lo, hi = window
        m0 = math.ceil((lo - base) / TWO_PI - 1e-12)
        m1 = math.floor((hi - base) / TWO_PI + 1e-12)
        vals = base + TWO_PI * np.arange(m0, m1 + 1)
        return vals[(vals >= lo - 1e-12) & (vals < hi)]

    def index(self, value: float, T: float) -> int:
        """Branch index ``m`` of a value on this branch."""
        return int(round((value - self.slope * T) / TWO_PI))


def circular_distance(a, b, period: float = TWO_PI):
    d = np.mod(np.asarray(a) - np.asarray(b), period)
    return np.minimum(d, period - d)


@dataclass
class SpectrumSet:
    """Analytic branches plus numerically detected values in ``window``."""

    branches: tuple = ()
    T: float | None = None
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    points: np.ndarray | None = None
    window: tuple = (0.0, TWO_PI)
    failures: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def is_analytic(self) -> bool:
        return bool(self.branches)

    @property
    def no_convergence(self) -> list:
        return [f for f in self.failures if f["status"] == "no_convergence"]

    def all_values(self, window=None) -> np.ndarray:
        """Distinct values in ``window`` (branch values first evaluated at ``T``)."""
        window = self.window if window is None else window
        vals = list(self.values[(self.values >= window[0]) & (self.values < window[1])])
        if self.branches:
            for b in self.branches:
                vals.extend(b.values(self.T, window))
        return _dedup(np.array(vals, dtype=float), None)[0]

    def contains(self, v: float, tol: float = DEDUP_TOL) -> bool:
        vals = self.all_values((v - TWO_PI, v + TWO_PI))
        return bool(vals.size and np.min(np.abs(vals - v)) <= tol)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "window": list(self.window),
            "branches": [{"slope": b.slope, "offsets": "2*pi*m"} for b in self.branches],
            "values": [float(v) for v in self.values],
            "residuals": [float(r) for r in self.residuals],
            "failures": [{k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in f.items()}
                         for f in self.failures],
            "stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _dedup(values, residuals, tol: float = DEDUP_TOL):
    values = np.asarray(values, dtype=float)
    if residuals is None:
        residuals = np.zeros_like(values)
    order = np.argsort(values)
    keep_v, keep_r, keep_i = [], [], []
    for i in order:
        if keep_v and abs(values[i] - keep_v[-1]) <= tol:
            if residuals[i] < keep_r[-1]:
                keep_v[-1], keep_r[-1], keep_i[-1] = values[i], residuals[i], i
            continue
        keep_v.append(values[i])
        keep_r.append(residuals[i])
        keep_i.append(i)
    return np.array(keep_v), np.array(keep_r), np.array(keep_i, dtype=int)


def spectra_agree(a, b, tol: float = DEDUP_TOL, period: float = TWO_PI) -> tuple[bool, float]:
    """Hausdorff comparison of two value sets modulo ``period``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        return a.size == b.size, 0.0 if a.size == b.size else np.inf
    d = circular_distance(a[:, None], b[None, :], period)
    gap = max(np.max(np.min(d, axis=1)), np.max(np.min(d, axis=0)))
    return bool(gap <= tol), float(gap)


def spectrum_radial(f: RadialProfile, T: float) -> SpectrumSet:
    """Two branches: slope ``pi r^2 - eps`` (plateau) and slope 0 (outside the support)."""
    if not 0 <= T <= 1:
        raise ValueError("T must lie in [0, 1]")
    return SpectrumSet(branches=(SpectrumBranch(f.height), SpectrumBranch(0.0)), T=float(T))


def spectrum_branches(slopes, T: float, window=(0.0, TWO_PI)) -> SpectrumSet:
    return SpectrumSet(branches=tuple(SpectrumBranch(float(a)) for a in slopes), T=float(T), window=window)


# --------------------------------------------------------------------------
# Numeric spectrum
# --------------------------------------------------------------------------

def _tangent_basis(x):
    """Real orthonormal bases of ``T_x S`` as complex arrays of shape ``(N, 2n+1, n+1)``."""
    N, m = x.shape
    R = geom.to_real(x)
    P = np.eye(2 * m)[None] - R[:, :, None] * R[:, None, :]
    # eigenvectors of the projector with eigenvalue 1 span the tangent space
    _, vecs = np.linalg.eigh(P)
    basis = np.swapaxes(vecs[:, :, 1:], 1, 2)
    return geom.from_real(basis)


def _residual_vec(x, y, g, t):
    d = geom.reeb_flow(y, -t) - x
    return np.concatenate([geom.to_real(d), g[:, None]], axis=1)


def _refine(phi: ContactMap, x0, t0, max_iter: int = 50, fd: float = 1e-7, target: float = RESIDUAL_TARGET):
    """Damped Gauss-Newton (Levenberg-Marquardt) in ``(x, t)`` for a batch of candidates."""
    x = x0.copy()
    t = t0.copy()
    M, m = x.shape
    p = 2 * m  # tangent dim 2n+1 plus t
    y, g = phi(x)
    F = _residual_vec(x, y, g, t)
    res = residual_from_image(x, y, g, t)
    mu = np.full(M, 1e-3)
    status = np.where(res <= target, "converged", "active").astype(object)
    iters = np.zeros(M, dtype=int)
    flat = np.zeros(M, dtype=int)  # consecutive iterations without real progress
    for it in range(max_iter):
        act = np.nonzero(status == "active")[0]
        if act.size == 0:
            break
        xa, ta, Fa = x[act], t[act], F[act]
        B = _tangent_basis(xa)
        k = B.shape[1]
        pert = geom.normalize(xa[:, None, :] + fd * B).reshape(-1, m)
        yp, gp = phi(pert)
        tp = np.repeat(ta, k)
        Fp = _residual_vec(pert, yp, gp, tp).reshape(act.size, k, -1)
        J = np.empty((act.size, Fa.shape[1], p))
        J[:, :, :k] = np.swapaxes((Fp - Fa[:, None, :]) / fd, 1, 2)
        dt_col = geom.to_real(-1j * geom.reeb_flow(y[act], -ta))
        J[:, :, k] = np.concatenate([dt_col, np.zeros((act.size, 1))], axis=1)
        JtJ = np.einsum("nij,nik->njk", J, J)
        JtF = np.einsum("nij,ni->nj", J, Fa)
        A = JtJ + mu[act, None, None] * np.eye(p)[None]
        step = -np.linalg.solve(A, JtF[..., None])[..., 0]
        xn = geom.normalize(xa + np.einsum("nk,nkm->nm", step[:, :k], B))
        tn = ta + step[:, k]
        yn, gn = phi(xn)
        Fn = _residual_vec(xn, yn, gn, tn)
        better = np.linalg.norm(Fn, axis=1) < np.linalg.norm(Fa, axis=1)
        upd = act[better]
        x[upd], t[upd], F[upd], y[upd], g[upd] = xn[better], tn[better], Fn[better], yn[better], gn[better]
        prev = res[act].copy()
        res[upd] = residual_from_image(xn[better], yn[better], gn[better], tn[better])
        progress = (prev - res[act]) > 0.05 * prev
        flat[act] = np.where(progress, 0, flat[act] + 1)
        mu[upd] = np.maximum(mu[upd] / 3.0, 1e-12)
        mu[act[~better]] *= 10.0
        iters[act] += 1
        status[upd[res[upd] <= target]] = "converged"
        small_step = np.linalg.norm(step, axis=1) < 1e-13
        # a positive local minimum of the residual is not a translated point
        plateaued = (flat[act] >= 3) & (res[act] > 100 * target)
        stalled = act[(~better & (mu[act] > 1e8)) | small_step | plateaued]
        status[stalled[status[stalled] == "active"]] = "stalled"
    status[status == "active"] = "no_convergence"
    return x, t, res, status, iters


def spectrum_numeric(
    phi: ContactMap,
    window=(0.0, TWO_PI),
    n_points: int = 2000,
    n_times: int = 400,
    seed: int = 0,
    max_iter: int = 50,
    per_bucket: int = 3,
    extra_seeds=None,
) -> SpectrumSet:
    """Numeric spectrum of ``phi`` in ``window``.

    Coarse scan of the residual over quasi-random sphere points (plus the
    map's seed hints) and ``n_times`` shifts per ``2 pi``, then
    Gauss-Newton refinement of coarse local minima below ``10 x`` the grid
    resolution, then deduplication of converged shifts.
    """
    lo, hi = float(window[0]), float(window[1])
    if not np.isfinite(lo) or not np.isfinite(hi) or hi <= lo:
        raise ValueError("window must be bounded and non-empty")
    n = phi.n
    seeds = [geom.quasi_random_sphere(n, n_points, seed), phi.seed_hints()]
    if extra_seeds is not None:
        seeds.append(np.atleast_2d(np.asarray(extra_seeds, dtype=complex)))
    X = np.concatenate(seeds, axis=0)
    Y, G = phi(X)

    dt = TWO_PI / n_times
    grid = lo + dt * np.arange(int(math.ceil((hi - lo) / dt)))
    coarse_tol = 10 * (dt / 2)
    H = geom.herm_inner(X, Y)
    # residual over the grid: |y|^2 + |x|^2 - 2 Re(exp(-it) <x, y>)
    R = np.sqrt(np.maximum(2.0 - 2.0 * np.real(np.exp(-1j * grid)[None, :] * H[:, None]), 0.0)) + np.abs(G)[:, None]
    left = np.roll(R, 1, axis=1)
    right = np.roll(R, -1, axis=1)
    if hi - lo < TWO_PI - 1e-12:
        left[:, 0] = np.inf
        right[:, -1] = np.inf
    cand_i, cand_j = np.nonzero((R <= left) & (R <= right) & (R <= coarse_tol))

    # exact minimizing shift for each candidate
    tstar = np.angle(H[cand_i])
    tstar = tstar + TWO_PI * np.round((grid[cand_j] - tstar) / TWO_PI)
    res0 = residual_from_image(X[cand_i], Y[cand_i], G[cand_i], tstar)

    conv_t, conv_r, conv_x = [], [], []
    ok = res0 <= RESIDUAL_TARGET
    conv_t.extend(tstar[ok])
    conv_r.extend(res0[ok])
    conv_x.extend(X[cand_i[ok]])

    # refine the best few unresolved candidates per coarse bucket
    bucket = np.floor((tstar - lo) / dt).astype(int)
    solved = set(bucket[ok])
    todo = []
    for b in np.unique(bucket[~ok]):
        if b in solved:
            continue
        idx = np.nonzero((bucket == b) & ~ok)[0]
        todo.extend(idx[np.argsort(res0[idx])][:per_bucket])
    failures = []
    n_refined = len(todo)
    if todo:
        todo = np.array(todo)
        xr, tr, rr, st, _ = _refine(phi, X[cand_i[todo]], tstar[todo], max_iter=max_iter)
        good = st == "converged"
        conv_t.extend(tr[good])
        conv_r.extend(rr[good])
        conv_x.extend(xr[good])
        for tt, r, s in zip(tr[~good], rr[~good], st[~good]):
            failures.append({"t": float(tt), "residual": float(r), "status": str(s)})

    # reduce into the window and deduplicate
    vals, ress, pts = [], [], []
    for tt, r, xx in zip(conv_t, conv_r, conv_x):
        m0 = math.ceil((lo - tt) / TWO_PI - 1e-12)
        m1 = math.floor((hi - tt) / TWO_PI + 1e-12)
        for m in range(m0, m1 + 1):
            v = tt + TWO_PI * m
            if lo - 1e-12 <= v < hi:
                vals.append(max(v, lo))
                ress.append(r)
                pts.append(xx)
    if vals:
        v, r, keep = _dedup(np.array(vals), np.array(ress))
        # merge across the periodic seam of a full window
        if hi - lo >= TWO_PI - 1e-12 and v.size > 1 and (v[0] + TWO_PI - v[-1]) <= DEDUP_TOL:
            v, r, keep = v[:-1], r[:-1], keep[:-1]
        P = np.array(pts)[keep]
    else:
        v, r, P = np.zeros(0), np.zeros(0), np.zeros((0, n + 1), dtype=complex)
    return SpectrumSet(
        values=v, residuals=r, points=P, window=(lo, hi), failures=failures,
        stats={"seeds": int(X.shape[0]), "candidates": int(cand_i.size), "refined": int(n_refined)},
    )


# --------------------------------------------------------------------------
# Orbit structure
# --------------------------------------------------------------------------

def reeb_orbit_speed(h: ContactHamiltonian, x, speeds, T: float = 1.0, steps: int = 400, tol: float = 1e-6):
    """The speed ``a`` in ``speeds`` with ``phi_h^t(x) = exp(i a t) x`` on ``[0, T]``, or ``None``."""
    s = integrate_contact_flow(h, np.atleast_2d(x), T, steps)
    traj = s.points[0]
    x = np.asarray(x, dtype=complex)
    for a in speeds:
        ref = geom.reeb_flow(x, a * s.times)
        if np.max(np.linalg.norm(traj - ref, axis=1)) <= tol:
            return float(a)
    return None


def verify_reeb_orbit_structure(h: ContactHamiltonian, x, speeds, T: float = 1.0, steps: int = 400,
                                 tol: float = 1e-6) -> bool:
    """Check that the trajectory of ``x`` is a Reeb orbit with one of the predicted speeds.

    Raises
    ------
    StructureViolation
        If the trajectory matches none of ``speeds``.
    """
    if reeb_orbit_speed(h, x, speeds, T, steps, tol) is None:
        raise StructureViolation(f"trajectory is not a Reeb orbit with speed in {list(speeds)}")
    return True
