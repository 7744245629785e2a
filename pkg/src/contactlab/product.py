"""Contact product ``S x S x R`` with ``beta = pr_2^* alpha - e^theta pr_1^* alpha``.

The graph of a contact isotopy ``(phi_t, g_t)`` is the family of product maps
``(x1, x2, theta) -> (x1, phi_t(x2), theta + g_t(x2))``; it sends the diagonal
``{(x, x, 0)}`` to Legendrians whose Reeb chords reproduce the spectrum of
``phi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geom
from .capacity import NonSqueezeDecision, nonsqueeze_decide
from .errors import ConstraintViolation, MissingConformalFactor, StructureViolation
from .flows import ContactHamiltonian, ContactIsotopySample, integrate_contact_flow
from .spectra import TWO_PI, ContactMap, SpectrumSet, spectrum_numeric


@dataclass(frozen=True, eq=False)
class ProductPoint:
    x1: np.ndarray
    x2: np.ndarray
    theta: float

    def __post_init__(self):
        if np.shape(self.x1) != np.shape(self.x2):
            raise ValueError("factors must live in the same space")


def beta_eval(p: ProductPoint, w, tol: float = geom.DEFAULT_TOL) -> float:
    """``beta_p(w)`` for ``w = (w1, w2, w_theta)``; raises TangencyViolation for non-tangent parts."""
    w1, w2, _ = w
    return geom.alpha1_eval(p.x2, w2, tol) - np.exp(p.theta) * geom.alpha1_eval(p.x1, w1, tol)


def beta_ambient(x1, x2, theta, w1, w2):
    """Unchecked, vectorized ``beta`` with the ambient extension of ``alpha1``."""
    return geom.alpha1(x2, w2) - np.exp(theta) * geom.alpha1(x1, w1)


def dbeta(p: ProductPoint, u, v) -> float:
    """Exact ``d beta = d alpha_2 - e^theta (d theta ^ alpha_1 + d alpha_1)``."""
    (u1, u2, ut), (v1, v2, vt) = u, v
    e = np.exp(p.theta)
    return float(
        geom.dalpha1(u2, v2)
        - e * (ut * geom.alpha1(p.x1, v1) - vt * geom.alpha1(p.x1, u1))
        - e * geom.dalpha1(u1, v1)
    )


def dbeta_fd(p: ProductPoint, u, v, h: float = 1e-6) -> float:
    """``d beta(u, v) = u(beta(v)) - v(beta(u))`` along constant ambient fields, by central differences."""
    def shifted(w, s):
        return (p.x1 + s * w[0], p.x2 + s * w[1], p.theta + s * w[2])

    def b(at, w):
        return beta_ambient(at[0], at[1], at[2], w[0], w[1])

    du = (b(shifted(u, h), v) - b(shifted(u, -h), v)) / (2 * h)
    dv = (b(shifted(v, h), u) - b(shifted(v, -h), u)) / (2 * h)
    return float(du - dv)


def product_reeb_field(p: ProductPoint):
    return (np.zeros_like(p.x1), 1j * np.asarray(p.x2), 0.0)


def random_product_tangent(p: ProductPoint, rng: np.random.Generator):
    return (geom.random_tangent(p.x1, rng), geom.random_tangent(p.x2, rng), float(rng.standard_normal()))


# --------------------------------------------------------------------------
# Graphs
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GraphIsotopy:
    """Graph of a sampled contact isotopy; ``phi`` optionally evaluates the time-``T`` map anywhere."""

    sample: ContactIsotopySample
    phi: ContactMap | None = None

    @property
    def times(self) -> np.ndarray:
        return self.sample.times

    def apply(self, j: int, x1, i: int, theta: float) -> ProductPoint:
        """``Phi_{t_j}(x1, seeds[i], theta)`` read from the stored samples."""
        return ProductPoint(np.asarray(x1), self.sample.points[i, j], theta + float(self.sample.g[i, j]))

    def diagonal_image(self, j: int):
        """Images of the diagonal points over the seeds: ``(x, phi_t(x), g_t(x))``."""
        return self.sample.seeds, self.sample.points[:, j], self.sample.g[:, j]

    def legendrian_residual(self) -> float | None:
        """Max ``|beta|`` on central-difference tangents of ``Phi_t(Delta)``.

        Needs a sample built by :func:`graph_sample` (seeds with stencils).
        """
        st = self.sample.meta.get("stencil")
        if st is None:
            return None
        nb, d, tangents = st["base"], st["step"], st["tangents"]
        P, G = self.sample.points, self.sample.g
        worst = 0.0
        for j in range(P.shape[1]):
            c = P[:nb, j]
            for q in range(tangents):
                plus = P[nb + 2 * q * nb: nb + (2 * q + 1) * nb, j]
                minus = P[nb + (2 * q + 1) * nb: nb + (2 * q + 2) * nb, j]
                w2 = (plus - minus) / (2 * d)
                x0 = P[:nb, 0]
                w1 = (P[nb + 2 * q * nb: nb + (2 * q + 1) * nb, 0] - P[nb + (2 * q + 1) * nb: nb + (2 * q + 2) * nb, 0]) / (2 * d)
                b = beta_ambient(x0, c, G[:nb, j], w1, w2)
                worst = max(worst, float(np.max(np.abs(b))))
        return worst


def graph_sample(h: ContactHamiltonian, x, T: float, steps: int, rng: np.random.Generator,
                 tangents: int = 2, step: float = 1e-5, record_every: int = 1) -> ContactIsotopySample:
    """Integrate seeds ``x`` together with ``normalize(x +- step v)`` for random tangents ``v``."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    parts = [x]
    for _ in range(tangents):
        v = geom.random_tangent(x, rng)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        parts += [geom.normalize(x + step * v), geom.normalize(x - step * v)]
    s = integrate_contact_flow(h, np.concatenate(parts), T, steps, record_every=record_every)
    s.meta["stencil"] = {"base": x.shape[0], "step": step, "tangents": tangents}
    return s


def graph_of(sample: ContactIsotopySample, phi: ContactMap | None = None, check: bool = True,
             tol: float = 1e-6) -> GraphIsotopy:
    """Assemble the graph; when the sample has stencils, check the Legendrian condition."""
    if sample.g is None or np.any(~np.isfinite(sample.g)):
        raise MissingConformalFactor("the sample carries no conformal factors")
    graph = GraphIsotopy(sample, phi)
    if check:
        res = graph.legendrian_residual()
        if res is not None and res > tol:
            raise StructureViolation(f"graph is not Legendrian: max |beta| = {res:.3e}")
    return graph


def _five_point(y, dt):
    """Fourth-order derivative along axis 1 (one-sided stencils at the ends)."""
    d = np.empty_like(y)
    d[:, 2:-2] = (y[:, :-4] - 8 * y[:, 1:-3] + 8 * y[:, 3:-1] - y[:, 4:]) / (12 * dt)
    c0 = np.array([-25, 48, -36, 16, -3]) / (12 * dt)
    for idx, sl in ((0, slice(0, 5)), (1, slice(1, 6))):
        d[:, idx] = np.tensordot(y[:, sl], c0, axes=([1], [0]))
    for idx, sl in ((-1, slice(-5, None)), (-2, slice(-6, -1))):
        d[:, idx] = -np.tensordot(y[:, sl][:, ::-1], c0, axes=([1], [0]))
    return d


def ham_graph_sides(sample: ContactIsotopySample, h: ContactHamiltonian):
    """``beta(d/dt Phi_t)``, ``alpha(d/dt phi_t)`` and ``h_t(phi_t)`` on stored trajectories."""
    P, G, t = sample.points, sample.g, sample.times
    if P.shape[1] < 6:
        raise ValueError("need at least 6 recorded times")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-12 * max(1.0, abs(t[-1])):
        raise ValueError("recorded times must be uniform")
    dt = dt[0]
    V = _five_point(P, dt)
    x1 = P[:, :1]  # first factor fixed along the graph
    beta_side = beta_ambient(np.broadcast_to(x1, P.shape), P, G, np.zeros_like(P), V)
    alpha_side = geom.alpha1(P, V)
    h_side = np.stack([h.evaluate(tj, P[:, j]) for j, tj in enumerate(t)], axis=1)
    return beta_side, alpha_side, h_side


def check_ham_graph(sample: ContactIsotopySample, h: ContactHamiltonian) -> float:
    """Max discrepancy among the three sides of ``beta(Phi') = alpha(phi') = h``."""
    b, a, hv = ham_graph_sides(sample, h)
    return float(max(np.max(np.abs(b - a)), np.max(np.abs(b - hv))))


class _DiagonalChordMap(ContactMap):
    """Chords from the diagonal to its graph image, read as a map on the second factor.

    For a diagonal point ``(x, x, 0)`` the graph image is ``(x, phi(x), g(x))``;
    the product Reeb flow only moves the second factor, so the chord residual
    is ``|x1' - x| + |exp(-it) x2' - x| + |theta'|``.
    """

    def __init__(self, graph: GraphIsotopy):
        if graph.phi is None:
            raise ValueError("spectrum_via_graph needs the time-T map of the graph")
        self.graph = graph
        self.n = graph.phi.n

    def product_image(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=complex))
        y, g = self.graph.phi(x)
        return x, y, g

    def __call__(self, x):
        x1, x2, theta = self.product_image(x)
        # the first factor is untouched by the graph map, so it adds nothing to the residual
        drift = np.linalg.norm(x1 - np.atleast_2d(x), axis=1)
        return x2, np.abs(theta) + drift

    def seed_hints(self):
        return self.graph.phi.seed_hints()


def spectrum_via_graph(graph: GraphIsotopy, window=(0.0, TWO_PI), **kw) -> SpectrumSet:
    """Reeb chords between the diagonal and its graph image."""
    return spectrum_numeric(_DiagonalChordMap(graph), window=window, **kw)


def order_selector_bounds(graph: GraphIsotopy, h: ContactHamiltonian, T: float) -> tuple[float, float]:
    """``(T min, T max)`` of ``beta(d/dt Phi_t)`` over the stored trajectories, per unit time."""
    b, _, _ = ham_graph_sides(graph.sample, h)
    a, c = T * float(np.min(b)), T * float(np.max(b))
    return (min(a, c), max(a, c))


def prequantization_nonsqueeze(k: int, a1: float, a2: float) -> NonSqueezeDecision:
    """Ceiling arithmetic with the constraint ``a1 <= sqrt(2)`` enforced."""
    if a1 > geom.SQRT2 * (1 + 1e-12):
        raise ConstraintViolation(f"a1 = {a1} exceeds sqrt(2)")
    d = nonsqueeze_decide(k, a1, a2)
    return NonSqueezeDecision(d.k, d.a1, d.a2, d.witness_j, d.verdict, d.notes + ("a1 <= sqrt(2) enforced",))
