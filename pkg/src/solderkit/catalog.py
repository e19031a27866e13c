"""Closed-form test geometries with known answers.

Every geometry is a single global slice chart ``(x, y)`` with N = {x = 0}.
Curved submanifolds of flat spaces are realized by graph charts: the metric is
pulled back through a chart map whose Jacobian is itself obtained by dual
numbers, so the metric's own first derivatives stay exact.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual
from .chartcalc import MetricField, SliceChart, TensorField, endomorphism_field
from .subgeo import Normalization, Quadratic, Submanifold


class CatalogError(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class AuxField:
    """Extra test tensor: ``sign`` is +1 / -1 for g-(skew-)symmetric (1, 1) fields, else None."""

    field: TensorField
    sign: int | None = None
    adapted: bool = True


@dataclass(frozen=True)
class SpotValue:
    name: str
    expected: float
    provenance: str


@dataclass(frozen=True, eq=False)
class GeometryBundle:
    id: str
    description: str
    chart: SliceChart
    metric: MetricField
    J: TensorField | None = None
    aux: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    spot_values: tuple[SpotValue, ...] = ()

    @functools.cached_property
    def submanifold(self) -> Submanifold:
        return Submanifold(self.chart, Normalization(self.chart, "riemannian", self.metric), self.metric, self.id)

    @functools.cached_property
    def coordinate_submanifold(self) -> Submanifold:
        return Submanifold(self.chart, Normalization(self.chart, "coordinate"), self.metric, self.id)

    def adapted_fields(self) -> dict[str, TensorField]:
        out = {"g": self.metric}
        if self.J is not None:
            out["J"] = self.J
        out.update({name: a.field for name, a in self.aux.items() if a.adapted})
        return out

    def skew_symmetric_fields(self) -> dict[str, tuple[TensorField, int]]:
        """(1, 1) fields with a g-symmetry sign, J included."""
        out = {}
        if self.J is not None:
            out["J"] = (self.J, -1)
        out.update({name: (a.field, a.sign) for name, a in self.aux.items() if a.sign is not None and a.adapted})
        return out

    def summary(self) -> dict:
        return {"id": self.id, "description": self.description, "ambient_dim": self.chart.ambient_dim,
                "sub_dim": self.chart.sub_dim, "flags_expected": dict(self.expected)}


# ------------------------------------------------------------ construction


def _flat_pullback(phi: Callable) -> Callable:
    def g(c):
        D = dual.jacobian_at(phi, c)
        return np.dot(D.T, D)
    return g


def _pushforward_endomorphism(phi: Callable, ambient: np.ndarray) -> Callable:
    """Chart components ``D^-1 J_amb D`` of a constant ambient endomorphism."""
    def M(c):
        D = dual.jacobian_at(phi, c)
        return dual.solve(D, np.dot(ambient, D))
    return M


def standard_complex_structure(pairs: int) -> np.ndarray:
    """``J e_{2i} = e_{2i+1}`` on R^{2 pairs}."""
    J = np.zeros((2 * pairs, 2 * pairs))
    for i in range(pairs):
        J[2 * i + 1, 2 * i] = 1.0
        J[2 * i, 2 * i + 1] = -1.0
    return J


def _obj(rows):
    return np.array(rows, dtype=object)


def euclid_slice() -> GeometryBundle:
    chart = SliceChart(3, 2, (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    g = MetricField(chart, lambda c: np.eye(3), "g")

    def sym(c):
        x, y1, y2 = c
        return _obj([[2.0 + x * y1, 0.3 * x, 0.0],
                      [0.3 * x, 1.0 + y1 * y1 + 0.4 * x, 0.5 * y2],
                      [0.0, 0.5 * y2, 1.0 + 0.2 * y1 - 0.3 * x]])

    def offblock(c):
        M = np.eye(3).astype(object)
        M[0, 1] = 0.7  # A d/dy1 = d/dy1 + 0.7 d/dx
        return M

    aux = {
        "A_sym": AuxField(endomorphism_field(chart, sym, "A_sym"), sign=1),
        "offblock": AuxField(endomorphism_field(chart, offblock, "offblock"), sign=None, adapted=False),
    }
    return GeometryBundle(
        "euclid_slice", "flat R^3, N the plane x = 0", chart, g, None, aux,
        {"totally_geodesic": True, "soldered_g": True, "adapted:A_sym": True, "adapted:offblock": False},
    )


def polar_circle() -> GeometryBundle:
    chart = SliceChart(2, 1, (-0.9, -3.0), (0.9, 3.0))
    g = MetricField(chart, lambda c: _obj([[1.0, 0.0], [0.0, (1.0 + c[0]) ** 2]]), "g")

    def sym(c):
        x, y = c
        return _obj([[1.0 + x * np.cos(y), 0.0], [0.0, 2.0 + 0.5 * np.sin(y) + x]])

    aux = {"A_sym": AuxField(endomorphism_field(chart, sym, "A_sym"), sign=1)}
    return GeometryBundle(
        "polar_circle", "flat plane in polar-type chart g = diag(1, (1+x)^2), N the unit circle x = 0",
        chart, g, None, aux,
        {"totally_geodesic": False, "soldered_g": False, "adapted:A_sym": True},
        (SpotValue("w_g(dx)(dy,dy)", 2.0, "hand-derived: d_x (1+x)^2 at x = 0"),
         SpotValue("beta(dy,dy).n", -1.0, "hand-derived: Gamma^x_yy(0) = -1")),
    )


def hyperbolic_geodesic() -> GeometryBundle:
    chart = SliceChart(2, 1, (-1.0, -3.0), (1.0, 3.0))
    g = MetricField(chart, lambda c: _obj([[1.0, 0.0], [0.0, np.cosh(c[0]) ** 2]]), "g")

    def sym(c):
        x, y = c
        return _obj([[1.0 + x * x, 0.0], [0.0, 2.0 + 0.3 * x * np.sin(y)]])

    aux = {"A_sym": AuxField(endomorphism_field(chart, sym, "A_sym"), sign=1)}
    return GeometryBundle(
        "hyperbolic_geodesic", "hyperbolic plane in Fermi chart g = diag(1, cosh^2 x), N a geodesic",
        chart, g, None, aux,
        {"totally_geodesic": True, "soldered_g": True, "adapted:A_sym": True},
    )


def _graph_h(y1, y2):
    return 0.2 * (y1 * y1 - y2 * y2)


def graph_surface() -> GeometryBundle:
    chart = SliceChart(3, 2, (-0.5, -1.0, -1.0), (0.5, 1.0, 1.0))

    def phi(c):
        x, y1, y2 = c
        return [y1, y2, _graph_h(y1, y2) + x]

    g = MetricField(chart, _flat_pullback(phi), "g")

    def unit_normal(c):
        # Monge unit normal expressed in chart components
        _, y1, y2 = c
        h1, h2 = 0.4 * y1, -0.4 * y2
        W = np.sqrt(1.0 + h1 * h1 + h2 * h2)
        return _obj([W, -h1 / W, -h2 / W])

    def sym(c):
        x, y1, y2 = c
        G = np.asarray(g(c), dtype=object)
        n = unit_normal(c)
        e1 = _obj([0.0, 1.0, 0.0])
        phi_ = 1.0 + 0.3 * x * y1
        psi = 0.5 + 0.2 * y2 + 0.4 * x
        chi = 0.3 + 0.2 * x
        return (phi_ * np.eye(3) + psi * np.outer(n, np.dot(G, n)) + chi * np.outer(e1, np.dot(G, e1)))

    aux = {"A_sym": AuxField(endomorphism_field(chart, sym, "A_sym"), sign=1)}
    return GeometryBundle(
        "graph_surface", "flat R^3 in a graph chart, N the saddle z = 0.2 (y1^2 - y2^2)",
        chart, g, None, aux,
        {"totally_geodesic": False, "soldered_g": False, "adapted:A_sym": True},
    )


def flat_kahler_line() -> GeometryBundle:
    chart = SliceChart(4, 2, (-1.0,) * 4, (1.0,) * 4)
    g = MetricField(chart, lambda c: np.eye(4), "g")
    J0 = standard_complex_structure(2)
    J = endomorphism_field(chart, lambda c: J0, "J")
    return GeometryBundle(
        "flat_kahler_line", "flat C^2 with constant J, N the complex line x1 = x2 = 0",
        chart, g, J, {},
        {"totally_geodesic": True, "soldered_g": True, "J_invariant": True, "dOmega_zero": True,
         "soldered_J": True, "beta_j_relation": True},
    )


def _parabola_phi(c):
    x1, x2, y1, y2 = c
    # (Z, Z^2 + w) with Z = y1 + i y2, w = x1 + i x2
    return [y1, y2, y1 * y1 - y2 * y2 + x1, 2.0 * y1 * y2 + x2]


def parabola_complex_curve() -> GeometryBundle:
    chart = SliceChart(4, 2, (-0.5, -0.5, -1.2, -1.2), (0.5, 0.5, 1.2, 1.2))
    g = MetricField(chart, _flat_pullback(_parabola_phi), "g")
    J = endomorphism_field(chart, _pushforward_endomorphism(_parabola_phi, standard_complex_structure(2)), "J")
    return GeometryBundle(
        "parabola_complex_curve", "flat C^2 in the holomorphic chart (z, z^2 + w), N the curve w = 0",
        chart, g, J, {},
        {"totally_geodesic": False, "soldered_g": False, "J_invariant": True, "dOmega_zero": True,
         "soldered_J": False, "beta_j_relation": False, "rich_beta": True, "rich_sigma": True},
    )


def conformal_hermitian() -> GeometryBundle:
    chart = SliceChart(4, 2, (-1.0,) * 4, (1.0,) * 4)

    def metric(c):
        return np.exp(0.6 * c[0]) * np.eye(4)  # e^{2f}, f = 0.3 x1

    g = MetricField(chart, metric, "g")
    J0 = standard_complex_structure(2)
    J = endomorphism_field(chart, lambda c: J0, "J")
    return GeometryBundle(
        "conformal_hermitian", "R^4 with g = exp(0.6 x1) delta and constant J, N the plane x1 = x2 = 0",
        chart, g, J, {},
        {"totally_geodesic": False, "soldered_g": False, "J_invariant": True, "dOmega_zero": False,
         "soldered_J": True, "beta_j_relation": True, "rich_dOmega": True},
    )


def _c3_phi(c):
    x1, x2, x3, x4, y1, y2 = c
    return [y1, y2, y1 * y1 - y2 * y2 + x1, 2.0 * y1 * y2 + x2, x3, x4]


def nonintegrable_j6() -> GeometryBundle:
    """Flat C^3 in the chart (z, z^2 + w1, w2); J is the standard structure on the
    coordinate tangent planes and its negative on their g-orthogonal complement."""
    chart = SliceChart(6, 2, (-0.5,) * 4 + (-1.2, -1.2), (0.5,) * 4 + (1.2, 1.2))
    g = MetricField(chart, _flat_pullback(_c3_phi), "g")
    Jc = _pushforward_endomorphism(_c3_phi, standard_complex_structure(3))
    k = chart.codim

    def twisted(c):
        G = np.asarray(g(c), dtype=object)
        P = np.zeros((6, 6), dtype=object)
        P[k:, :] = dual.solve(G[k:, k:], G[k:, :])  # g-orthogonal projector onto span{d/dy}
        return np.dot(np.asarray(Jc(c), dtype=object), 2.0 * P - np.eye(6))

    J = endomorphism_field(chart, twisted, "J")
    return GeometryBundle(
        "nonintegrable_J6", "flat C^3, N the curve w = 0, J reversed on the normal bundle (non-integrable)",
        chart, g, J, {},
        {"totally_geodesic": False, "soldered_g": False, "J_invariant": True, "dOmega_zero": False,
         "soldered_J": False, "beta_j_relation": False, "rich_nijenhuis": True},
    )


_BUILDERS: dict[str, Callable[[], GeometryBundle]] = {
    "conformal_hermitian": conformal_hermitian,
    "euclid_slice": euclid_slice,
    "flat_kahler_line": flat_kahler_line,
    "graph_surface": graph_surface,
    "hyperbolic_geodesic": hyperbolic_geodesic,
    "nonintegrable_J6": nonintegrable_j6,
    "parabola_complex_curve": parabola_complex_curve,
    "polar_circle": polar_circle,
}

GEOMETRY_IDS = tuple(sorted(_BUILDERS))

RICHNESS_THRESHOLDS = {
    "rich_beta": 0.1,
    "rich_sigma": 0.1,
    "rich_dOmega": 0.01,
    "rich_nijenhuis": 1e-3,
}


@functools.lru_cache(maxsize=None)
def get_geometry(geometry_id: str) -> GeometryBundle:
    try:
        builder = _BUILDERS[geometry_id]
    except KeyError:
        raise CatalogError(f"unknown geometry {geometry_id!r}; known: {', '.join(GEOMETRY_IDS)}") from None
    bundle = builder()
    if geometry_id == "nonintegrable_J6":
        _require_nijenhuis_richness(bundle)
    return bundle


def _require_nijenhuis_richness(bundle: GeometryBundle, samples: int = 6) -> None:
    from .soldering import nijenhuis_term

    sub = bundle.submanifold
    pts = bundle.chart.sample_submanifold(samples, seed=7)
    worst = max(float(np.max(np.abs(nijenhuis_term(bundle.J, sub, P)))) for P in pts)
    if worst <= RICHNESS_THRESHOLDS["rich_nijenhuis"]:
        raise CatalogError(f"{bundle.id}: tangential Nijenhuis term is trivial ({worst:.3e})")


def list_geometries() -> list[dict]:
    return [get_geometry(gid).summary() for gid in GEOMETRY_IDS]


def random_adapted_tensor(chart: SliceChart, p: int, q: int, rng: np.random.Generator,
                          name: str = "R") -> TensorField:
    """Random quadratic-polynomial tensor adapted to the coordinate normalization.

    Components with exactly one normal index (all others tangential) carry a
    factor ``x^a`` so they vanish on N.
    """
    m, k = chart.ambient_dim, chart.codim
    shape = (m,) * (p + q)
    polys = {}
    for idx in np.ndindex(shape):
        poly = Quadratic(rng.normal(), rng.normal(size=m) * 0.5, rng.normal(size=(m, m)) * 0.25)
        mixed = sum(i < k for i in idx) == 1
        polys[idx] = (poly, int(rng.integers(k)) if mixed else None)

    def fn(c):
        out = np.empty(shape, dtype=object)
        for idx, (poly, a) in polys.items():
            out[idx] = poly(c) if a is None else c[a] * poly(c)
        return out

    return TensorField(chart, p, q, fn, name=name)
