"""Normal frames, extensions and the second fundamental form of a normalized slice submanifold."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dual
from .chartcalc import (
    MetricField,
    SliceChart,
    TensorField,
    christoffels_from,
    covariant_from,
)

FRAME_CONDITION_LIMIT = 1e8


class NormalizationError(ValueError):
    """The normal bundle does not complement TN, or the operation needs a Riemannian one."""


def _inner(G, u, v):
    return np.dot(u, np.dot(G, v))


def normal_frame_from_metric(G, codim: int):
    """g-orthonormal basis of the g-orthogonal complement of the ``y`` coordinate plane.

    Works on float or dual-valued metric matrices.  Each ``d/dx^a`` is projected
    onto the complement of ``span{d/dy^u}`` and the results are Gram-Schmidt
    orthonormalized in index order.
    """
    G = np.asarray(G, dtype=object)
    m = G.shape[0]
    eye = np.eye(m)
    tangent = []
    for u in range(codim, m):
        v = eye[u].astype(object)
        for t in tangent:
            v = v - _inner(G, t, v) * t
        tangent.append(v / np.sqrt(_inner(G, v, v)))
    normals = []
    for a in range(codim):
        v = eye[a].astype(object)
        for t in tangent + normals:
            v = v - _inner(G, t, v) * t
        n2 = _inner(G, v, v)
        if dual.real(n2) <= 1e-16 * max(1.0, dual.real(G[a, a])):
            raise NormalizationError("normal projection is rank deficient")
        normals.append(v / np.sqrt(n2))
    return np.array(normals, dtype=object)


@dataclass(frozen=True, eq=False)
class Normalization:
    """A choice of normal bundle along N = {x = 0}.

    ``mode`` is ``"riemannian"`` (g-orthogonal complement, needs ``metric``),
    ``"coordinate"`` (span of the ``d/dx^a``) or ``"explicit"`` (``vectors``
    maps the ``y`` coordinates to a ``(codim, m)`` array).
    """

    chart: SliceChart
    mode: str
    metric: MetricField | None = None
    vectors: Callable | None = None

    def __post_init__(self):
        if self.mode not in ("riemannian", "coordinate", "explicit"):
            raise ValueError(f"unknown normalization mode {self.mode!r}")
        if self.mode == "riemannian" and self.metric is None:
            raise ValueError("a Riemannian normalization needs a metric")
        if self.mode == "explicit" and self.vectors is None:
            raise ValueError("an explicit normalization needs normal vectors")

    @property
    def riemannian(self) -> bool:
        return self.mode == "riemannian"

    def normal_vectors(self, ys) -> np.ndarray:
        """Normal vectors at ``(0, ys)``; ``ys`` may be duals."""
        k, m = self.chart.codim, self.chart.ambient_dim
        if self.mode == "coordinate":
            return np.eye(m)[:k]
        if self.mode == "explicit":
            return np.asarray(self.vectors(ys), dtype=object).reshape(k, m)
        coords = [0.0] * k + list(ys)
        return normal_frame_from_metric(self.metric(coords), k)

    def extension(self, a: int) -> TensorField:
        """Constant-in-x extension of the a-th normal vector."""
        return extend_along_normal(self.chart, lambda ys: self.normal_vectors(ys)[a],
                                   name=f"X{a}", cache=(self, a))

    def extensions(self) -> list[TensorField]:
        return [self.extension(a) for a in range(self.chart.codim)]


def extend_along_normal(chart: SliceChart, F: Callable, name: str = "", cache=None) -> TensorField:
    """Ambient vector field with the components of ``F(y)``, independent of x."""
    k = chart.codim

    def fn(c):
        return np.asarray(F(list(c[k:])), dtype=object)

    if cache is None:
        return TensorField(chart, 1, 0, fn, name=name)
    return _ExtendedNormal(chart, 1, 0, fn, (), name, cache)


@functools.lru_cache(maxsize=4096)
def _frame_jet(normalization: Normalization, key):
    # all normal extensions share one Gram-Schmidt pass per point
    k = normalization.chart.codim
    return dual.jet(lambda c: normalization.normal_vectors(list(c[k:])), np.asarray(key))


@dataclass(frozen=True, eq=False)
class _ExtendedNormal(TensorField):
    cache: tuple = (None, 0)

    def _compute_jet(self, point):
        normalization, a = self.cache
        val, grad = _frame_jet(normalization, tuple(point.tolist()))
        return val[a], grad[a]


@dataclass(frozen=True)
class SubmanifoldFrame:
    """Adapted frame at a point of N.

    ``basis`` has the normal frame vectors followed by the ``d/dy^u`` as its
    columns; ``coframe`` is its inverse, so rows ``codim:`` annihilate the
    normal bundle and rows ``:codim`` annihilate TN.
    """

    point: np.ndarray
    codim: int
    basis: np.ndarray
    coframe: np.ndarray
    induced_metric: np.ndarray | None

    @property
    def normals(self) -> np.ndarray:
        return self.basis[:, : self.codim].T

    @property
    def tangents(self) -> np.ndarray:
        return self.basis[:, self.codim :].T

    @property
    def tangent_coframe(self) -> np.ndarray:
        return self.coframe[self.codim :]

    @property
    def normal_coframe(self) -> np.ndarray:
        return self.coframe[: self.codim]

    def tangent_coefficients(self, v) -> np.ndarray:
        return self.tangent_coframe @ np.asarray(v)

    def normal_coefficients(self, v) -> np.ndarray:
        return self.normal_coframe @ np.asarray(v)


@dataclass(frozen=True, eq=False)
class Submanifold:
    """The slice N = {x = 0} of ``chart`` with a normalization and optional metric."""

    chart: SliceChart
    normalization: Normalization
    metric: MetricField | None = None
    name: str = ""

    @property
    def riemannian(self) -> bool:
        return self.normalization.riemannian

    def require_riemannian(self):
        if not self.riemannian or self.metric is None:
            raise NormalizationError("this operation needs a Riemannian normalization")

    def check_point(self, P) -> np.ndarray:
        P = self.chart.point(P)
        if not self.chart.on_submanifold(P):
            raise ValueError(f"point {P.tolist()} is not on the submanifold")
        return P

    def frame(self, P) -> SubmanifoldFrame:
        P = self.check_point(P)
        return _frame(self, tuple(P.tolist()))

    def normal_field(self, a: int) -> TensorField:
        return _normal_field(self, a)

    def metric_jet(self, P):
        return self.metric.jet(P)

    def christoffels(self, P) -> np.ndarray:
        return _christoffels(self, tuple(self.chart.point(P).tolist()))


@functools.lru_cache(maxsize=64)
def _normal_field(sub: Submanifold, a: int) -> TensorField:
    return sub.normalization.extension(a)


@functools.lru_cache(maxsize=8192)
def _christoffels(sub: Submanifold, key) -> np.ndarray:
    gval, dg = sub.metric.jet(np.asarray(key))
    return christoffels_from(gval, dg)


@functools.lru_cache(maxsize=8192)
def _frame(sub: Submanifold, key) -> SubmanifoldFrame:
    P = np.asarray(key)
    chart = sub.chart
    k, m = chart.codim, chart.ambient_dim
    normals = np.stack([sub.normal_field(a).jet(P)[0] for a in range(k)])
    basis = np.concatenate([normals.T, np.eye(m)[:, k:]], axis=1)
    cond = np.linalg.cond(basis)
    if not np.isfinite(cond) or cond >= FRAME_CONDITION_LIMIT:
        raise NormalizationError(f"normal frame does not complement TN at {P.tolist()} (cond {cond:.3e})")
    coframe = np.linalg.inv(basis)
    induced = None
    if sub.metric is not None:
        gval = sub.metric.jet(P)[0]
        E = basis[:, k:]
        induced = E.T @ gval @ E
    return SubmanifoldFrame(P, k, basis, coframe, induced)


# ---------------------------------------------------------------- operations


def riemannian_normal_frame(g: MetricField, P) -> np.ndarray:
    """g-orthonormal normal frame at a point of N, shape ``(codim, m)``."""
    chart = g.chart
    P = chart.point(P)
    if not chart.on_submanifold(P):
        raise ValueError("point is not on the submanifold")
    gval = g.jet(P)[0]
    normals = dual.to_float(normal_frame_from_metric(gval, chart.codim))
    basis = np.concatenate([normals.T, np.eye(chart.ambient_dim)[:, chart.codim :]], axis=1)
    if np.linalg.cond(basis) >= FRAME_CONDITION_LIMIT:
        raise NormalizationError("normal projection is rank deficient")
    return normals


def induced_metric(g: MetricField, P) -> np.ndarray:
    chart = g.chart
    gval = g.jet(chart.point(P))[0]
    k = chart.codim
    return gval[k:, k:].copy()


def second_fundamental_form(sub: Submanifold, P) -> np.ndarray:
    """``beta[a, u, v]``: component of beta(d/dy^u, d/dy^v) along the a-th unit normal."""
    sub.require_riemannian()
    fr = sub.frame(P)
    k = fr.codim
    gamma = sub.christoffels(fr.point)
    gval = sub.metric.jet(fr.point)[0]
    nabla_tt = gamma[:, k:, k:]  # (nabla_{d_u} d_v)^l
    return np.einsum("luv,lj,aj->auv", nabla_tt, gval, fr.normals)


def beta_vectors(sub: Submanifold, P, Y1, Y2) -> np.ndarray:
    """Normal-frame components of beta(Y1, Y2) for tangent vectors given in y-components."""
    beta = second_fundamental_form(sub, P)
    return np.einsum("auv,u,v->a", beta, Y1, Y2)


def normal_extension_jet(sub: Submanifold, Xbar, P):
    """Jet of the constant-coefficient combination of normal extensions matching ``Xbar``."""
    fr = sub.frame(P)
    c = fr.normal_coefficients(Xbar)
    if np.max(np.abs(fr.tangent_coefficients(Xbar))) > 1e-10 * max(1.0, np.max(np.abs(Xbar))):
        raise ValueError("Xbar is not in the normal bundle")
    Xv = np.zeros(sub.chart.ambient_dim)
    dX = np.zeros((sub.chart.ambient_dim,) * 2)
    for a, ca in enumerate(c):
        v, d = sub.normal_field(a).jet(fr.point)
        Xv = Xv + ca * v
        dX = dX + ca * d
    return Xv, dX


def weingarten_decompose(sub: Submanifold, Xbar, u: int, P):
    """Split ``nabla_{d/dy^u} X`` into ``(-W_Xbar(d/dy^u), D_{d/dy^u} X)``.

    ``u`` indexes the tangent coordinates (0-based among the y's).  Both parts
    are returned as ambient coordinate vectors.
    """
    sub.require_riemannian()
    fr = sub.frame(P)
    Xv, dX = normal_extension_jet(sub, np.asarray(Xbar, dtype=float), fr.point)
    gamma = sub.christoffels(fr.point)
    col = fr.codim + u
    nabla = dX[:, col] + gamma[:, col, :] @ Xv
    tangent = fr.tangents.T @ fr.tangent_coefficients(nabla)
    normal = fr.normals.T @ fr.normal_coefficients(nabla)
    return tangent, normal


def shape_operator(sub: Submanifold, Xbar, P) -> np.ndarray:
    """Matrix of W_Xbar in the tangent coordinate frame: ``W d_u = sum_w W[w, u] d_w``."""
    fr = sub.frame(P)
    cols = []
    for u in range(sub.chart.sub_dim):
        tangent, _ = weingarten_decompose(sub, Xbar, u, fr.point)
        cols.append(-fr.tangent_coefficients(tangent))
    return np.stack(cols, axis=1)


def normal_connection(sub: Submanifold, Xbar, P) -> np.ndarray:
    """``D[b, u]``: normal-frame components of D_{d/dy^u} X."""
    fr = sub.frame(P)
    cols = []
    for u in range(sub.chart.sub_dim):
        _, normal = weingarten_decompose(sub, Xbar, u, fr.point)
        cols.append(fr.normal_coefficients(normal))
    return np.stack(cols, axis=1)


def is_totally_geodesic(sub: Submanifold, points, tol: float = 1e-8) -> tuple[bool, float]:
    worst = max(float(np.max(np.abs(second_fundamental_form(sub, P)))) for P in points)
    return worst < tol, worst


def covariant_jet_at(sub: Submanifold, T: TensorField, P) -> np.ndarray:
    P = sub.chart.point(P)
    Tv, dT = T.jet(P)
    return covariant_from(Tv, dT, sub.christoffels(P), T.p, T.q)


# ------------------------------------------------------- perturbed extensions


@dataclass(frozen=True, eq=False)
class ExtensionPerturbation:
    """Data for ``X' = f X + sum_k l_k Z_k`` with ``f = 1`` and ``l_k = 0`` on N.

    ``f = 1 + x^a s(c)`` when ``scale`` is ``(a, s)``; each term ``(a, s, Z)``
    contributes ``x^a s(c) Z``.  Both vanish on N by construction.
    """

    chart: SliceChart
    scale: tuple[int, Callable] | None = None
    terms: tuple[tuple[int, Callable, TensorField], ...] = ()

    def coefficients(self, c):
        f = 1.0
        if self.scale is not None:
            a, s = self.scale
            f = 1.0 + c[a] * s(c)
        return f, [c[a] * s(c) for a, s, _ in self.terms]

    def apply(self, X: TensorField) -> TensorField:
        def fn(c):
            f, ls = self.coefficients(c)
            out = np.asarray(X(c), dtype=object) * f
            for l, (_, _, Z) in zip(ls, self.terms):
                out = out + l * np.asarray(Z(c), dtype=object)
            return out

        return _PerturbedField(self.chart, 1, 0, fn, (), f"{X.name}'", (self, X))


@dataclass(frozen=True, eq=False)
class _PerturbedField(TensorField):
    parts: tuple = (None, None)

    def _compute_jet(self, point):
        # product rule on cached jets; the unperturbed extension is reused
        pert, X = self.parts
        m = len(point)
        Xv, dX = X.jet(point)
        val, grad = Xv.copy(), dX.copy()
        if pert.scale is not None:
            a, s = pert.scale
            sv, sg = _scalar_jet(s, point)
            fv = 1.0 + point[a] * sv
            fg = point[a] * sg + sv * np.eye(m)[a]
            val = fv * Xv
            grad = fv * dX + np.outer(Xv, fg)
        for a, s, Z in pert.terms:
            sv, sg = _scalar_jet(s, point)
            lv = point[a] * sv
            lg = point[a] * sg + sv * np.eye(m)[a]
            Zv, dZ = Z.jet(point)
            val = val + lv * Zv
            grad = grad + lv * dZ + np.outer(Zv, lg)
        return val, grad


def _scalar_jet(s, point):
    if hasattr(s, "jet"):
        return s.jet(point)
    v, g = dual.jet(s, point)
    return float(v), g


class Quadratic:
    """``b0 + b1.c + c.b2.c``, dual-evaluable with a closed-form jet."""

    def __init__(self, b0: float, b1, b2):
        self.b0 = float(b0)
        self.b1 = np.asarray(b1, dtype=float)
        self.b2 = np.asarray(b2, dtype=float)

    def __call__(self, c):
        c = np.asarray(c, dtype=object)
        return self.b0 + np.dot(self.b1, c) + np.dot(c, np.dot(self.b2, c))

    def jet(self, point):
        point = np.asarray(point, dtype=float)
        val = self.b0 + self.b1 @ point + point @ self.b2 @ point
        return float(val), self.b1 + (self.b2 + self.b2.T) @ point


@dataclass(frozen=True, eq=False)
class AffineVectorField(TensorField):
    """``Z(c) = z0 + z1 c`` with a closed-form jet."""

    coeffs: tuple = (None, None)

    @classmethod
    def make(cls, chart: SliceChart, z0, z1, name: str = "Z") -> "AffineVectorField":
        z0 = np.asarray(z0, dtype=float)
        z1 = np.asarray(z1, dtype=float)
        return cls(chart, 1, 0, lambda c: z0 + np.dot(z1, np.asarray(c, dtype=object)), (), name, (z0, z1))

    def _compute_jet(self, point):
        z0, z1 = self.coeffs
        return z0 + z1 @ point, z1.copy()


def zero_perturbation(chart: SliceChart) -> ExtensionPerturbation:
    return ExtensionPerturbation(chart)


def shear_perturbation(chart: SliceChart, normal: int = 0, tangent: int = 0) -> ExtensionPerturbation:
    """``X' = X + x^a d/dy^u``: the perturbation used as a negative control."""
    m, k = chart.ambient_dim, chart.codim
    z0 = np.zeros(m)
    z0[k + tangent] = 1.0
    Z = AffineVectorField.make(chart, z0, np.zeros((m, m)))
    return ExtensionPerturbation(chart, None, ((normal, lambda c: 1.0, Z),))


def random_perturbation(chart: SliceChart, rng: np.random.Generator, n_terms: int = 2,
                        amplitude: float = 0.5) -> ExtensionPerturbation:
    """Random polynomial perturbation: quadratic ``s`` factors, affine ``Z`` fields."""
    m, k = chart.ambient_dim, chart.codim

    def poly():
        return Quadratic(rng.normal() * amplitude, rng.normal(size=m) * amplitude,
                         rng.normal(size=(m, m)) * amplitude * 0.5)

    def affine_field():
        return AffineVectorField.make(chart, rng.normal(size=m), rng.normal(size=(m, m)) * amplitude)

    scale = (int(rng.integers(k)), poly())
    terms = tuple((int(rng.integers(k)), poly(), affine_field()) for _ in range(n_terms))
    return ExtensionPerturbation(chart, scale, terms)
