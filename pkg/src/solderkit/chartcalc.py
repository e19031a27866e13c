"""Pointwise evaluation and first-order calculus of tensor fields on a slice chart.

Conventions
-----------
* Coordinates are ordered ``(x^1..x^k, y^1..y^n)`` with ``k = m - n``: the
  submanifold N is the slice ``x = 0``.
* A (p, q) tensor is stored with its q covariant slots first, then its p
  contravariant slots, i.e. ``A[i1..iq, k1..kp] = A^{k1..kp}_{i1..iq}``.  For a
  (1, 1) field the endomorphism matrix is ``A.T``.
* Jacobians append the derivative index last: ``dA[..., l] = d_l A[...]``.
* Covariant derivatives prepend the derivative slot: ``nabla A[d, ...]``.
* Christoffel symbols are stored as ``Gamma[k, i, j] = Gamma^k_{ij}``.
* Nijenhuis tensor: ``N(U, V) = [AU, AV] - A[AU, V] - A[U, AV] + A^2 [U, V]``,
  stored as a (1, 2) tensor ``N[i, j, k] = N^k_{ij}``.  No factor 1/2.
* Exterior derivative of a 2-form:
  ``dW[i, j, k] = d_i W_jk + d_j W_ki + d_k W_ij``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import dual

Symmetry = tuple[str, tuple[int, int]]


class DomainError(ValueError):
    """A point lies outside the chart's box of validity."""


class DegenerateMetricError(ValueError):
    """The metric is singular or not positive definite at a point."""


class CompatibilityError(ValueError):
    """An almost-Hermitian compatibility precondition fails."""


@dataclass(frozen=True)
class SliceChart:
    ambient_dim: int
    sub_dim: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if not 0 < self.sub_dim < self.ambient_dim:
            raise ValueError("need 0 < sub_dim < ambient_dim")
        if len(self.lower) != self.ambient_dim or len(self.upper) != self.ambient_dim:
            raise ValueError("box bounds must have ambient_dim entries")
        if any(lo >= 0.0 or hi <= 0.0 for lo, hi in zip(self.lower[: self.codim], self.upper[: self.codim])):
            raise ValueError("the normal box must contain x = 0")

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.sub_dim

    @property
    def normal_indices(self) -> range:
        return range(self.codim)

    @property
    def tangent_indices(self) -> range:
        return range(self.codim, self.ambient_dim)

    def point(self, coords) -> np.ndarray:
        p = np.asarray(coords, dtype=float)
        if p.shape != (self.ambient_dim,):
            raise DomainError(f"expected {self.ambient_dim} coordinates, got shape {p.shape}")
        if np.any(p < np.asarray(self.lower)) or np.any(p > np.asarray(self.upper)):
            raise DomainError(f"point {p.tolist()} outside chart domain")
        return p

    def on_submanifold(self, coords) -> bool:
        # exact test, no tolerance
        return bool(np.all(np.asarray(coords, dtype=float)[: self.codim] == 0.0))

    def sample_submanifold(self, samples: int, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        lo = np.asarray(self.lower[self.codim :])
        hi = np.asarray(self.upper[self.codim :])
        pts = np.zeros((samples, self.ambient_dim))
        pts[:, self.codim :] = rng.uniform(lo, hi, size=(samples, self.sub_dim))
        return pts

    def sample_domain(self, samples: int, seed: int = 0) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return rng.uniform(np.asarray(self.lower), np.asarray(self.upper), size=(samples, self.ambient_dim))


class ScalarField:
    """A differentiable function of the chart coordinates."""

    def __init__(self, fn: Callable, chart: SliceChart, name: str = ""):
        self.fn = fn
        self.chart = chart
        self.name = name

    def __call__(self, coords):
        return self.fn(coords)

    def value(self, coords) -> float:
        return dual.real(self.fn(list(self.chart.point(coords))))

    def value_and_grad(self, coords) -> tuple[float, np.ndarray]:
        v, g = dual.jet(self.fn, self.chart.point(coords))
        return float(v), g


@dataclass(frozen=True, eq=False)
class TensorField:
    """A (p, q) tensor field given by a dual-evaluable component function.

    ``fn`` maps a coordinate sequence to an array of shape ``(m,) * (q + p)``.
    ``symmetries`` lists ``("sym" | "anti", (slot_i, slot_j))`` pairs.
    """

    chart: SliceChart
    p: int
    q: int
    fn: Callable
    symmetries: tuple[Symmetry, ...] = ()
    name: str = ""

    @property
    def rank(self) -> int:
        return self.p + self.q

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.chart.ambient_dim,) * self.rank

    def __call__(self, coords):
        return np.asarray(self.fn(coords), dtype=object).reshape(self.shape)

    def jet(self, point) -> tuple[np.ndarray, np.ndarray]:
        """Value and Jacobian at a (validated) point, memoized."""
        return _cached_jet(self, tuple(np.asarray(point, dtype=float).tolist()))

    def _compute_jet(self, point: np.ndarray):
        val, grad = dual.jet(lambda c: self(c), point)
        return val.reshape(self.shape), grad.reshape(self.shape + (len(point),))

    def component(self, index: Sequence[int]) -> ScalarField:
        index = tuple(index)
        return ScalarField(lambda c: self(c)[index], self.chart, f"{self.name}{list(index)}")


@functools.lru_cache(maxsize=8192)
def _cached_jet(field_: TensorField, key: tuple[float, ...]):
    return field_._compute_jet(np.asarray(key))


class MetricField(TensorField):
    """Symmetric positive-definite (0, 2) field."""

    def __init__(self, chart: SliceChart, fn: Callable, name: str = "g"):
        super().__init__(chart, 0, 2, fn, (("sym", (0, 1)),), name)

    def _compute_jet(self, point):
        val, grad = super()._compute_jet(point)
        check_positive_definite(val, point)
        return val, grad


def check_positive_definite(gval: np.ndarray, point=None) -> None:
    if not np.all(np.isfinite(gval)):
        raise DegenerateMetricError(f"non-finite metric at {point}")
    if np.max(np.abs(gval - gval.T)) > 1e-12 * max(1.0, np.max(np.abs(gval))):
        raise DegenerateMetricError(f"metric not symmetric at {point}")
    lam = np.linalg.eigvalsh(gval).min()
    if lam <= 1e-10:
        raise DegenerateMetricError(f"metric not positive definite at {point} (min eigenvalue {lam:.3e})")


def constant_field(chart: SliceChart, p: int, q: int, values, name: str = "") -> TensorField:
    arr = np.array(values, dtype=float)
    return TensorField(chart, p, q, lambda c: arr, name=name)


def endomorphism_field(chart: SliceChart, matrix_fn: Callable, name: str = "",
                       symmetries: tuple[Symmetry, ...] = ()) -> TensorField:
    """(1, 1) field from a function returning the endomorphism matrix ``M[k, i] = A^k_i``."""
    return TensorField(chart, 1, 1, lambda c: np.asarray(matrix_fn(c), dtype=object).T, symmetries, name)


def vector_field(chart: SliceChart, fn: Callable, name: str = "") -> TensorField:
    return TensorField(chart, 1, 0, fn, name=name)


def check_symmetries(T: TensorField, values: np.ndarray, tol: float = 1e-12) -> float:
    worst = 0.0
    for kind, (i, j) in T.symmetries:
        swapped = np.swapaxes(values, i, j)
        resid = values - swapped if kind == "sym" else values + swapped
        worst = max(worst, float(np.max(np.abs(resid))) if resid.size else 0.0)
    if worst > tol:
        raise ValueError(f"declared symmetry of {T.name or 'tensor'} violated by {worst:.3e}")
    return worst


# ---------------------------------------------------------------- evaluation


def eval_tensor(T: TensorField, P) -> np.ndarray:
    P = T.chart.point(P)
    val = dual.to_float(T(list(P)))
    check_symmetries(T, val)
    return val


def eval_jacobian(T: TensorField, P) -> np.ndarray:
    return T.jet(T.chart.point(P))[1]


# ------------------------------------------------------------ pure kernels


def christoffels_from(gval: np.ndarray, dg: np.ndarray) -> np.ndarray:
    ginv = np.linalg.inv(gval)
    # dg[i, j, l] = d_l g_ij
    lowered = 0.5 * (
        np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg)
    )
    gamma = np.einsum("kl,lij->kij", ginv, lowered)
    return 0.5 * (gamma + np.swapaxes(gamma, 1, 2))


def lie_from(Xv, dX, Tv, dT, p: int, q: int) -> np.ndarray:
    """Coordinate Lie derivative from the jets of X and T."""
    out = np.tensordot(dT, Xv, axes=([-1], [0]))
    for s in range(q):
        # T_{..l..} d_{i_s} X^l
        term = np.tensordot(Tv, dX, axes=([s], [0]))
        out = out + np.moveaxis(term, -1, s)
    for r in range(p):
        c = q + r
        # - T^{..l..} d_l X^k
        term = np.tensordot(Tv, dX, axes=([c], [1]))
        out = out - np.moveaxis(term, -1, c)
    return out


def covariant_from(Tv, dT, gamma, p: int, q: int) -> np.ndarray:
    out = np.moveaxis(dT, -1, 0).copy()
    for s in range(q):
        term = np.tensordot(gamma, Tv, axes=([0], [s]))  # (d, i, rest)
        out = out - np.moveaxis(term, 1, 1 + s)
    for r in range(p):
        c = q + r
        term = np.tensordot(gamma, Tv, axes=([2], [c]))  # (k, d, rest)
        out = out + np.moveaxis(np.swapaxes(term, 0, 1), 1, 1 + c)
    return out


def nijenhuis_from(Av, dA) -> np.ndarray:
    M = Av.T
    dM = np.transpose(dA, (1, 0, 2))  # dM[k, i, l] = d_l A^k_i
    t1 = np.einsum("li,kjl->kij", M, dM)
    t2 = np.einsum("lj,kil->kij", M, dM)
    t3 = np.einsum("kl,lji->kij", M, dM) - np.einsum("kl,lij->kij", M, dM)
    return np.transpose(t1 - t2 - t3, (1, 2, 0))


def exterior_2form_from(dW) -> np.ndarray:
    D = np.moveaxis(dW, -1, 0)  # D[i, j, k] = d_i W_jk
    return np.einsum("ijk->ijk", D) + np.einsum("jki->ijk", D) + np.einsum("kij->ijk", D)


def exterior_1form_from(dtheta) -> np.ndarray:
    return dtheta.T - dtheta


# --------------------------------------------------------------- operations


def christoffels(g: MetricField, P) -> np.ndarray:
    gval, dg = g.jet(g.chart.point(P))
    return christoffels_from(gval, dg)


def lie_derivative(X: TensorField, T: TensorField, P) -> np.ndarray:
    if X.p != 1 or X.q != 0:
        raise ValueError("X must be a vector field")
    P = T.chart.point(P)
    Xv, dX = X.jet(P)
    Tv, dT = T.jet(P)
    return lie_from(Xv, dX, Tv, dT, T.p, T.q)


def covariant_derivative(T: TensorField, g: MetricField, P) -> np.ndarray:
    P = T.chart.point(P)
    Tv, dT = T.jet(P)
    return covariant_from(Tv, dT, christoffels(g, P), T.p, T.q)


def nijenhuis(A: TensorField, P) -> np.ndarray:
    if (A.p, A.q) != (1, 1):
        raise ValueError("Nijenhuis tensor needs a (1, 1) field")
    return nijenhuis_from(*A.jet(A.chart.point(P)))


def musical_flat(g: MetricField, Y, P) -> np.ndarray:
    gval = g.jet(g.chart.point(P))[0]
    return gval @ np.asarray(Y, dtype=float)


def musical_sharp(g: MetricField, xi, P) -> np.ndarray:
    gval = g.jet(g.chart.point(P))[0]
    return np.linalg.solve(gval, np.asarray(xi, dtype=float))


def check_almost_hermitian(g: MetricField, J: TensorField, points, tol: float = 1e-10) -> float:
    """Worst of ``|J^2 + I|`` and ``|g(J., J.) - g|`` over ``points``; raises above ``tol``."""
    worst = 0.0
    m = g.chart.ambient_dim
    for P in points:
        gval = g.jet(P)[0]
        M = J.jet(P)[0].T
        worst = max(worst, np.max(np.abs(M @ M + np.eye(m))), np.max(np.abs(M.T @ gval @ M - gval)))
    if worst > tol:
        raise CompatibilityError(f"(g, J) is not almost Hermitian: residual {worst:.3e}")
    return float(worst)


def kahler_form(g: MetricField, J: TensorField, check_points=None) -> TensorField:
    """Omega_ij = g_kj J^k_i as a composed, differentiable (0, 2) field."""
    if check_points is None:
        check_points = g.chart.sample_domain(8, seed=12345)
    check_almost_hermitian(g, J, check_points)

    def omega(c):
        return np.dot(J(c), g(c))

    return TensorField(g.chart, 0, 2, omega, (("anti", (0, 1)),), "Omega")


def exterior_derivative_2form(W: TensorField, P) -> np.ndarray:
    if (W.p, W.q) != (0, 2):
        raise ValueError("expected a (0, 2) field")
    Wv, dW = W.jet(W.chart.point(P))
    if np.max(np.abs(Wv + Wv.T)) > 1e-10:
        raise ValueError("2-form is not antisymmetric")
    return exterior_2form_from(dW)


def interior_product(X: TensorField, W: TensorField) -> TensorField:
    """The 1-form W(X, .) as a composed field."""
    return TensorField(W.chart, 0, 1, lambda c: np.dot(X(c), W(c)), name=f"i({X.name}){W.name}")


def exterior_derivative_1form(theta: TensorField, P) -> np.ndarray:
    return exterior_1form_from(theta.jet(theta.chart.point(P))[1])


# ---------------------------------------------------------- finite differences


def fd_gradient(fn: Callable, point, step: float = 1e-5) -> np.ndarray:
    """Central differences with one Richardson step (error O(h^4)); test oracle only."""
    point = np.asarray(point, dtype=float)
    out = []
    for k in range(len(point)):
        def central(h):
            e = np.zeros_like(point)
            e[k] = h
            return (dual.to_float(fn(list(point + e))) - dual.to_float(fn(list(point - e)))) / (2 * h)
        out.append((4.0 * central(step / 2) - central(step)) / 3.0)
    return np.stack(out, axis=-1)
