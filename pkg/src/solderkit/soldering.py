"""Soldering obstructions of adapted tensor fields and the residuals of the identities they satisfy.

Every residual is maximized over frame arguments at a point of N: the
orthonormal (or chosen) normal frame ``n_a``, the tangent coordinate frame
``e_u = d/dy^u`` and the tangent coframe ``eta^v`` annihilating the normal
bundle.  Multilinearity makes this sufficient.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .chartcalc import (
    MetricField,
    TensorField,
    exterior_1form_from,
    exterior_2form_from,
    interior_product,
    kahler_form,
    lie_from,
    nijenhuis_from,
)
from .subgeo import (
    Submanifold,
    SubmanifoldFrame,
    covariant_jet_at,
    second_fundamental_form,
)

TOL_FRAME = 1e-10
TOL_ADAPTED_GATE = 1e-8
TOL_IDENTITY = 1e-7
TOL_ZERO = 1e-8


class AdaptednessError(ValueError):
    """The field is not algebraically adapted, so its obstruction would depend on the extension."""


class PreconditionError(ValueError):
    """A residual check was asked for outside its hypotheses."""


def change_basis(T: np.ndarray, p: int, q: int, vectors: np.ndarray, covectors: np.ndarray) -> np.ndarray:
    """Evaluate T on basis vectors (covariant slots) and covectors (contravariant slots).

    ``vectors`` and ``covectors`` hold one basis element per row.
    """
    out = T
    for s in range(q):
        out = np.moveaxis(np.tensordot(out, vectors, axes=([s], [1])), -1, s)
    for r in range(p):
        c = q + r
        out = np.moveaxis(np.tensordot(out, covectors, axes=([c], [1])), -1, c)
    return out


@dataclass(frozen=True)
class AdaptednessReport:
    point: tuple[float, ...]
    condition1: float
    condition2: float
    tolerance: float

    @property
    def overall(self) -> float:
        return max(self.condition1, self.condition2)

    @property
    def passed(self) -> bool:
        return self.overall <= self.tolerance


def check_adapted(A: TensorField, sub: Submanifold, P, tol: float = TOL_FRAME) -> AdaptednessReport:
    """Mixed frame components of A at a point of N.

    Condition 1: one covariant slot on a normal vector, all other arguments
    tangential.  Condition 2: one contravariant slot on a covector annihilating
    TN, all other arguments tangential.
    """
    fr = sub.frame(P)
    Av = A.jet(fr.point)[0]
    comps = change_basis(Av, A.p, A.q, fr.basis.T, fr.coframe)
    k, m = fr.codim, sub.chart.ambient_dim
    nrm, tan = np.arange(k), np.arange(k, m)

    def worst(slots):
        out = 0.0
        for s in slots:
            idx = [tan] * A.rank
            idx[s] = nrm
            block = comps[np.ix_(*idx)]
            if block.size:
                out = max(out, float(np.max(np.abs(block))))
        return out

    return AdaptednessReport(tuple(fr.point.tolist()), worst(range(A.q)),
                             worst(range(A.q, A.rank)), tol)


def _tangent_restriction(L: np.ndarray, fr: SubmanifoldFrame, p: int, q: int) -> np.ndarray:
    return change_basis(L, p, q, fr.tangents, fr.tangent_coframe)


def _gate(A: TensorField, sub: Submanifold, P, tol: float = TOL_ADAPTED_GATE):
    rep = check_adapted(A, sub, P, tol)
    if not rep.passed:
        raise AdaptednessError(
            f"{A.name or 'field'} is not algebraically adapted at {list(rep.point)} "
            f"(violation {rep.overall:.3e}); its obstruction is extension dependent"
        )


def soldering_obstruction(A: TensorField, sub: Submanifold, normal, P, *, extension: TensorField | None = None,
                          check: bool = True) -> np.ndarray:
    """w_A(Xbar) on tangent frame vectors and tangent coframe covectors.

    ``normal`` is an index into the normal frame or an ambient normal vector.
    The default extension is constant in x; pass ``extension`` to use another
    vector field restricting to the same normal vector.  With ``check=False``
    the adaptedness gate is skipped (negative controls only).
    """
    fr = sub.frame(P)
    if check:
        _gate(A, sub, fr.point)
    if extension is None:
        if isinstance(normal, (int, np.integer)):
            Xv, dX = sub.normal_field(int(normal)).jet(fr.point)
        else:
            from .subgeo import normal_extension_jet
            Xv, dX = normal_extension_jet(sub, np.asarray(normal, dtype=float), fr.point)
    else:
        Xv, dX = extension.jet(fr.point)
    Av, dA = A.jet(fr.point)
    return _tangent_restriction(lie_from(Xv, dX, Av, dA, A.p, A.q), fr, A.p, A.q)


def obstruction_all(A: TensorField, sub: Submanifold, P, check: bool = True) -> np.ndarray:
    """Stack of w_A(n_a) over the normal frame, leading axis a."""
    fr = sub.frame(P)
    if check:
        _gate(A, sub, fr.point)
    return np.stack([soldering_obstruction(A, sub, a, fr.point, check=False) for a in range(fr.codim)])


def extension_independence_residual(A: TensorField, sub: Submanifold, a: int, P, perturbation,
                                    check: bool = True) -> float:
    """Max change of w_A(n_a) when the default extension is replaced by a perturbed one."""
    base = sub.normal_field(a)
    w0 = soldering_obstruction(A, sub, a, P, check=check)
    w1 = soldering_obstruction(A, sub, a, P, extension=perturbation.apply(base), check=check)
    diff = np.abs(w0 - w1)
    return float(np.max(diff)) if diff.size else 0.0


@dataclass(frozen=True)
class SolderingVerdict:
    soldered: bool
    adapted: bool
    max_obstruction: float
    max_violation: float
    samples: int


def is_soldered(A: TensorField, sub: Submanifold, tol: float = TOL_ZERO, samples: int = 200,
                seed: int = 0, points=None) -> SolderingVerdict:
    """Soldered iff adapted at every sample and every |w_A(n_a)| component is within ``tol``."""
    if points is None:
        points = sub.chart.sample_submanifold(samples, seed)
    violation = max(check_adapted(A, sub, P).overall for P in points)
    adapted = violation <= TOL_ADAPTED_GATE
    if not adapted:
        return SolderingVerdict(False, False, float("nan"), violation, len(points))
    worst = max(float(np.max(np.abs(obstruction_all(A, sub, P)))) for P in points)
    return SolderingVerdict(worst <= tol, True, worst, violation, len(points))


# ------------------------------------------------------------- (1,1) fields


def _require_11(A: TensorField):
    if (A.p, A.q) != (1, 1):
        raise ValueError(f"{A.name or 'field'} must be a (1, 1) tensor field")


def soldering_form(A: TensorField, sub: Submanifold, P) -> np.ndarray:
    """``sigma[a, u, v] = g(sigma_A(e_u, e_v), n_a) = w_A(n_a)(e_u, flat e_v)``."""
    sub.require_riemannian()
    _require_11(A)
    fr = sub.frame(P)
    w = obstruction_all(A, sub, fr.point)
    gval = sub.metric.jet(fr.point)[0]
    flats = fr.tangents @ gval  # rows: flat(e_v)
    leak = np.abs(flats @ fr.normals.T)
    if leak.size and np.max(leak) > TOL_FRAME * max(1.0, np.max(np.abs(flats))):
        raise PreconditionError("flat of a tangent vector does not annihilate the normal bundle")
    coeffs = flats @ fr.tangents.T  # flat(e_v) = sum_w coeffs[v, w] eta^w
    return np.einsum("auw,vw->auv", w, coeffs)


def tangent_action(A: TensorField, sub: Submanifold, P) -> np.ndarray:
    """``Atan[w, u] = eta^w(A e_u)``: the restriction of A to TN in the coordinate frame."""
    fr = sub.frame(P)
    M = A.jet(fr.point)[0].T
    return fr.tangent_coframe @ M @ fr.tangents.T


def symmetry_residual(A: TensorField, g: MetricField, P, sign: int) -> float:
    """``max |g(AV1, V2) - sign g(V1, AV2)|`` over coordinate vectors."""
    gval = g.jet(P)[0]
    gM = gval @ A.jet(P)[0].T
    return float(np.max(np.abs(gM.T - sign * gM)))


def _check_sign(A, sub, P, sign):
    if sign not in (1, -1):
        raise ValueError("sign must be +1 (symmetric) or -1 (skew-symmetric)")
    r = symmetry_residual(A, sub.metric, P, sign)
    if r > TOL_FRAME:
        kind = "symmetric" if sign == 1 else "skew-symmetric"
        raise PreconditionError(f"{A.name or 'field'} is not g-{kind} (residual {r:.3e})")


def _beta_terms(A, sub, P):
    beta = second_fundamental_form(sub, P)
    At = tangent_action(A, sub, P)
    beta_A1 = np.einsum("wu,awv->auv", At, beta)  # beta(A e_u, e_v)
    beta_A2 = np.einsum("wv,auw->auv", At, beta)  # beta(e_u, A e_v)
    return beta, beta_A1, beta_A2


def _maxabs(a) -> float:
    a = np.abs(a)
    return float(np.max(a)) if a.size else 0.0


def residual_metric_obstruction(sub: Submanifold, P) -> float:
    """``max |w_g(n_a)(e_u, e_v) + 2 g(beta(e_u, e_v), n_a)|``."""
    sub.require_riemannian()
    w = obstruction_all(sub.metric, sub, P)
    return _maxabs(w + 2.0 * second_fundamental_form(sub, P))


def residual_symmetry(A: TensorField, sub: Submanifold, sign: int, P) -> float:
    sub.require_riemannian()
    _require_11(A)
    fr = sub.frame(P)
    _check_sign(A, sub, fr.point, sign)
    sigma = soldering_form(A, sub, fr.point)
    _, bA1, bA2 = _beta_terms(A, sub, fr.point)
    lhs = sigma - sign * np.swapaxes(sigma, 1, 2)
    return _maxabs(lhs - 2.0 * (bA1 - sign * bA2))


def nabla_term(A: TensorField, sub: Submanifold, P) -> np.ndarray:
    """``g((nabla_{n_a} A) e_u, e_v)`` via the covariant-derivative path."""
    fr = sub.frame(P)
    nA = covariant_jet_at(sub, A, fr.point)  # [d, i, k]
    gval = sub.metric.jet(fr.point)[0]
    return np.einsum("ad,dik,ui,kl,vl->auv", fr.normals, nA, fr.tangents, gval, fr.tangents)


def residual_connection_formula(A: TensorField, sub: Submanifold, sign: int, P) -> float:
    """Lie-derivative soldering form against nabla A plus beta terms (sign opposite to symmetry)."""
    sub.require_riemannian()
    _require_11(A)
    fr = sub.frame(P)
    _check_sign(A, sub, fr.point, sign)
    sigma = soldering_form(A, sub, fr.point)
    _, bA1, bA2 = _beta_terms(A, sub, fr.point)
    return _maxabs(sigma - nabla_term(A, sub, fr.point) - (bA1 - sign * bA2))


@dataclass(frozen=True)
class ParallelCorollary:
    applicable: bool
    nabla_max: float
    residual: float
    sigma_max: float
    beta_max: float


def check_parallel_corollary(A: TensorField, sub: Submanifold, sign: int, P,
                             parallel_tol: float = 1e-9) -> ParallelCorollary:
    """For parallel A: sigma_A = 0 (symmetric) or sigma_A = 2 beta(A., .) (skew)."""
    sub.require_riemannian()
    _require_11(A)
    fr = sub.frame(P)
    nabla_max = _maxabs(covariant_jet_at(sub, A, fr.point))
    if nabla_max > parallel_tol:
        return ParallelCorollary(False, nabla_max, float("nan"), float("nan"), float("nan"))
    _check_sign(A, sub, fr.point, sign)
    sigma = soldering_form(A, sub, fr.point)
    beta, bA1, _ = _beta_terms(A, sub, fr.point)
    expected = np.zeros_like(sigma) if sign == 1 else 2.0 * bA1
    return ParallelCorollary(True, nabla_max, _maxabs(sigma - expected), _maxabs(sigma), _maxabs(beta))


@dataclass(frozen=True)
class NijenhuisResidual:
    residual: float
    nijenhuis_term: float


def nijenhuis_term(A: TensorField, sub: Submanifold, P) -> np.ndarray:
    """``g(N_A(n_a, e_u), e_v)`` from the coordinate Nijenhuis tensor."""
    fr = sub.frame(P)
    N = nijenhuis_from(*A.jet(fr.point))
    gval = sub.metric.jet(fr.point)[0]
    return np.einsum("ijk,ai,uj,kl,vl->auv", N, fr.normals, fr.tangents, gval, fr.tangents)


def residual_nijenhuis(A: TensorField, sub: Submanifold, sign: int, P) -> NijenhuisResidual:
    """``g(sigma(e_u, e_v), A n_a) - sign g(sigma(e_u, A e_v), n_a) - g(N_A(n_a, e_u), e_v)``."""
    sub.require_riemannian()
    _require_11(A)
    fr = sub.frame(P)
    _check_sign(A, sub, fr.point, sign)
    sigma = soldering_form(A, sub, fr.point)
    gval = sub.metric.jet(fr.point)[0]
    M = A.jet(fr.point)[0].T
    gn = fr.normals @ gval @ M @ fr.normals.T  # gn[b, a] = g(n_b, A n_a)
    lhs = np.einsum("buv,ba->auv", sigma, gn)
    At = tangent_action(A, sub, fr.point)
    sigma_Av = np.einsum("wv,auw->auv", At, sigma)
    nt = nijenhuis_term(A, sub, fr.point)
    return NijenhuisResidual(_maxabs(lhs - sign * sigma_Av - nt), _maxabs(nt))


# ------------------------------------------------------------- almost Hermitian


@functools.lru_cache(maxsize=64)
def kahler_form_of(g: MetricField, J: TensorField) -> TensorField:
    return kahler_form(g, J)


def domega_slot(sub: Submanifold, J: TensorField, P) -> np.ndarray:
    """``dOmega(n_a, e_u, e_v)``."""
    fr = sub.frame(P)
    omega = kahler_form_of(sub.metric, J)
    dO = exterior_2form_from(omega.jet(fr.point)[1])
    return np.einsum("ijk,ai,uj,vk->auv", dO, fr.normals, fr.tangents, fr.tangents)


def domega_full(g: MetricField, J: TensorField, P) -> np.ndarray:
    omega = kahler_form_of(g, J)
    return exterior_2form_from(omega.jet(g.chart.point(P))[1])


def interior_closed_residual(sub: Submanifold, J: TensorField, P) -> float:
    """``max |d(i_X Omega)(e_u, e_v)|`` for the normal extensions X."""
    fr = sub.frame(P)
    omega = kahler_form_of(sub.metric, J)
    worst = 0.0
    for a in range(fr.codim):
        theta = _interior(sub.normal_field(a), omega)
        dtheta = exterior_1form_from(theta.jet(fr.point)[1])
        worst = max(worst, _maxabs(fr.tangents @ dtheta @ fr.tangents.T))
    return worst


@functools.lru_cache(maxsize=256)
def _interior(X: TensorField, omega: TensorField) -> TensorField:
    return interior_product(X, omega)


@dataclass(frozen=True)
class KahlerResidual:
    residual: float
    domega_slot: float
    interior_closed: float
    omega_adaptedness: float
    sigma_max: float


def residual_kahler_identity(sub: Submanifold, J: TensorField, P) -> KahlerResidual:
    """``g(sigma_J(e_u, e_v), n_a) - 2 g(beta(J e_u, e_v), n_a) - dOmega(n_a, e_u, e_v)``."""
    sub.require_riemannian()
    fr = sub.frame(P)
    rep = check_adapted(J, sub, fr.point)
    if not rep.passed:
        raise AdaptednessError(f"N is not J-invariant at {list(rep.point)} (violation {rep.overall:.3e})")
    omega = kahler_form_of(sub.metric, J)
    om_rep = check_adapted(omega, sub, fr.point)
    if not om_rep.passed:
        raise AdaptednessError(f"Kahler form not algebraically adapted (violation {om_rep.overall:.3e})")
    sigma = soldering_form(J, sub, fr.point)
    _, bJ1, _ = _beta_terms(J, sub, fr.point)
    slot = domega_slot(sub, J, fr.point)
    return KahlerResidual(_maxabs(sigma - 2.0 * bJ1 - slot), _maxabs(slot),
                          interior_closed_residual(sub, J, fr.point), om_rep.overall, _maxabs(sigma))


def soldered_j_residual(sub: Submanifold, J: TensorField, P) -> float:
    """``max |g(beta(J e_u, e_v), n_a) + dOmega(n_a, e_u, e_v) / 2|``; zero iff J is soldered."""
    sub.require_riemannian()
    fr = sub.frame(P)
    _, bJ1, _ = _beta_terms(J, sub, fr.point)
    return _maxabs(bJ1 + 0.5 * domega_slot(sub, J, fr.point))


@dataclass(frozen=True)
class ComplexStructureRecord:
    j_invariant: bool
    totally_geodesic: bool
    domega_zero: bool
    soldered: bool
    beta_j_relation: bool
    max_beta: float
    max_domega: float
    max_sigma: float
    max_relation_residual: float
    max_kahler_residual: float

    @property
    def equivalence_applies(self) -> bool:
        return self.domega_zero

    @property
    def equivalence_holds(self) -> bool:
        return self.soldered == (self.j_invariant and self.totally_geodesic)

    @property
    def relation_consistent(self) -> bool:
        return self.soldered == self.beta_j_relation


def classify_complex_structure(sub: Submanifold, J: TensorField, tol: float = TOL_ZERO, samples: int = 200,
                               seed: int = 0, identity_tol: float = TOL_IDENTITY) -> ComplexStructureRecord:
    """J-invariance, total geodesy, closedness of Omega and soldering of J on sampled points.

    ``dOmega = 0`` is tested on all components at the on-N samples and at an
    equal number of ambient samples.
    """
    sub.require_riemannian()
    points = sub.chart.sample_submanifold(samples, seed)
    j_inv = max(check_adapted(J, sub, P).overall for P in points) <= TOL_FRAME
    max_beta = max(_maxabs(second_fundamental_form(sub, P)) for P in points)
    ambient = sub.chart.sample_domain(samples, seed + 1)
    max_domega = max(_maxabs(domega_full(sub.metric, J, P)) for P in np.concatenate([points, ambient]))
    verdict = is_soldered(J, sub, tol, points=points)
    max_sigma = max_relation = max_kahler = float("nan")
    if j_inv:
        max_sigma = max(_maxabs(soldering_form(J, sub, P)) for P in points)
        max_relation = max(soldered_j_residual(sub, J, P) for P in points)
        max_kahler = max(residual_kahler_identity(sub, J, P).residual for P in points)
    return ComplexStructureRecord(
        j_invariant=j_inv,
        totally_geodesic=max_beta < tol,
        domega_zero=max_domega <= tol,
        soldered=verdict.soldered,
        beta_j_relation=j_inv and max_relation <= identity_tol,
        max_beta=max_beta,
        max_domega=max_domega,
        max_sigma=max_sigma,
        max_relation_residual=max_relation,
        max_kahler_residual=max_kahler,
    )


# ---------------------------------------------------------- local criterion


@dataclass(frozen=True)
class LocalCriterion:
    lie_max: float
    partial_max: float
    residual: float


def residual_local_criterion(A: TensorField, sub: Submanifold, P, perturbation=None) -> LocalCriterion:
    """Lie-derivative obstruction against the raw normal partials of the tangential components.

    With ``perturbation`` the Lie derivative is taken along a perturbed
    extension of each ``d/dx^a`` rather than the coordinate field itself.
    """
    if sub.normalization.mode != "coordinate":
        raise PreconditionError("the local criterion needs the coordinate normalization")
    fr = sub.frame(P)
    if perturbation is None:
        w = obstruction_all(A, sub, fr.point)
    else:
        _gate(A, sub, fr.point)
        w = np.stack([soldering_obstruction(A, sub, a, fr.point, check=False,
                                            extension=perturbation.apply(sub.normal_field(a)))
                      for a in range(fr.codim)])
    dA = A.jet(fr.point)[1]
    k, m = fr.codim, sub.chart.ambient_dim
    tan = np.arange(k, m)
    partial = np.stack([dA[np.ix_(*([tan] * A.rank + [np.array([a])]))][..., 0] for a in range(k)])
    return LocalCriterion(_maxabs(w), _maxabs(partial), _maxabs(w - partial))


def symmetry_inheritance_residual(A: TensorField, sub: Submanifold, P) -> float:
    """How far w_A(n_a) is from carrying A's declared slot symmetries."""
    w = obstruction_all(A, sub, P)
    worst = 0.0
    for kind, (i, j) in A.symmetries:
        swapped = np.swapaxes(w, i + 1, j + 1)
        worst = max(worst, _maxabs(w - swapped if kind == "sym" else w + swapped))
    return worst


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class IdentityReport:
    identity: str
    geometry: str
    residuals: tuple[float, ...]
    tolerance: float
    points: int = 0

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_residual)) and self.max_residual <= self.tolerance


def sweep(identity: str, geometry: str, fn, points, tolerance: float) -> IdentityReport:
    res = tuple(float(fn(P)) for P in points)
    return IdentityReport(identity, geometry, res, tolerance, len(res))
