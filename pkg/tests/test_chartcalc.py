import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solderkit import catalog, dual
from solderkit.chartcalc import (
    CompatibilityError,
    DegenerateMetricError,
    DomainError,
    MetricField,
    SliceChart,
    TensorField,
    christoffels,
    constant_field,
    covariant_derivative,
    endomorphism_field,
    exterior_derivative_1form,
    exterior_derivative_2form,
    fd_gradient,
    interior_product,
    kahler_form,
    lie_derivative,
    musical_flat,
    musical_sharp,
    nijenhuis,
    vector_field,
)
from solderkit.subgeo import Quadratic

CHART3 = SliceChart(3, 2, (-1.0,) * 3, (1.0,) * 3)
seeds = st.integers(min_value=0, max_value=2**31 - 1)


def poly_field(chart, p, q, rng, name="T"):
    m = chart.ambient_dim
    shape = (m,) * (p + q)
    polys = [Quadratic(rng.normal(), rng.normal(size=m), rng.normal(size=(m, m)) * 0.5)
             for _ in range(int(np.prod(shape)))]

    def fn(c):
        return np.array([poly(c) for poly in polys], dtype=object).reshape(shape)

    return TensorField(chart, p, q, fn, name=name)


def relative_error(a, b):
    return np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b)))


def catalog_fields():
    for gid in catalog.GEOMETRY_IDS:
        b = catalog.get_geometry(gid)
        yield gid, "g", b.metric
        if b.J is not None:
            yield gid, "J", b.J
        for name, aux in b.aux.items():
            yield gid, name, aux.field


# ---------------------------------------------------------------- charts


def test_slice_chart_membership_is_exact():
    assert CHART3.on_submanifold([0.0, 0.3, -0.2])
    assert not CHART3.on_submanifold([1e-300, 0.3, -0.2])
    with pytest.raises(DomainError):
        CHART3.point([0.0, 1.5, 0.0])
    with pytest.raises(ValueError):
        SliceChart(3, 3, (-1.0,) * 3, (1.0,) * 3)
    with pytest.raises(ValueError):
        SliceChart(2, 1, (0.1, -1.0), (1.0, 1.0))


def test_sampling_is_seeded_and_on_slice():
    a = CHART3.sample_submanifold(20, seed=3)
    b = CHART3.sample_submanifold(20, seed=3)
    assert np.array_equal(a, b)
    assert all(CHART3.on_submanifold(P) for P in a)
    assert not np.array_equal(a, CHART3.sample_submanifold(20, seed=4))


# ------------------------------------------------------ derivative oracle


@pytest.mark.parametrize("gid, name, field", list(catalog_fields()), ids=lambda v: v if isinstance(v, str) else "")
def test_jets_match_finite_differences(gid, name, field):
    pts = field.chart.sample_domain(100, seed=11)
    for P in pts:
        _, jac = field.jet(P)
        fd = fd_gradient(field, P)
        assert relative_error(jac, fd) <= 1e-6, (gid, name, P)


def test_scalar_component_gradient():
    g = catalog.get_geometry("polar_circle").metric
    val, grad = g.component((1, 1)).value_and_grad([0.2, 1.0])
    assert val == pytest.approx(1.44)
    assert np.allclose(grad, [2.4, 0.0])


# ------------------------------------------------------ metric and errors


def test_metric_must_be_positive_definite():
    g = MetricField(CHART3, lambda c: np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(DegenerateMetricError):
        g.jet(np.zeros(3))


def test_declared_symmetry_is_enforced():
    from solderkit.chartcalc import eval_tensor
    bad = TensorField(CHART3, 0, 2, lambda c: np.triu(np.ones((3, 3))), (("sym", (0, 1)),))
    with pytest.raises(ValueError):
        eval_tensor(bad, [0.0, 0.0, 0.0])


def test_polar_christoffels_hand_oracle():
    g = catalog.get_geometry("polar_circle").metric
    for x, y in [(0.0, 0.4), (0.3, -1.0), (-0.5, 2.0)]:
        gam = christoffels(g, [x, y])
        assert gam[0, 1, 1] == pytest.approx(-(1 + x), abs=1e-14)
        assert gam[1, 0, 1] == pytest.approx(1 / (1 + x), abs=1e-14)
        assert gam[1, 1, 0] == pytest.approx(1 / (1 + x), abs=1e-14)
        assert gam[0, 0, 0] == gam[1, 1, 1] == gam[0, 0, 1] == 0.0


def test_conformal_christoffels_closed_form():
    # g = e^{2f} delta: Gamma^k_ij = d^k_i f_j + d^k_j f_i - d_ij f_k
    g = catalog.get_geometry("conformal_hermitian").metric
    df = np.array([0.3, 0.0, 0.0, 0.0])
    I = np.eye(4)
    exact = np.einsum("ki,j->kij", I, df) + np.einsum("kj,i->kij", I, df) - np.einsum("ij,k->kij", I, df)
    for P in g.chart.sample_domain(10, seed=5):
        assert np.allclose(christoffels(g, P), exact, atol=1e-14)


def test_graph_surface_pullback_metric():
    g = catalog.get_geometry("graph_surface").metric
    for P in g.chart.sample_domain(10, seed=2):
        _, y1, y2 = P
        dh = np.array([0.4 * y1, -0.4 * y2])
        exact = np.eye(3)
        exact[0, 1:] = exact[1:, 0] = dh
        exact[1:, 1:] += np.outer(dh, dh)
        assert np.allclose(g.jet(P)[0], exact, atol=1e-14)


@pytest.mark.parametrize("gid", catalog.GEOMETRY_IDS)
def test_metric_is_parallel(gid):
    g = catalog.get_geometry(gid).metric
    for P in g.chart.sample_domain(10, seed=1):
        assert np.max(np.abs(covariant_derivative(g, g, P))) <= 1e-9


def test_musical_isomorphisms_invert():
    g = catalog.get_geometry("graph_surface").metric
    P = [0.1, 0.5, -0.3]
    Y = np.array([0.2, -1.0, 0.7])
    assert np.allclose(musical_sharp(g, musical_flat(g, Y, P), P), Y)


# -------------------------------------------------------- Lie derivative


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_lie_bracket_antisymmetry(s):
    rng = np.random.default_rng(s)
    X = poly_field(CHART3, 1, 0, rng, "X")
    Y = poly_field(CHART3, 1, 0, rng, "Y")
    P = rng.uniform(-0.9, 0.9, 3)
    assert np.allclose(lie_derivative(X, Y, P), -lie_derivative(Y, X, P), atol=1e-12)


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_lie_derivative_leibniz_on_contraction(s):
    # L_X (theta(Y)) = (L_X theta)(Y) + theta(L_X Y)
    rng = np.random.default_rng(s)
    X = poly_field(CHART3, 1, 0, rng, "X")
    Y = poly_field(CHART3, 1, 0, rng, "Y")
    theta = poly_field(CHART3, 0, 1, rng, "theta")
    P = rng.uniform(-0.9, 0.9, 3)
    pairing = TensorField(CHART3, 0, 0, lambda c: np.dot(theta(c), Y(c)))
    lhs = lie_derivative(X, pairing, P)
    rhs = lie_derivative(X, theta, P) @ Y.jet(P)[0] + theta.jet(P)[0] @ lie_derivative(X, Y, P)
    assert np.allclose(lhs, rhs, atol=1e-11)


def test_killing_field_preserves_flat_metric():
    g = MetricField(CHART3, lambda c: np.eye(3))
    rot = vector_field(CHART3, lambda c: np.array([-c[1], c[0], 0.0 * c[2]], dtype=object))
    assert np.allclose(lie_derivative(rot, g, [0.2, 0.3, -0.4]), 0.0)


def test_lie_derivative_of_vector_field_matches_fd_bracket():
    rng = np.random.default_rng(8)
    X = poly_field(CHART3, 1, 0, rng, "X")
    Y = poly_field(CHART3, 1, 0, rng, "Y")
    P = np.array([0.1, -0.2, 0.3])
    dX = fd_gradient(X, P)  # dX[k, l] = d_l X^k
    dY = fd_gradient(Y, P)
    Xv, Yv = dual.to_float(X(P)), dual.to_float(Y(P))
    bracket = dY @ Xv - dX @ Yv
    assert np.allclose(lie_derivative(X, Y, P), bracket, atol=1e-8)


# ------------------------------------------------------------- Nijenhuis


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_nijenhuis_antisymmetry(s):
    rng = np.random.default_rng(s)
    A = poly_field(CHART3, 1, 1, rng, "A")
    N = nijenhuis(A, rng.uniform(-0.9, 0.9, 3))
    assert np.allclose(N, -np.swapaxes(N, 0, 1), atol=1e-12)


def test_nijenhuis_vanishes_for_constant_structures():
    J = constant_field(CHART3, 1, 1, np.diag([1.0, 2.0, 3.0]))
    assert np.all(nijenhuis(J, [0.1, 0.2, 0.3]) == 0.0)


def test_nijenhuis_lie_derivative_identity():
    # N_A(X, Y) = (L_{AX} A) Y - A (L_X A) Y for coordinate fields X = d_i
    rng = np.random.default_rng(4)
    A = poly_field(CHART3, 1, 1, rng, "A")
    P = np.array([0.2, -0.1, 0.4])
    N = nijenhuis(A, P)
    M = A.jet(P)[0].T
    for i in range(3):
        e = np.eye(3)[i]
        X = constant_field(CHART3, 1, 0, e)
        AX = vector_field(CHART3, lambda c, i=i: np.asarray(A(c), dtype=object)[i, :])
        LAX = lie_derivative(AX, A, P)  # storage [j, k]: endomorphism is transpose
        LX = lie_derivative(X, A, P)
        for j in range(3):
            expected = LAX.T[:, j] - M @ LX.T[:, j]
            assert np.allclose(N[i, j], expected, atol=1e-12)


def test_nijenhuis_matches_fd_brackets():
    # Direct bracket evaluation of N(d_i, d_j) with finite-difference derivatives of A
    b = catalog.get_geometry("nonintegrable_J6")
    J, P = b.J, b.chart.sample_submanifold(1, seed=3)[0]
    M = J.jet(P)[0].T
    dM = fd_gradient(lambda c: np.asarray(J(c), dtype=object).T, P)  # dM[k, i, l]
    m = len(P)

    def bracket(u, du, v, dv):
        return dv @ u - du @ v

    N = np.zeros((m, m, m))
    for i in range(m):
        for j in range(m):
            ei, ej = np.eye(m)[i], np.eye(m)[j]
            Aei, Aej = M[:, i], M[:, j]
            dAei, dAej = dM[:, i, :], dM[:, j, :]
            zero = np.zeros((m, m))
            N[i, j] = (bracket(Aei, dAei, Aej, dAej) - M @ bracket(Aei, dAei, ej, zero)
                       - M @ bracket(ei, zero, Aej, dAej))
    assert np.max(np.abs(N)) > 1e-3
    assert np.allclose(nijenhuis(J, P), N, atol=1e-7)


# -------------------------------------------------------------- forms


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_d_squared_vanishes(s):
    rng = np.random.default_rng(s)
    theta = poly_field(CHART3, 0, 1, rng, "theta")

    def dtheta(c):
        D = dual.jacobian_at(lambda x: theta(x), c)
        return D.T - D

    W = TensorField(CHART3, 0, 2, dtheta, (("anti", (0, 1)),), "dtheta")
    P = rng.uniform(-0.9, 0.9, 3)
    assert np.allclose(W.jet(P)[0], exterior_derivative_1form(theta, P), atol=1e-12)
    assert np.allclose(exterior_derivative_2form(W, P), 0.0, atol=1e-11)


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_cartan_formula_on_two_forms(s):
    rng = np.random.default_rng(s)
    B = poly_field(CHART3, 0, 2, rng, "B")
    W = TensorField(CHART3, 0, 2, lambda c: B(c) - B(c).T, (("anti", (0, 1)),), "W")
    X = poly_field(CHART3, 1, 0, rng, "X")
    P = rng.uniform(-0.9, 0.9, 3)
    lhs = lie_derivative(X, W, P)
    rhs = exterior_derivative_1form(interior_product(X, W), P)
    rhs = rhs + np.einsum("i,ijk->jk", X.jet(P)[0], exterior_derivative_2form(W, P))
    assert np.allclose(lhs, rhs, atol=1e-11)


def test_kahler_form_needs_compatibility():
    g = MetricField(CHART3.__class__(2, 1, (-1.0, -1.0), (1.0, 1.0)), lambda c: np.diag([1.0, 4.0]))
    J = endomorphism_field(g.chart, lambda c: np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(CompatibilityError):
        kahler_form(g, J)


def test_kahler_form_is_antisymmetric_and_matches_definition():
    b = catalog.get_geometry("parabola_complex_curve")
    omega = kahler_form(b.metric, b.J)
    for P in b.chart.sample_domain(5, seed=9):
        W = omega.jet(P)[0]
        M, G = b.J.jet(P)[0].T, b.metric.jet(P)[0]
        assert np.allclose(W, -W.T, atol=1e-13)
        assert np.allclose(W, M.T @ G, atol=1e-13)  # Omega(X, Y) = g(JX, Y)
