import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solderkit import catalog, dual
from solderkit.chartcalc import SliceChart, fd_gradient
from solderkit.subgeo import (
    ExtensionPerturbation,
    Normalization,
    NormalizationError,
    Submanifold,
    induced_metric,
    is_totally_geodesic,
    normal_connection,
    normal_frame_from_metric,
    random_perturbation,
    riemannian_normal_frame,
    second_fundamental_form,
    shape_operator,
    weingarten_decompose,
)

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def geometry(gid):
    return catalog.get_geometry(gid)


@pytest.mark.parametrize("gid", catalog.GEOMETRY_IDS)
def test_frame_is_orthonormal_and_dual(gid):
    b = geometry(gid)
    sub = b.submanifold
    k, m = b.chart.codim, b.chart.ambient_dim
    for P in b.chart.sample_submanifold(10, seed=0):
        fr = sub.frame(P)
        G = b.metric.jet(P)[0]
        assert np.allclose(fr.normals @ G @ fr.normals.T, np.eye(k), atol=1e-12)
        assert np.allclose(fr.normals @ G @ fr.tangents.T, 0.0, atol=1e-12)
        assert np.allclose(fr.tangents, np.eye(m)[k:])
        assert np.allclose(fr.coframe @ fr.basis, np.eye(m), atol=1e-12)


def test_frame_rejects_points_off_the_slice():
    sub = geometry("polar_circle").submanifold
    with pytest.raises(ValueError):
        sub.frame([0.1, 0.0])


def test_normal_frame_rank_deficiency():
    G = np.diag([0.0, 1.0, 1.0])
    with pytest.raises(NormalizationError):
        normal_frame_from_metric(G, 1)


def test_riemannian_normal_of_graph_is_monge_normal():
    b = geometry("graph_surface")
    for P in b.chart.sample_submanifold(10, seed=4):
        _, y1, y2 = P
        h1, h2 = 0.4 * y1, -0.4 * y2
        W = np.sqrt(1 + h1 * h1 + h2 * h2)
        n = riemannian_normal_frame(b.metric, P)[0]
        assert np.allclose(n, [W, -h1 / W, -h2 / W], atol=1e-13)


def test_induced_metric_is_tangent_block():
    b = geometry("graph_surface")
    P = [0.0, 0.5, 0.25]
    assert np.allclose(induced_metric(b.metric, P), [[1.04, -0.02], [-0.02, 1.01]])


def test_polar_circle_second_fundamental_form_and_shape_operator():
    sub = geometry("polar_circle").submanifold
    for P in geometry("polar_circle").chart.sample_submanifold(10, seed=1):
        assert second_fundamental_form(sub, P)[0, 0, 0] == pytest.approx(-1.0, abs=1e-14)
        # nabla_{dy} dx = dy on the unit circle, so W = -1 with the nabla_Y X = -W Y + D X sign
        assert shape_operator(sub, [1.0, 0.0], P)[0, 0] == pytest.approx(-1.0, abs=1e-14)


def test_graph_surface_second_fundamental_form_monge_oracle():
    # beta along the upward Monge normal is Hess(h) / sqrt(1 + |dh|^2)
    b = geometry("graph_surface")
    hess = np.diag([0.4, -0.4])
    for P in b.chart.sample_submanifold(20, seed=6):
        _, y1, y2 = P
        W = np.sqrt(1 + 0.16 * (y1 * y1 + y2 * y2))
        assert np.allclose(second_fundamental_form(b.submanifold, P)[0], hess / W, atol=1e-13)


def test_parabola_beta_is_large_near_y_axis_point():
    b = geometry("parabola_complex_curve")
    beta = second_fundamental_form(b.submanifold, [0.0, 0.0, 1.0, 0.0])
    assert np.max(np.abs(beta)) > 0.1


@pytest.mark.parametrize("gid", catalog.GEOMETRY_IDS)
def test_weingarten_beta_duality(gid):
    b = geometry(gid)
    sub, k, n = b.submanifold, b.chart.codim, b.chart.sub_dim
    for P in b.chart.sample_submanifold(5, seed=2):
        fr = sub.frame(P)
        G = b.metric.jet(P)[0]
        beta = second_fundamental_form(sub, P)
        for a in range(k):
            W = shape_operator(sub, fr.normals[a], P)
            # g(W e_u, e_v) = g(beta(e_u, e_v), n_a)
            assert np.allclose((W.T @ G[k:, k:]), beta[a], atol=1e-9)
            for u in range(n):
                t, nv = weingarten_decompose(sub, fr.normals[a], u, P)
                assert np.allclose(fr.normal_coefficients(t), 0.0, atol=1e-12)
                assert np.allclose(fr.tangent_coefficients(nv), 0.0, atol=1e-12)


def test_normal_connection_vanishes_for_hypersurfaces():
    b = geometry("graph_surface")
    for P in b.chart.sample_submanifold(5, seed=3):
        assert np.allclose(normal_connection(b.submanifold, b.submanifold.frame(P).normals[0], P), 0.0, atol=1e-12)


@pytest.mark.parametrize("gid", catalog.GEOMETRY_IDS)
def test_totally_geodesic_matches_catalog(gid):
    b = geometry(gid)
    tg, _ = is_totally_geodesic(b.submanifold, b.chart.sample_submanifold(20, seed=0))
    assert tg == b.expected["totally_geodesic"]


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_beta_is_symmetric(s):
    b = geometry("nonintegrable_J6")
    P = b.chart.sample_submanifold(1, seed=s)[0]
    beta = second_fundamental_form(b.submanifold, P)
    assert np.allclose(beta, np.swapaxes(beta, 1, 2), atol=1e-12)


def test_normalizations_need_their_data():
    chart = SliceChart(2, 1, (-1.0, -1.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        Normalization(chart, "riemannian")
    with pytest.raises(ValueError):
        Normalization(chart, "explicit")
    with pytest.raises(ValueError):
        Normalization(chart, "other")
    sub = Submanifold(chart, Normalization(chart, "coordinate"))
    with pytest.raises(NormalizationError):
        second_fundamental_form(sub, [0.0, 0.1])


def test_explicit_normalization_vectors():
    chart = SliceChart(2, 1, (-1.0, -1.0), (1.0, 1.0))
    norm = Normalization(chart, "explicit", vectors=lambda ys: [1.0, 0.5 * ys[0]])
    sub = Submanifold(chart, norm)
    fr = sub.frame([0.0, 0.4])
    assert np.allclose(fr.normals[0], [1.0, 0.2])


def test_extension_of_normal_is_constant_in_x():
    b = geometry("graph_surface")
    X = b.submanifold.normal_field(0)
    v0 = X.jet([0.0, 0.3, 0.2])[0]
    v1 = X.jet([0.4, 0.3, 0.2])[0]
    assert np.allclose(v0, v1)
    assert np.allclose(X.jet([0.4, 0.3, 0.2])[1][:, 0], 0.0)


def test_extension_jet_matches_finite_differences():
    b = geometry("parabola_complex_curve")
    for a in range(2):
        X = b.submanifold.normal_field(a)
        for P in b.chart.sample_domain(5, seed=a):
            fd = fd_gradient(X, P)
            assert np.allclose(X.jet(P)[1], fd, atol=1e-8)


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_perturbed_extension_agrees_on_slice_and_has_correct_jet(s):
    b = geometry("graph_surface")
    rng = np.random.default_rng(s)
    pert = random_perturbation(b.chart, rng)
    X = b.submanifold.normal_field(0)
    Xp = pert.apply(X)
    P = b.chart.sample_submanifold(1, seed=s)[0]
    assert np.allclose(Xp.jet(P)[0], X.jet(P)[0], atol=1e-14)
    Q = b.chart.sample_domain(1, seed=s)[0]
    _, jac = dual.jet(lambda c: Xp(c), Q)
    assert np.allclose(Xp.jet(Q)[1], jac, atol=1e-12)


def test_perturbation_coefficients_vanish_on_slice():
    b = geometry("euclid_slice")
    pert = random_perturbation(b.chart, np.random.default_rng(0))
    f, ls = pert.coefficients([0.0, 0.3, -0.2])
    assert f == 1.0 and all(l == 0.0 for l in ls)
    assert isinstance(ExtensionPerturbation(b.chart).coefficients([0.5, 0.0, 0.0])[0], float)
