import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finsler_lab import models
from finsler_lab.catalog import get_space
from finsler_lab.connection import (berwald_check, chern_coeffs, christoffel_formal,
                                    connection_coefficients, nonlinear_coeffs)
from finsler_lab.errors import UnsupportedError

from conftest import vectors


def sphere_christoffel_oracle(x):
    """Christoffels of 4|dx|^2/(1+|x|^2)^2, written out by hand."""
    n = len(x)
    s = 1 + x @ x
    G = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                G[i, j, k] = (-2 / s) * ((i == j) * x[k] + (i == k) * x[j] - (j == k) * x[i])
    return G


def spray_coefficients_oracle(space, x, y, h=1e-4):
    """G^i = 1/4 g^il ([F^2]_{x^k y^l} y^k - [F^2]_{x^l}), from the metric function only."""
    n = space.dim
    F2 = lambda a, b: float(space.F(a, b)) ** 2
    E = np.eye(n) * h
    g = np.array([[(F2(x, y + E[i] + E[j]) - F2(x, y + E[i] - E[j]) - F2(x, y - E[i] + E[j])
                    + F2(x, y - E[i] - E[j])) / (8 * h * h) for j in range(n)] for i in range(n)])
    dx = np.array([(F2(x + E[l], y) - F2(x - E[l], y)) / (2 * h) for l in range(n)])
    dxdy = np.array([[(F2(x + E[k], y + E[l]) - F2(x + E[k], y - E[l]) - F2(x - E[k], y + E[l])
                       + F2(x - E[k], y - E[l])) / (4 * h * h) for l in range(n)]
                     for k in range(n)])
    return 0.25 * np.linalg.solve(g, dxdy.T @ y - dx)


def nonlinear_oracle(space, x, y, h=1e-3):
    n = space.dim
    E = np.eye(n) * h
    cols = [(spray_coefficients_oracle(space, x, y + E[j]) - spray_coefficients_oracle(
        space, x, y - E[j])) / (2 * h) for j in range(n)]
    return np.column_stack(cols)


S2 = get_space("S2")
DRIFT = get_space("randers-drift")
R05 = get_space("randers-0.5")


@pytest.mark.parametrize("x", [[0.3, -0.2], [1.2, 0.7], [0.0, 0.0], [-2.0, 0.5]])
def test_sphere_christoffel_numeric_matches_closed_form(x):
    x = np.array(x)
    num = christoffel_formal(S2, x, np.array([0.4, 1.0]), mode="numeric")
    assert np.abs(num - sphere_christoffel_oracle(x)).max() < 1e-5
    assert np.abs(christoffel_formal(S2, x, [1, 0], "closed-form")
                  - sphere_christoffel_oracle(x)).max() < 1e-12


def test_locally_minkowski_is_flat():
    cc = connection_coefficients(R05, np.array([0.3, 1.1]), np.array([0.7, -0.2]))
    for arr in (cc.gamma, cc.N, cc.Gamma):
        assert np.abs(arr).max() < 1e-10


def test_riemannian_nonlinear_is_contracted_christoffel():
    x, y = np.array([0.5, 0.1]), np.array([1.0, 2.0])
    gamma = christoffel_formal(S2, x, y)
    assert np.allclose(nonlinear_coeffs(S2, x, y), np.einsum("ijk,k->ij", gamma, y), atol=1e-12)


def test_riemannian_chern_equals_christoffel():
    x, y = np.array([0.5, 0.1]), np.array([1.0, 2.0])
    cc = connection_coefficients(S2, x, y)
    assert np.abs(cc.Gamma - cc.gamma).max() < 1e-10


@pytest.mark.parametrize("x", [[0.4, 0.2], [1.3, -0.5]])
def test_drift_randers_nonlinear_matches_independent_oracle(x):
    x, y = np.array(x), np.array([0.6, 0.9])
    N = nonlinear_coeffs(DRIFT, x, y)
    assert np.abs(N).max() > 1e-2
    assert np.abs(N - nonlinear_oracle(DRIFT, x, y)).max() < 1e-4


def test_drift_randers_gamma_depends_on_direction():
    rng = np.random.default_rng(0)
    x = np.array([0.4, 0.2])
    Gs = [chern_coeffs(DRIFT, x, y) for y in rng.standard_normal((10, 2))]
    dev = max(np.abs(a - b).max() for a in Gs for b in Gs)
    assert dev > 1e-3


@given(vectors(2, -1.5, 1.5, 0.0), vectors(2, min_norm=0.1))
def test_torsion_free(x, y):
    for space in (DRIFT, S2):
        G = chern_coeffs(space, x, y)
        assert np.abs(G - G.transpose(0, 2, 1)).max() < 1e-12


@given(vectors(2, -1.5, 1.5, 0.0), vectors(2, min_norm=0.1), st.floats(0.1, 10))
def test_berwald_scaling_invariance(x, y, lam):
    for space in (S2, R05):
        assert np.allclose(chern_coeffs(space, x, lam * y), chern_coeffs(space, x, y), atol=1e-5)


def test_berwald_classification():
    x = np.array([0.4, 0.2])
    assert berwald_check(S2, x).is_berwald_at_x
    assert berwald_check(S2, x, mode="closed-form").is_berwald_at_x
    assert berwald_check(R05, x).is_berwald_at_x
    rep = berwald_check(DRIFT, x)
    assert not rep.is_berwald_at_x and rep.max_deviation > 1e-3


def test_closed_form_refused_without_provider():
    with pytest.raises(UnsupportedError):
        chern_coeffs(DRIFT, [0.0, 0.0], [1.0, 0.0], mode="closed-form")


def test_rotation_invariance_of_sphere_connection():
    # rotation about the polar axis acts linearly in the chart centred at the pole
    th = 0.9
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    x, v = np.array([0.7, -0.3]), np.array([0.2, 1.0])
    lhs = np.einsum("ijk,j,k->i", chern_coeffs(S2, R @ x, R @ v), R @ v, R @ v)
    rhs = R @ np.einsum("ijk,j,k->i", chern_coeffs(S2, x, v), v, v)
    assert np.allclose(lhs, rhs, atol=1e-4)


def test_hyperbolic_numeric_matches_provider():
    H = models.hyperbolic_disk()
    x = np.array([0.3, -0.4])
    assert np.abs(christoffel_formal(H, x, [1.0, 0.5]) - H.christoffel_fn(x)).max() < 1e-5
