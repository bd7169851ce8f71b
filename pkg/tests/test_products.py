import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finsler_lab import models
from finsler_lab.catalog import get_space
from finsler_lab.errors import NotAProductIsometryError
from finsler_lab.geodesics import distance
from finsler_lab.isometries import (antipodal, clifford_check, identity, rotation2d, rotation_z,
                                    translation)
from finsler_lab.products import (decompose_isometry, half_directional_derivative,
                                  lemma31_check, lemma32_check, make_product, orthogonality_check,
                                  product_isometry, projection_check, reassemble,
                                  restriction_check, swap, swap_antipodal,
                                  swap_counterexample_displacement)

from conftest import vectors

R1 = models.euclidean_space(1)
S2 = models.sphere(2)
RANDERS = models.randers_plane([0.3, 0.0])
S2xS2 = get_space("S2xS2")
RxS2 = make_product([RANDERS, S2])
SKEWED = make_product([RANDERS, S2], rule="skewed", coupling=0.2)


def test_product_of_lines_is_euclidean_plane():
    P = make_product([R1, R1])
    rng = np.random.default_rng(0)
    for x, y in zip(rng.normal(size=(20, 2)), rng.normal(size=(20, 2))):
        assert P.F(x, y) == pytest.approx(np.linalg.norm(y), abs=1e-14)
    assert distance(P, [0, 0], [3, 4]).value == pytest.approx(5.0)


def test_sphere_product_is_riemannian_product():
    x = np.array([0.3, 0.1, -0.4, 0.9])
    y = np.array([1.0, 0.5, -0.2, 0.3])
    expect = np.hypot(S2.F(x[:2], y[:2]), S2.F(x[2:], y[2:]))
    assert S2xS2.F(x, y) == pytest.approx(expect, abs=1e-14)


def test_randers_sphere_block_diagonal_at_aligned_directions():
    x = np.array([0.2, 0.1, 0.3, -0.5])
    norm = RxS2.norm_at(x)
    y = np.array([0.7, -0.4, 0.0, 0.0])
    F2 = lambda v: float(norm(v)) ** 2
    h = 1e-4
    E = np.eye(4) * h
    H = np.array([[(F2(y + E[i] + E[j]) - F2(y + E[i] - E[j]) - F2(y - E[i] + E[j])
                    + F2(y - E[i] - E[j])) / (8 * h * h) for j in range(4)] for i in range(4)])
    assert np.abs(H[:2, 2:]).max() < 1e-6


def test_restriction_to_factor_blocks():
    for P in (RxS2, S2xS2, get_space("S3xRanders")):
        assert restriction_check(P, 50).passed


def test_orthogonality_of_l2_rule():
    assert orthogonality_check(make_product([R1, R1]), 50).worst == 0.0
    rep = orthogonality_check(RxS2, 200)
    assert rep.passed and rep.worst < 1e-4


def test_skewed_rule_fails_orthogonality():
    rep = orthogonality_check(SKEWED, 200)
    assert not rep.passed and rep.worst > 1e-2


def test_skewed_defect_value():
    # for unit y, v in different blocks the skewed rule gives coupling / 2
    norm = SKEWED.norm_at(np.zeros(4))
    y = np.array([1 / 1.3, 0, 0, 0])
    v = np.array([0, 0, 0.5, 0])
    assert half_directional_derivative(norm, y, v) == pytest.approx(0.1, abs=1e-6)


def test_projection_of_product_geodesics():
    assert projection_check(S2xS2, 4).worst < 1e-6
    assert projection_check(get_space("S3xRanders"), 3).passed


# --- lemmas ---------------------------------------------------------------------------

def test_lemma_norm_examples():
    P = make_product([models.euclidean_space(2), R1])
    norm = P.norm_at(np.zeros(3))
    assert norm.evaluate([1, 0, 0]) == pytest.approx(1.0)
    assert norm.evaluate([3, 4, 1]) == pytest.approx(np.sqrt(26))


def test_lemma_norm_sweep():
    rep = lemma31_check(make_product([RANDERS, R1]), 1000, seed=0)
    assert rep.passed and rep.violations == 0 and rep.detail["equality_cases"] > 0


@given(vectors(2, min_norm=0.1), st.floats(-2, 2))
def test_product_norm_dominates_factor_norms(v1, v2):
    norm = make_product([RANDERS, R1]).norm_at(np.zeros(3))
    F = norm.evaluate(np.r_[v1, v2])
    assert F >= RANDERS.F([0, 0], v1) - 1e-12
    assert F >= abs(v2) - 1e-12


def test_flat_product_distance_dominates():
    P = make_product([R1, R1])
    assert distance(P, [0, 0], [1, 2]).value >= 1.0


def test_lemma_distance_sweep_on_spheres():
    rep = lemma32_check(S2xS2, 30, seed=3)
    assert rep.passed and rep.detail["skipped"] == 0
    assert rep.worst < 1e-4 and rep.detail["min_strict_gap"] > 1e-4


def test_product_distance_matches_factor_formula():
    rng = np.random.default_rng(11)
    X, Z = S2xS2.sample_points(rng, 5), S2xS2.sample_points(rng, 5)
    for x, z in zip(X, Z):
        num = distance(S2xS2, x, z, "shooting")
        assert num.certified
        expect = np.hypot(S2.distance_fn(x[:2], z[:2]), S2.distance_fn(x[2:], z[2:]))
        assert abs(num.value - expect) < 1e-4


# --- product isometries ----------------------------------------------------------------

def test_decompose_rotation_pair():
    iso = product_isometry(S2xS2, [rotation_z(S2, 0.3), rotation_z(S2, -1.1)])
    dec = decompose_isometry(S2xS2, iso)
    assert dec.perm == [0, 1] and dec.defect < 1e-10
    x = S2xS2.sample_points(np.random.default_rng(1), 1)[0]
    assert np.allclose(dec.factor_maps[1](x[2:]), rotation_z(S2, -1.1)(x[2:]), atol=1e-10)


def test_decompose_swap():
    assert decompose_isometry(S2xS2, swap(S2xS2)).perm == [1, 0]
    assert decompose_isometry(S2xS2, swap_antipodal(S2xS2)).perm == [1, 0]


def test_decompose_flat_translation():
    P = make_product([models.euclidean_space(2), R1])
    dec = decompose_isometry(P, product_isometry(P, [translation([1.0, 2.0]), identity(1)]))
    assert dec.perm == [0, 1]
    assert np.allclose(dec.factor_maps[1](np.array([0.7])), [0.7])


def test_reassemble_reproduces():
    iso = product_isometry(S2xS2, [rotation_z(S2, 0.2), antipodal(S2)], [1, 0])
    re = reassemble(S2xS2, decompose_isometry(S2xS2, iso))
    rng = np.random.default_rng(4)
    for x in S2xS2.sample_points(rng, 20):
        assert np.abs(re(x) - iso(x)).max() < 1e-10
        y = rng.normal(size=4)
        assert np.abs(re.push(x, y) - iso.push(x, y)).max() < 1e-10


def test_mixing_map_is_not_a_product_isometry():
    P = make_product([R1, R1])
    with pytest.raises(NotAProductIsometryError):
        decompose_isometry(P, rotation2d(0.4))


def test_clifford_product_has_clifford_factors():
    S3xR = get_space("S3xRanders")
    iso = product_isometry(S3xR, [antipodal(S3xR.factors[0]), translation([0.4, 0.2])])
    assert clifford_check(S3xR, iso, 30).verdict == "clifford"
    dec = decompose_isometry(S3xR, iso)
    for f, fmap in zip(S3xR.factors, dec.factor_maps):
        assert clifford_check(f, fmap, 30).verdict == "clifford"


# --- the swap counterexample ---------------------------------------------------------------

@pytest.fixture(scope="module")
def swap_curve():
    return swap_counterexample_displacement(33)


def test_swap_endpoints(swap_curve):
    assert swap_curve.numeric[0] == pytest.approx(np.pi, abs=1e-6)
    mid = swap_curve.numeric[16]
    assert swap_curve.t[16] == pytest.approx(np.pi / 2)
    assert mid == pytest.approx(np.pi / np.sqrt(2), abs=1e-3)


def test_swap_curve_matches_formula(swap_curve):
    assert swap_curve.certified.all()
    assert swap_curve.max_error < 1e-3
    assert swap_curve.spread > 0.9
    assert swap_curve.verdict == "non-clifford"


def test_swap_csv(swap_curve):
    lines = swap_curve.to_csv().splitlines()
    assert lines[0] == "t,delta_numeric,delta_formula"
    assert len(lines) == 34
