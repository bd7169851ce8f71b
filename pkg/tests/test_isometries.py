import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finsler_lab.catalog import HOPF_ANGLE, get_space, list_catalog
from finsler_lab.errors import DomainError, InputError
from finsler_lab.geodesics import integrate_geodesic
from finsler_lab.isometries import (antipodal, clifford_check, clifford_criterion_equivalence,
                                    disk_mobius, disk_rotation, displacement, geodesic_preservation_defect,
                                    identity, isometry_certificate, preserves_geodesic_check,
                                    quaternion_left, rotation2d, rotation_z, translation,
                                    verdict_for)

S2, S3, H2 = get_space("S2"), get_space("S3"), get_space("H2")
R2, R05 = get_space("R2"), get_space("randers-0.5")
HOPF_Q = [np.cos(HOPF_ANGLE), np.sin(HOPF_ANGLE), 0.0, 0.0]


# --- certificates -------------------------------------------------------------------

def test_euclidean_rotation_certificate():
    assert isometry_certificate(R2, rotation2d(1.1)) < 1e-12


def test_rotation_is_not_a_randers_isometry():
    iso = rotation2d(np.pi / 2)
    assert isometry_certificate(R05, iso) > 0.1
    # direct oracle at y = (1, 0): F = 1.5 there, F of the rotated vector (0, 1) is 1
    assert R05.F([0, 0], [1, 0]) - R05.F([0, 0], iso.push([0, 0], [1, 0])) == pytest.approx(0.5)


def test_quaternion_left_certificate():
    assert isometry_certificate(S3, quaternion_left(S3, HOPF_Q)) < 1e-10


@pytest.mark.parametrize("entry", list_catalog(), ids=lambda e: e.id)
def test_every_catalog_isometry_is_certified(entry):
    assert isometry_certificate(entry.space, entry.isometry, 100) < 1e-8


def test_bad_quaternion_rejected():
    with pytest.raises(InputError):
        quaternion_left(S3, [1.0, 1.0, 0.0, 0.0])
    with pytest.raises(InputError):
        quaternion_left(S2, [1.0, 0.0, 0.0, 0.0])


def test_mobius_parameter_checked():
    with pytest.raises(InputError):
        disk_mobius(1.2)


# --- displacement -------------------------------------------------------------------

@given(st.lists(st.floats(-2, 2), min_size=2, max_size=2),
       st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_randers_translation_displacement_is_norm_of_v(x, v):
    v = np.array(v)
    d = displacement(R05, translation(v), np.array(x)).value
    assert d == pytest.approx(R05.norm_at(np.zeros(2)).evaluate(v), abs=1e-12)


def test_identity_displacement_zero():
    rng = np.random.default_rng(0)
    for x in S2.sample_points(rng, 10):
        assert displacement(S2, identity(2), x).value == 0.0


def test_rotation_displacement_equator_and_pole():
    iso = rotation_z(S2, 0.6)
    assert displacement(S2, iso, [1.0, 0.0]).value == pytest.approx(0.6, abs=1e-12)
    assert displacement(S2, iso, [0.0, 0.0]).value == pytest.approx(0.0, abs=1e-12)


def test_displacement_is_directed():
    iso = translation([1.0, 0.0])
    assert displacement(R05, iso, [0, 0]).value == pytest.approx(1.5)
    back = translation([-1.0, 0.0])
    assert displacement(R05, back, [1, 0]).value == pytest.approx(0.5)


# --- Clifford verdicts ---------------------------------------------------------------

def test_hopf_is_clifford():
    rep = clifford_check(S3, quaternion_left(S3, HOPF_Q), 200, seed=1)
    assert rep.verdict == "clifford"
    assert abs(rep.mean - HOPF_ANGLE) < 1e-10
    assert rep.spread < 1e-4


def test_sphere_rotation_is_not_clifford():
    rep = clifford_check(S2, rotation_z(S2, np.pi / 4), 200, seed=1)
    assert rep.verdict == "non-clifford"
    assert rep.spread > 0.5
    assert rep.max <= np.pi / 4 + 1e-12


def test_flat_randers_translation_is_clifford():
    v = np.array([1.0, 0.5])
    rep = clifford_check(R05, translation(v), 50)
    assert rep.verdict == "clifford"
    assert rep.mean == pytest.approx(np.hypot(1, 0.5) + 0.5)


@pytest.mark.parametrize("iso", [disk_mobius(0.3), disk_rotation(0.4), disk_mobius(0.2 + 0.1j, 1.0)])
def test_hyperbolic_isometries_are_not_clifford(iso):
    assert isometry_certificate(H2, iso) < 1e-8
    assert clifford_check(H2, iso, 60).verdict == "non-clifford"


def test_verdicts_deterministic():
    a = clifford_check(S2, rotation_z(S2, 0.3), 40, seed=7)
    b = clifford_check(S2, rotation_z(S2, 0.3), 40, seed=7)
    assert np.array_equal(a.values, b.values) and a.verdict == b.verdict


def test_uncertified_distances_make_inconclusive():
    assert verdict_for([1.0, 1.0], 1e-4, all_certified=False) == "inconclusive"


@given(st.floats(0, 10), st.floats(0, 1e-3), st.floats(1e-6, 1e-2))
def test_verdict_bands(base, spread, tol):
    v = verdict_for([base, base + spread], tol)
    scale = 1 + base + spread / 2
    if spread <= tol * scale:
        assert v == "clifford"
    elif spread > 10 * tol * scale:
        assert v == "non-clifford"
    else:
        assert v == "inconclusive"


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=2),
       st.lists(st.floats(-1, 1), min_size=2, max_size=2))
def test_translation_composition_triangle(v1, v2):
    rng = np.random.default_rng(0)
    a, b = translation(v1), translation(v2)
    for x in R05.sample_points(rng, 5):
        d = displacement(R05, a.then(b), x).value
        assert d <= displacement(R05, a, x).value + displacement(R05, b, x).value + 1e-12


def test_composition_and_conjugation():
    iso = rotation_z(S2, 0.3).then(rotation_z(S2, 0.4))
    x = np.array([0.4, -0.7])
    assert np.allclose(iso(x), rotation_z(S2, 0.7)(x), atol=1e-12)
    local, to_local, from_local = S2.recenter(x, iso(x))
    c = iso.conjugate(to_local, from_local)
    p = to_local(x)
    assert np.allclose(c(p), to_local(iso(x)), atol=1e-10)


# --- geodesic preservation ---------------------------------------------------------------

def test_translation_preserves_its_line():
    v = np.array([0.6, 0.8])
    path = integrate_geodesic(R2, [0, 0], v, 3.0)
    assert preserves_geodesic_check(R2, translation(v), path, 1.0)


def test_rotation_moves_a_meridian():
    # radial lines through the chart origin are meridians
    path = integrate_geodesic(S2, [0.2, 0.0], [1.0, 0.0], 1.0)
    assert not preserves_geodesic_check(S2, rotation_z(S2, 0.5), path, 0.3)


def test_shift_beyond_domain_raises():
    path = integrate_geodesic(R2, [0, 0], [1, 0], 1.0)
    with pytest.raises(DomainError):
        geodesic_preservation_defect(R2, translation([1, 0]), path, 2.0)


@pytest.mark.parametrize("seed", range(4))
def test_hopf_conditions_agree(seed):
    x = S3.sample_points(np.random.default_rng(seed), 1)[0]
    rep = clifford_criterion_equivalence(S3, quaternion_left(S3, HOPF_Q), x)
    assert rep.status == "ok"
    assert rep.cond1 and rep.cond2
    assert rep.displacement == pytest.approx(HOPF_ANGLE, abs=1e-8)


def test_flat_translation_conditions_agree():
    rep = clifford_criterion_equivalence(R2, translation([0.3, 0.4]), [0.1, 0.2])
    assert rep.cond1 and rep.cond2


def test_sphere_rotation_locally_translates_equator():
    iso = rotation_z(S2, np.pi / 4)
    rep = clifford_criterion_equivalence(S2, iso, [1.0, 0.0])
    assert rep.cond1 and rep.cond2 and rep.agree
    assert clifford_check(S2, iso, 50).verdict == "non-clifford"


def test_sphere_rotation_off_equator_fails_both():
    rep = clifford_criterion_equivalence(S2, rotation_z(S2, np.pi / 4), [0.4, 0.0])
    assert rep.cond1 is False and rep.cond2 is False


def test_antipodal_map_is_inconclusive_not_wrong():
    # x and -x are conjugate: the extended geodesic must cross the pole of any chart
    rep = clifford_criterion_equivalence(S2, antipodal(S2), [0.3, 0.2])
    assert rep.status == "inconclusive" and rep.agree is None
    assert rep.displacement == pytest.approx(np.pi)
