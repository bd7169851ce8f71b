import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from finsler_lab.norms import EuclideanNorm, ProductNorm, RandersNorm

settings.register_profile("lab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

floats = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


def vectors(dim, lo=-3.0, hi=3.0, min_norm=1e-2):
    return st.lists(st.floats(lo, hi, allow_nan=False, allow_infinity=False),
                    min_size=dim, max_size=dim).map(np.array).filter(
        lambda v: np.linalg.norm(v) > min_norm)


@st.composite
def spd_matrices(draw, dim):
    M = np.array(draw(st.lists(floats, min_size=dim * dim, max_size=dim * dim))).reshape(dim, dim)
    return M @ M.T + 0.5 * np.eye(dim)


@st.composite
def randers_norms(draw, dim=2, max_b=0.8):
    A = draw(spd_matrices(dim))
    raw = draw(vectors(dim, min_norm=1e-3))
    frac = draw(st.floats(0.0, max_b))
    # scale b so that its A^{-1}-norm equals frac
    b = raw * frac / np.sqrt(raw @ np.linalg.solve(A, raw))
    return RandersNorm(A, b)


@st.composite
def norms(draw, dim=2):
    kind = draw(st.sampled_from(["euclidean", "randers", "product"]))
    if kind == "euclidean":
        return EuclideanNorm(draw(spd_matrices(dim)))
    if kind == "randers":
        return draw(randers_norms(dim))
    return ProductNorm((draw(randers_norms(2)), EuclideanNorm(np.eye(1))))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
