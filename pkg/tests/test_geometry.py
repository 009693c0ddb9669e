import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bohmflow.errors import OnSingularSet
from bohmflow.geometry import ConfigSpace, SingularSubspace, singular_distance

SQ2 = math.sqrt(2.0)


def diag_space(delta=0.5):
    sub = SingularSubspace(np.zeros(2), np.array([[1.0, -1.0]]) / SQ2)
    return ConfigSpace(dim=2, singular_subspaces=(sub,), delta=delta)


def test_distance_to_coincidence_line():
    space = diag_space()
    [(idx, dist, e)] = singular_distance(space, np.array([0.0, 1.0]))
    assert idx == 0
    assert dist == pytest.approx(1.0 / SQ2, abs=1e-15)
    assert e == pytest.approx(np.array([1.0, -1.0]) / SQ2, abs=1e-15)


def test_point_on_subspace_flagged():
    space = diag_space()
    with pytest.raises(OnSingularSet):
        singular_distance(space, np.array([0.7, 0.7]))
    [(idx, dist, e)] = singular_distance(space, np.array([0.7, 0.7]), need_direction=False)
    assert dist <= 2e-14 and e is None


def test_line_in_3d_pythagoras():
    sub = SingularSubspace(np.zeros(3), np.eye(3)[:2])
    space = ConfigSpace(dim=3, singular_subspaces=(sub,), delta=1.0)
    [(_, dist, e)] = singular_distance(space, np.array([3.0, 4.0, 7.0]))
    assert dist == pytest.approx(5.0, abs=1e-14)
    assert e == pytest.approx(np.array([-3.0, -4.0, 0.0]) / 5.0, abs=1e-14)


def test_normal_basis_must_be_orthonormal():
    with pytest.raises(ValueError):
        SingularSubspace(np.zeros(2), np.array([[1.0, 1.0]]))
    with pytest.raises(ValueError):
        ConfigSpace(dim=2, singular_subspaces=(), delta=0.0)


def test_codimension_bounds():
    sub = SingularSubspace(np.zeros(2), np.eye(2))
    ConfigSpace(dim=2, singular_subspaces=(sub,), delta=0.1)  # codim = d is fine
    with pytest.raises(ValueError):
        ConfigSpace(dim=3, singular_subspaces=(sub,), delta=0.1)


def test_min_distance_vectorized():
    space = diag_space()
    qs = np.array([[0.0, 1.0], [2.0, 2.0], [1.0, -1.0]])
    d = space.min_distance(qs)
    assert d == pytest.approx([1.0 / SQ2, 0.0, SQ2], abs=1e-14)
    empty = ConfigSpace(dim=2)
    assert np.isinf(empty.min_distance(np.array([0.3, 0.4])))


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    dim=st.integers(2, 4),
    codim=st.integers(1, 2),
)
def test_direction_is_negative_distance_gradient(seed, dim, codim):
    """e = -grad dist, checked by central differences: e . grad dist = -1."""
    rng = np.random.default_rng(seed)
    basis = np.linalg.qr(rng.normal(size=(dim, dim)))[0][:codim]
    sub = SingularSubspace(rng.normal(size=dim), basis)
    q = rng.normal(size=dim) * 2.0
    dist = sub.distance(q)
    if dist < 1e-3:
        return
    _, e = sub.distance_and_direction(q)
    h = 1e-6
    grad = np.array(
        [
            (sub.distance(q + h * dq) - sub.distance(q - h * dq)) / (2 * h)
            for dq in np.eye(dim)
        ]
    )
    assert float(e @ grad) == pytest.approx(-1.0, abs=1e-6)
    assert np.linalg.norm(e) == pytest.approx(1.0, abs=1e-12)
