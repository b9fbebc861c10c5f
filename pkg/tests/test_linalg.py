"""Pseudoinverse and matrix plumbing."""

import numpy as np
import pytest

from traincert.linalg import (
    DEFAULT_RCOND_SCALE,
    ShapeError,
    as_matrix,
    augment_ones,
    frob_norm_sq,
    matmul,
    pinv,
    svd,
)


def random_matrix(rng, max_side=12, rank_deficient=False):
    m = int(rng.integers(1, max_side + 1))
    n = int(rng.integers(1, max_side + 1))
    if rank_deficient and min(m, n) >= 2:
        r = int(rng.integers(1, min(m, n)))
        return rng.normal(size=(m, r)) @ rng.normal(size=(r, n))
    return rng.normal(size=(m, n))


def rel(err, scale):
    return err / max(scale, 1e-30)


def test_as_matrix_accepts_2d():
    a = as_matrix([[1.0, 2.0], [3.0, 4.0]], "a")
    assert a.shape == (2, 2)
    assert a.dtype == np.float64


def test_as_matrix_rejects_bad_inputs():
    with pytest.raises(ShapeError):
        as_matrix(np.ones(3), "vec")
    with pytest.raises(ShapeError):
        as_matrix(np.ones((0, 2)), "empty")
    with pytest.raises(ValueError, match="non-finite"):
        as_matrix(np.array([[1.0, np.nan]]), "bad")
    with pytest.raises(ValueError, match="payload"):
        as_matrix(np.array([[np.inf, 1.0]]), "payload")


def test_matmul_shape_error_names_operands():
    a = np.ones((2, 3))
    b = np.ones((4, 2))
    with pytest.raises(ShapeError, match="3"):
        matmul(a, b)


def test_frob_norm_sq_matches_numpy():
    rng = np.random.default_rng(11)
    for _ in range(20):
        a = random_matrix(rng)
        assert np.isclose(frob_norm_sq(a), np.linalg.norm(a, "fro") ** 2)


def test_svd_reconstructs_and_is_orthonormal():
    rng = np.random.default_rng(5)
    for _ in range(30):
        a = random_matrix(rng)
        res = svd(a)
        k = min(a.shape)
        assert res.u.shape == (a.shape[0], k)
        assert res.v.shape == (a.shape[1], k)
        assert np.all(np.diff(res.s) <= 1e-12)  # nonincreasing
        back = (res.u * res.s) @ res.v.T
        assert np.allclose(back, a, atol=1e-10)
        assert np.allclose(res.u.T @ res.u, np.eye(k), atol=1e-10)
        assert np.allclose(res.v.T @ res.v, np.eye(k), atol=1e-10)


def test_pinv_penrose_conditions_random_suite():
    rng = np.random.default_rng(77)
    for trial in range(120):
        a = random_matrix(rng, rank_deficient=trial % 3 == 0)
        p = pinv(a)
        na = np.linalg.norm(a, "fro")
        np_ = np.linalg.norm(p, "fro")
        assert rel(np.linalg.norm(a @ p @ a - a, "fro"), na) < 1e-8
        assert rel(np.linalg.norm(p @ a @ p - p, "fro"), np_) < 1e-8
        ap = a @ p
        pa = p @ a
        assert rel(np.linalg.norm(ap.T - ap, "fro"), max(np.linalg.norm(ap, "fro"), 1.0)) < 1e-8
        assert rel(np.linalg.norm(pa.T - pa, "fro"), max(np.linalg.norm(pa, "fro"), 1.0)) < 1e-8


def test_pinv_agrees_with_numpy():
    rng = np.random.default_rng(42)
    for trial in range(40):
        a = random_matrix(rng, rank_deficient=trial % 2 == 0)
        assert np.allclose(pinv(a), np.linalg.pinv(a), atol=1e-9)


def test_pinv_known_rank_deficient():
    a = np.array([[2.0, 0.0], [0.0, 0.0]])
    assert np.allclose(pinv(a), np.array([[0.5, 0.0], [0.0, 0.0]]))


def test_pinv_zero_matrix_is_zero():
    assert np.all(pinv(np.zeros((3, 4))) == 0.0)


def test_pinv_truncates_tiny_singular_values():
    # second singular value far below the default cutoff must be dropped
    a = np.diag([1.0, 1e-20])
    p = pinv(a)
    assert np.isclose(p[0, 0], 1.0)
    assert p[1, 1] == 0.0
    # explicit generous rcond keeps it
    p_keep = pinv(a, rcond=1e-25)
    assert np.isclose(p_keep[1, 1], 1e20)


def test_pinv_default_rcond_scales_with_size():
    # cutoff = scale * max(rows, cols) * largest singular value
    assert DEFAULT_RCOND_SCALE == 1e-12
    a = np.diag([1.0, 3e-11])  # above 2 * 1e-12, must be kept
    p = pinv(a)
    assert p[1, 1] > 0


def test_pinv_least_squares_property():
    # x = pinv(A) b minimizes ||A x - b|| among all vectors
    rng = np.random.default_rng(9)
    for _ in range(20):
        a = random_matrix(rng, max_side=8)
        b = rng.normal(size=(a.shape[0], 1))
        x = pinv(a) @ b
        base = np.linalg.norm(a @ x - b)
        for _ in range(5):
            other = x + rng.normal(scale=0.1, size=x.shape)
            assert base <= np.linalg.norm(a @ other - b) + 1e-12


def test_augment_ones_appends_row():
    a = np.arange(6.0).reshape(2, 3)
    out = augment_ones(a)
    assert out.shape == (3, 3)
    assert np.all(out[:2] == a)
    assert np.all(out[2] == 1.0)
