"""Row accumulation and the sparse-row Adam optimizer."""

import numpy as np
import pytest

from ankge.optim import Adam, accumulate_rows


def adam_reference(grads, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8):
    """Dense scalar Adam trace computed independently; returns param deltas."""
    m = v = 0.0
    param = 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        param -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return param


class TestAccumulateRows:
    def test_sums_duplicate_ids(self):
        ids = np.array([3, 1, 3])
        grads = np.array([[1.0, 2.0], [10.0, 20.0], [100.0, 200.0]])
        out_ids, out = accumulate_rows(ids, grads)
        np.testing.assert_array_equal(out_ids, [1, 3])
        np.testing.assert_array_equal(out, [[10.0, 20.0], [101.0, 202.0]])

    def test_order_independent(self):
        rng = np.random.default_rng(0)
        ids = rng.integers(0, 5, size=20)
        grads = rng.normal(size=(20, 3))
        perm = rng.permutation(20)
        a_ids, a = accumulate_rows(ids, grads)
        b_ids, b = accumulate_rows(ids[perm], grads[perm])
        np.testing.assert_array_equal(a_ids, b_ids)
        np.testing.assert_allclose(a, b, atol=1e-15)

    def test_single_row(self):
        ids, grads = accumulate_rows(np.array([7]), np.array([[1.5, -2.0]]))
        np.testing.assert_array_equal(ids, [7])
        np.testing.assert_array_equal(grads, [[1.5, -2.0]])


class TestAdamDense:
    def test_single_step_matches_reference(self):
        opt = Adam((2,), lr=0.1)
        param = np.zeros(2)
        opt.step_dense(param, np.array([2.0, -1.0]))
        assert param[0] == pytest.approx(adam_reference([2.0]), abs=1e-15)
        assert param[1] == pytest.approx(adam_reference([-1.0]), abs=1e-15)

    def test_multi_step_matches_reference(self):
        grads = [0.5, -1.5, 3.0, 0.1]
        opt = Adam((1,), lr=0.1)
        param = np.zeros(1)
        for g in grads:
            opt.step_dense(param, np.array([g]))
        assert param[0] == pytest.approx(adam_reference(grads), rel=1e-12)

    def test_step_counter(self):
        opt = Adam((1,), lr=0.1)
        param = np.zeros(1)
        assert opt.t == 0
        opt.step_dense(param, np.ones(1))
        opt.step_dense(param, np.ones(1))
        assert opt.t == 2


class TestAdamRows:
    def test_matches_dense_when_all_rows_touched(self):
        rng = np.random.default_rng(1)
        grads = rng.normal(size=(4, 3))
        dense = Adam((4, 3), lr=0.05)
        sparse = Adam((4, 3), lr=0.05)
        p_dense = np.zeros((4, 3))
        p_sparse = np.zeros((4, 3))
        dense.step_dense(p_dense, grads)
        sparse.step_rows(p_sparse, np.arange(4), grads)
        np.testing.assert_array_equal(p_dense, p_sparse)

    def test_untouched_rows_frozen(self):
        opt = Adam((4, 2), lr=0.1)
        param = np.arange(8, dtype=np.float64).reshape(4, 2)
        before = param.copy()
        opt.step_rows(param, np.array([1, 3]), np.ones((2, 2)))
        np.testing.assert_array_equal(param[[0, 2]], before[[0, 2]])
        assert np.all(param[[1, 3]] != before[[1, 3]])
        assert np.all(opt.m[[0, 2]] == 0.0)

    def test_touched_row_follows_reference(self):
        grads = [1.0, -2.0, 0.5]
        opt = Adam((5, 1), lr=0.1)
        param = np.zeros((5, 1))
        for g in grads:
            opt.step_rows(param, np.array([2]), np.array([[g]]))
        assert param[2, 0] == pytest.approx(adam_reference(grads), rel=1e-12)

    def test_empty_rows_is_noop(self):
        opt = Adam((3, 2), lr=0.1)
        param = np.ones((3, 2))
        opt.step_rows(param, np.empty(0, dtype=np.int64), np.empty((0, 2)))
        np.testing.assert_array_equal(param, np.ones((3, 2)))
        assert opt.t == 0

    def test_first_step_size_is_lr(self):
        # with bias correction the first Adam step is lr * sign(g)
        opt = Adam((1, 1), lr=0.01)
        param = np.zeros((1, 1))
        opt.step_rows(param, np.array([0]), np.array([[123.0]]))
        assert param[0, 0] == pytest.approx(-0.01, rel=1e-7)
