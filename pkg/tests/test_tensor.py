import numpy as np
import pytest

from promptner import tensor as T
from promptner.errors import ContractError, DimensionError
from promptner.gradcheck import grad_check


def t(data, rg=True, dtype=np.float64):
    return T.Tensor(np.asarray(data, dtype=float), requires_grad=rg, dtype=dtype)


def check(f, shapes, seed=0, tol=1e-6):
    rng = np.random.default_rng(seed)
    params = {f"p{i}": t(rng.normal(size=s)) for i, s in enumerate(shapes)}
    errs = grad_check(f, params, eps=1e-6, kink_guard=False)
    assert max(errs.values()) < tol, errs


class TestMatmul:
    def test_identity(self):
        a = t([[1.0, 2.0], [3.0, 4.0]])
        eye = t(np.eye(2), rg=False)
        assert np.allclose(T.matmul(eye, a).data, a.data)

    def test_hand_product(self):
        out = T.matmul(t([[1, 2], [3, 4]]), t([[1], [1]]))
        assert np.allclose(out.data, [[3], [7]])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            T.matmul(t(np.ones((2, 3))), t(np.ones((2, 3))))

    def test_gradient(self):
        check(lambda p: T.sum_all(T.mul(T.matmul(p["p0"], p["p1"]),
                                        T.matmul(p["p0"], p["p1"]))),
              [(3, 4), (4, 2)])


class TestElementwise:
    def test_sigmoid_zero(self):
        assert T.sigmoid(t([0.0])).data[0] == 0.5

    def test_sigmoid_symmetry(self):
        x = np.linspace(-8, 8, 33)
        total = T.sigmoid(t(x)).data + T.sigmoid(t(-x)).data
        assert np.allclose(total, 1.0)

    def test_gelu_gradient(self):
        check(lambda p: T.sum_all(T.mul(T.gelu(p["p0"]), p["p0"])), [(4, 5)], tol=1e-5)

    def test_incompatible_shapes(self):
        with pytest.raises(DimensionError):
            T.add(t(np.ones((2, 3))), t(np.ones((3, 2))))

    def test_row_broadcast_backward(self):
        x = t(np.ones((4, 3)))
        b = t(np.zeros(3))
        T.backward(T.sum_all(T.add(x, b)))
        assert np.allclose(b.grad, [4, 4, 4])

    def test_no_input_mutation(self):
        x = t(np.ones((3, 3)))
        before = x.data.copy()
        T.relu(x)
        T.sigmoid(x)
        T.softmax_rows(x)
        T.layer_norm(x, t(np.ones(3)), t(np.zeros(3)))
        assert np.array_equal(x.data, before)


class TestLayerNorm:
    def test_constant_row_is_zeroed(self):
        out = T.layer_norm(t([[3.0, 3.0, 3.0]]), t(np.ones(3)), t(np.zeros(3)))
        assert np.allclose(out.data, 0.0)

    def test_already_normalized(self):
        out = T.layer_norm(t([[1.0, -1.0]]), t(np.ones(2)), t(np.zeros(2)), eps=1e-12)
        assert np.allclose(out.data, [[1.0, -1.0]], atol=1e-5)

    def test_gradient(self):
        check(lambda p: T.sum_all(T.mul(T.layer_norm(p["p0"], p["p1"], p["p2"]),
                                        T.layer_norm(p["p0"], p["p1"], p["p2"]))),
              [(3, 6), (6,), (6,)], tol=1e-5)

    def test_empty_row_rejected(self):
        with pytest.raises(DimensionError):
            T.layer_norm(t(np.ones((2, 0))), t(np.ones(0)), t(np.zeros(0)))


class TestSoftmax:
    def test_uniform(self):
        assert np.allclose(T.softmax_rows(t([[0.0, 0.0]])).data, [[0.5, 0.5]])

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(1)
        y = T.softmax_rows(t(rng.normal(size=(5, 7)) * 30)).data
        assert np.allclose(y.sum(axis=-1), 1.0, atol=1e-6)

    def test_shift_invariance(self):
        x = np.array([[1.0, 2.0, 3.0]])
        assert np.allclose(T.softmax_rows(t(x)).data, T.softmax_rows(t(x + 100.0)).data)

    def test_gradient(self):
        check(lambda p: T.sum_all(T.mul(T.softmax_rows(p["p0"]), p["p0"])), [(3, 5)], tol=1e-5)


class TestBackward:
    def test_sum_gives_ones(self):
        w = t(np.arange(6.0).reshape(2, 3))
        T.backward(T.sum_all(w))
        assert np.allclose(w.grad, 1.0)

    def test_quadratic(self):
        w = t([[1.0, -2.0, 3.0]])
        T.backward(T.sum_all(T.mul(w, w)))
        assert np.allclose(w.grad, 2 * w.data)

    def test_double_backward_doubles(self):
        w = t([[1.0, 2.0]])
        loss = T.sum_all(T.mul(w, w))
        T.backward(loss)
        first = w.grad.copy()
        loss2 = T.sum_all(T.mul(w, w))
        T.backward(loss2)
        assert np.allclose(w.grad, 2 * first)

    def test_nonscalar_rejected(self):
        with pytest.raises(ContractError):
            T.backward(t(np.ones((2, 2))))

    def test_shared_input_accumulates(self):
        w = t([[2.0]])
        # w used twice: loss = w*w + w  -> grad 2w + 1
        loss = T.sum_all(T.add(T.mul(w, w), w))
        T.backward(loss)
        assert np.allclose(w.grad, [[5.0]])


class TestDropout:
    def test_deterministic_given_seed(self):
        x = t(np.ones((4, 4)))
        a = T.dropout(x, 0.5, np.random.default_rng(7)).data
        b = T.dropout(x, 0.5, np.random.default_rng(7)).data
        assert np.array_equal(a, b)

    def test_backward_matches_mask(self):
        x = t(np.ones((10, 10)))
        out = T.dropout(x, 0.3, np.random.default_rng(3))
        T.backward(T.sum_all(out))
        assert np.array_equal(x.grad, out.data)  # mask * 1, inputs all ones


class TestBceWithLogits:
    def test_zero_logit_positive(self):
        loss = T.bce_with_logits(t([[0.0]]), np.array([[1.0]]), "sum")
        assert abs(loss.item() - np.log(2)) < 1e-9

    def test_two_pairs_sum(self):
        loss = T.bce_with_logits(t([[0.0, 0.0]]), np.array([[1.0, 0.0]]), "sum")
        assert abs(loss.item() - 2 * np.log(2)) < 1e-9

    def test_matches_naive_moderate_logits(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-20, 20, size=(100, 10))
        y = (rng.random((100, 10)) < 0.5).astype(float)
        stable = T.bce_with_logits(t(x), y, "sum").item()
        s = 1 / (1 + np.exp(-x))
        naive = -(y * np.log(s) + (1 - y) * np.log(1 - s)).sum()
        assert abs(stable - naive) / abs(naive) < 1e-9

    def test_finite_for_extreme_logits(self):
        loss = T.bce_with_logits(t([[1000.0, -1000.0]]), np.array([[0.0, 1.0]]), "sum")
        assert np.isfinite(loss.item())

    def test_gradient(self):
        y = np.array([[1.0, 0.0, 1.0]])
        check(lambda p: T.bce_with_logits(p["p0"], y, "mean"), [(1, 3)])
