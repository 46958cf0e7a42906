import numpy as np
import pytest

from factforge import autodiff as ad


def test_softmax_symmetry():
    s = ad.softmax(ad.Tensor(np.array([0.0, 0.0])))
    np.testing.assert_allclose(s.data, [0.5, 0.5])


def test_softmax_normalized_and_nonnegative():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = ad.Tensor(rng.normal(size=(3, 7)) * 5)
        s = ad.softmax(x, axis=1)
        assert np.all(s.data >= 0)
        np.testing.assert_allclose(s.data.sum(axis=1), 1.0, atol=1e-6)


def test_dot_trivial():
    assert ad.dot(ad.Tensor(np.array([1.0, 0.0])), ad.Tensor(np.array([1.0, 0.0]))).item() == 1.0


def test_matmul_hand_instance():
    a = ad.Tensor(np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))
    b = ad.Tensor(np.array([[1.0], [2.0], [3.0]]))
    c = ad.matmul(a, b)
    np.testing.assert_allclose(c.data, [[14.0], [32.0]])


def test_matmul_shape_mismatch_names_shapes():
    a = ad.Tensor(np.zeros((2, 3)))
    b = ad.Tensor(np.zeros((4, 2)))
    with pytest.raises(ValueError, match=r"\(2, 3\).*\(4, 2\)"):
        ad.matmul(a, b)


def test_backward_linear_case():
    c = ad.Tensor(np.array([3.0, -1.0, 2.0]))
    p = ad.Parameter(np.array([1.0, 1.0, 1.0]), "p")
    ad.dot(p, c).backward()
    np.testing.assert_allclose(p.grad, c.data)


def test_backward_tanh_at_origin():
    x = ad.Parameter(np.array(0.0), "x")
    ad.tanh(x).backward()
    np.testing.assert_allclose(x.grad, 1.0)


def test_backward_requires_scalar():
    x = ad.Parameter(np.ones(3), "x")
    with pytest.raises(ValueError, match="scalar"):
        ad.tanh(x).backward()


def test_gradient_accumulation_is_additive():
    p = ad.Parameter(np.array([2.0]), "p")
    ad.tsum(ad.mul(p, p)).backward()
    first = p.grad.copy()
    ad.tsum(ad.mul(p, p)).backward()
    np.testing.assert_allclose(p.grad, 2 * first)


def test_three_layer_composition_matches_finite_differences():
    rng = np.random.default_rng(42)
    w1 = ad.Parameter(rng.normal(size=(4, 5)), "w1")
    w2 = ad.Parameter(rng.normal(size=(5, 3)), "w2")
    w3 = ad.Parameter(rng.normal(size=(3, 1)), "w3")
    x = ad.Tensor(rng.normal(size=(2, 4)))

    def loss_fn():
        h1 = ad.tanh(ad.matmul(x, w1))
        h2 = ad.sigmoid(ad.matmul(h1, w2))
        return ad.tsum(ad.matmul(h2, w3))

    report = ad.grad_check(loss_fn, [w1, w2, w3])
    assert report.max_rel_error < 1e-3


@pytest.mark.parametrize("seed", range(20))
def test_primitives_match_finite_differences(seed):
    """Random compositions of the primitive ops against central differences."""
    rng = np.random.default_rng(seed)
    p = ad.Parameter(rng.normal(size=(3, 4)), "p")
    q = ad.Parameter(rng.normal(size=(4, 2)), "q")
    ids = rng.integers(0, 3, size=5)

    def loss_fn():
        a = ad.matmul(p, q)  # (3, 2)
        b = ad.softmax(a, axis=1)
        c = ad.log_softmax(a, axis=0)
        d = ad.tmax(ad.mul(b, c), axis=1)
        e = ad.embedding(p, ids)  # (5, 4)
        f = ad.concat([e, e], axis=1)
        g = ad.softplus(ad.tmean(f, axis=1))
        h = ad.relu(ad.sub(d, ad.Tensor(np.full(3, 0.1))))
        return ad.add(ad.tsum(g), ad.tsum(h))

    report = ad.grad_check(loss_fn, [p, q])
    assert report.max_rel_error < 1e-3, report.per_param


def test_gather_and_stack_gradients():
    rng = np.random.default_rng(3)
    p = ad.Parameter(rng.normal(size=(4, 6)), "p")
    idx = np.array([1, 5, 0, 2])
    idx2 = np.array([[1, 0, 2], [2, 1, 0]])
    q = ad.Parameter(rng.normal(size=(2, 3, 2)), "q")

    def loss_fn():
        picked = ad.gather_rows(p, idx)
        reordered = ad.gather_time(q, idx2)
        s = ad.stack([ad.tsum(picked), ad.tsum(reordered)])
        return ad.tsum(ad.mul(s, s))

    report = ad.grad_check(loss_fn, [p, q])
    assert report.max_rel_error < 1e-3


def test_dropout_rate_zero_is_identity():
    x = ad.Tensor(np.ones((5, 5)))
    out = ad.dropout(x, 0.0, np.random.default_rng(0), train=True)
    assert out is x


def test_dropout_kept_fraction_and_scaling():
    rng = np.random.default_rng(7)
    rate = 0.3
    n = 100_000
    x = ad.Tensor(np.ones(n))
    out = ad.dropout(x, rate, rng, train=True)
    kept = np.count_nonzero(out.data)
    sigma = np.sqrt(n * rate * (1 - rate))
    assert abs(kept - n * (1 - rate)) < 3 * sigma
    np.testing.assert_allclose(
        out.data[out.data != 0], 1.0 / (1 - rate), rtol=1e-6
    )


def test_dropout_eval_mode_is_identity():
    x = ad.Tensor(np.ones(10))
    assert ad.dropout(x, 0.5, np.random.default_rng(0), train=False) is x


def test_finite_guard_raises():
    with pytest.raises(ad.NumericError, match="exp"):
        ad.exp(ad.Tensor(np.array([1000.0])))


def test_no_grad_blocks_graph():
    p = ad.Parameter(np.ones(3), "p")
    with ad.no_grad():
        out = ad.tsum(ad.mul(p, p))
    assert out.requires_grad is False


def test_constant_loss_has_zero_gradients():
    p = ad.Parameter(np.ones(3), "p")

    def loss_fn():
        return ad.tsum(ad.Tensor(np.array([1.0])))

    report = ad.grad_check(loss_fn, [p])
    assert report.max_rel_error == 0.0


def test_max_ties_route_to_lowest_index():
    p = ad.Parameter(np.array([[2.0, 2.0, 1.0]]), "p")
    ad.tsum(ad.tmax(p, axis=1)).backward()
    np.testing.assert_allclose(p.grad, [[1.0, 0.0, 0.0]])
