import numpy as np
import pytest

from factforge import autodiff as ad
from factforge.autodiff import SGD, Adam, clip_global_norm


def _param(value, name="p"):
    return ad.Parameter(np.asarray(value, dtype=float), name)


def test_sgd_plain_step():
    p = _param([4.0])
    p.grad = np.array([2.0])
    SGD([p], lr=0.5, clip_norm=None).step()
    np.testing.assert_allclose(p.data, [3.0])


def test_zero_gradient_leaves_parameters_unchanged():
    p = _param([1.0, 2.0])
    p.grad = np.zeros(2)
    before = p.data.copy()
    Adam([p], lr=0.001).step()
    np.testing.assert_allclose(p.data, before)


def test_adam_first_step_magnitude():
    p = _param([0.0])
    p.grad = np.array([1.0])
    Adam([p], lr=0.001).step()
    # Bias correction makes the first-step update ~lr regardless of g scale.
    np.testing.assert_allclose(abs(p.data[0]), 0.001, rtol=1e-6)


def test_step_without_gradients_is_an_error():
    p = _param([1.0])
    with pytest.raises(RuntimeError, match="no populated gradients"):
        SGD([p]).step()


def test_gradients_cleared_after_step():
    p = _param([1.0])
    p.grad = np.array([1.0])
    opt = Adam([p])
    opt.step()
    assert p.grad is None


def test_global_norm_clip():
    p = _param([3.0, 4.0])
    p.grad = np.array([3.0, 4.0])  # norm 5
    norm = clip_global_norm([p], 1.0)
    assert norm == pytest.approx(5.0)
    np.testing.assert_allclose(np.linalg.norm(p.grad), 1.0)


def test_duplicate_parameter_names_rejected():
    with pytest.raises(ValueError, match="unique"):
        SGD([_param([1.0], "x"), _param([2.0], "x")])


def test_adam_state_roundtrip():
    p = _param([1.0])
    opt = Adam([p], lr=0.01)
    p.grad = np.array([0.5])
    opt.step()
    state = opt.state_dict()
    opt2 = Adam([p], lr=0.01)
    opt2.load_state_dict(state)
    assert opt2.step_count == 1
    np.testing.assert_allclose(opt2.m["p"], opt.m["p"])
    np.testing.assert_allclose(opt2.v["p"], opt.v["p"])
