import numpy as np
import pytest

from skelmotion.errors import NumericFault
from skelmotion.numerics import OptimizerConfig, ParamStore, clip_gradients, optimizer_step


def make_store(value, grad):
    store = ParamStore()
    store.add("p", np.asarray(value, dtype=np.float64))
    store.grad("p")[...] = grad
    return store


def test_sgd_hand_case():
    store = make_store(1.0, 2.0)
    optimizer_step(store, OptimizerConfig("sgd", 0.01))
    assert float(store["p"].data) == pytest.approx(0.98, abs=1e-15)


def test_zero_gradient_leaves_parameter_unchanged():
    for kind in ("sgd", "adam"):
        store = make_store([1.5, -2.5], [0.0, 0.0])
        optimizer_step(store, OptimizerConfig(kind, 0.01))
        assert np.array_equal(store["p"].data, [1.5, -2.5])


def test_adam_first_step_magnitude():
    # bias-corrected first step: m_hat = g, v_hat = g^2, step = lr*g/(|g|+eps)
    store = make_store(0.0, 1.0)
    optimizer_step(store, OptimizerConfig("adam", 0.01))
    assert abs(float(store["p"].data) + 0.01) < 1e-6


def test_gradients_zeroed_after_step():
    store = make_store(1.0, 2.0)
    optimizer_step(store, OptimizerConfig("sgd", 0.1))
    assert float(store.grad("p")) == 0.0


def test_non_finite_gradient_aborts_without_mutation():
    store = make_store([1.0, 2.0], [np.nan, 1.0])
    with pytest.raises(NumericFault):
        optimizer_step(store, OptimizerConfig("sgd", 0.1))
    assert np.array_equal(store["p"].data, [1.0, 2.0])


def test_adam_state_persists_across_steps():
    store = make_store(0.0, 1.0)
    cfg = OptimizerConfig("adam", 0.01)
    optimizer_step(store, cfg)
    first = float(store["p"].data)
    store.grad("p")[...] = 1.0
    optimizer_step(store, cfg)
    second = float(store["p"].data)
    assert second < first < 0.0


def test_clip_gradients_global_norm():
    store = ParamStore()
    store.add("a", np.zeros(2))
    store.add("b", np.zeros(1))
    store.grad("a")[...] = [3.0, 0.0]
    store.grad("b")[...] = 4.0
    total = clip_gradients(store, max_norm=2.5)
    assert total == pytest.approx(5.0)
    clipped = np.sqrt(np.sum(store.grad("a") ** 2) + np.sum(store.grad("b") ** 2))
    assert clipped == pytest.approx(2.5)
    # below the cap nothing changes
    total = clip_gradients(store, max_norm=10.0)
    assert total == pytest.approx(2.5)


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig("sgd", -0.1)
    with pytest.raises(ValueError):
        OptimizerConfig("adam", 0.1, beta1=1.0)
    with pytest.raises(ValueError):
        OptimizerConfig("rmsprop", 0.1)
