import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqpinn.errors import DegenerateInputError, StructureError
from seqpinn.optimize import (AdamState, TrainConfig, adam_step, early_stop, lr_schedule,
                              minibatches, sgd_step)


def test_adam_matches_scalar_recurrence():
    grads = [0.5, -1.0, 2.0]
    p, m, v = 1.0, 0.0, 0.0
    expected = []
    for t, g in enumerate(grads, start=1):
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        p -= 1e-3 * (m / (1 - 0.9 ** t)) / (math.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        expected.append(p)
    state, x = AdamState.zeros(1), np.array([1.0])
    for g, e in zip(grads, expected):
        x, state = adam_step(state, x, np.array([g]), 1e-3)
        assert x[0] == pytest.approx(e, rel=1e-14)
    assert state.t == 3


def test_first_adam_step_has_learning_rate_magnitude():
    x, _ = adam_step(AdamState.zeros(3), np.zeros(3), np.array([1e-3, -5.0, 100.0]), 0.01)
    np.testing.assert_allclose(np.abs(x), 0.01, rtol=1e-4)


def test_steppers_do_not_mutate_inputs():
    x, g = np.ones(2), np.ones(2)
    s = AdamState.zeros(2)
    adam_step(s, x, g, 0.1)
    assert np.all(x == 1) and np.all(s.m == 0)
    np.testing.assert_array_equal(sgd_step(x, g, 0.5), [0.5, 0.5])
    with pytest.raises(StructureError):
        sgd_step(x, np.ones(3), 0.1)


def test_lr_schedule_two_phases():
    cfg = TrainConfig()
    assert lr_schedule(0, cfg) == 1e-3 and lr_schedule(1999, cfg) == 1e-3
    assert lr_schedule(2000, cfg) == 5e-4 and lr_schedule(4999, cfg) == 5e-4


def test_defaults():
    cfg = TrainConfig()
    assert (cfg.init_epochs, cfg.adapt_epochs, cfg.posterior_k, cfg.batch_size) == (3000, 30, 15, 1024)
    assert cfg.uncertainty_check_interval == 500 and cfg.uncertainty_samples == 30
    assert cfg.adapt_optimizer == "sgd" and cfg.adapt_lr == 5e-4
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("kw", [dict(batch_size=0), dict(adapt_optimizer="rmsprop"),
                                dict(adapt_lr=0.0), dict(seed=-1), dict(posterior_k=0)])
def test_invalid_config(kw):
    with pytest.raises(StructureError):
        TrainConfig(**kw)


def test_early_stop():
    assert not early_stop([1.0] * 5, 10, 1e-6)
    assert early_stop([1.0] * 11, 10, 1e-6)
    assert not early_stop(list(np.linspace(1, 0, 30)), 10, 1e-6)
    hist = [1.0, 0.5] + [0.5 - 1e-7] * 10
    assert early_stop(hist, 10, 1e-6)
    with pytest.raises(DegenerateInputError):
        early_stop([], 3, 0.0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 300), bs=st.integers(1, 64), seed=st.integers(0, 10**6), epoch=st.integers(0, 99))
def test_minibatches_partition(n, bs, seed, epoch):
    batches = minibatches(n, bs, seed, epoch)
    allidx = np.concatenate(batches)
    np.testing.assert_array_equal(np.sort(allidx), np.arange(n))
    assert all(len(b) <= bs for b in batches)
    again = minibatches(n, bs, [seed], epoch)
    assert all(np.array_equal(a, b) for a, b in zip(batches, again))


def test_small_set_is_one_full_batch():
    (b,) = minibatches(10, 1024, 0, 0)
    np.testing.assert_array_equal(b, np.arange(10))
