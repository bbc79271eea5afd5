import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqpinn.errors import DegenerateInputError, StructureError
from seqpinn.network import Architecture, NetworkParams, average_params, forward, init_network


def test_default_architecture_size():
    a = Architecture()
    assert a.layer_dims() == [2] + [150] * 8 + [3]
    # 2x150 + 7 x 150x150 + 150x3 weights, biases, plus two 2x150 encoders
    expected = (2 * 150 + 150) + 7 * (150 * 150 + 150) + (150 * 3 + 3) + 2 * (2 * 150 + 150)
    assert a.n_params == expected


def test_tensor_views_cover_flat_vector():
    a = Architecture(2, 4, True)
    p = init_network(a, 0)
    t = p.tensors()
    assert sum(v.size for v in t.values()) == p.flat.size
    t["b1"][:] = 5.0
    assert np.count_nonzero(p.flat == 5.0) == 4


def test_init_is_deterministic_and_glorot_bounded():
    a = Architecture(3, 10, False)
    p, q = init_network(a, 3), init_network(a, 3)
    assert p == q and not (p == init_network(a, 4))
    W = p.tensors()["W2"]
    assert np.abs(W).max() <= np.sqrt(6 / 20)
    assert np.all(p.tensors()["b2"] == 0)


def test_bad_structures():
    with pytest.raises(StructureError):
        Architecture(0, 3)
    with pytest.raises(StructureError):
        average_params([init_network(Architecture(1, 3), 0), init_network(Architecture(1, 4), 0)])
    with pytest.raises(DegenerateInputError):
        average_params([])


def test_forward_shape_and_plain_mlp():
    a = Architecture(1, 3, False)
    p = init_network(a, 0)
    t = p.tensors()
    x = np.array([[0.2, -0.1]])
    h = np.tanh(x @ t["W1"] + t["b1"])
    np.testing.assert_allclose(forward(p, x), h @ t["W_out"] + t["b_out"], atol=1e-15)


def test_gated_forward_by_hand():
    a = Architecture(2, 3, True)
    rng = np.random.default_rng(0)
    p = NetworkParams(a, rng.normal(size=a.n_params))
    t = p.tensors()
    x = rng.normal(size=(4, 2))
    e1 = np.tanh(x @ t["W_enc1"] + t["b_enc1"])
    e2 = np.tanh(x @ t["W_enc2"] + t["b_enc2"])
    h = x
    for k in (1, 2):
        z = np.tanh(h @ t[f"W{k}"] + t[f"b{k}"])
        h = (1 - z) * e1 + z * e2
    np.testing.assert_allclose(forward(p, x), h @ t["W_out"] + t["b_out"], rtol=1e-12, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 6), seed=st.integers(0, 1000))
def test_average_is_permutation_invariant_and_exact_for_copies(k, seed):
    a = Architecture(1, 3, True)
    ps = [init_network(a, seed + i) for i in range(k)]
    perm = np.random.default_rng(seed).permutation(k)
    np.testing.assert_array_equal(average_params(ps).flat, average_params([ps[i] for i in perm]).flat)
    np.testing.assert_array_equal(average_params([ps[0]] * k).flat, ps[0].flat)
