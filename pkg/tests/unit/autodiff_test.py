import numpy as np
import pytest
from softcounter import autodiff as ad
from softcounter.autodiff import Tape
from softcounter.autodiff import Value
from softcounter.exception import ContractError
from softcounter.exception import GraphIndexError
from softcounter.exception import ShapeError
from softcounter.gradcheck import grad_check


# -----------------------------------------------------------------------------
# Tape
# -----------------------------------------------------------------------------


def test_value_rejects_rank_three():
    with pytest.raises(ContractError):
        Value(np.zeros((2, 2, 2)))


def test_operations_outside_tape_are_not_recorded():
    x = Value([1.0, 2.0])
    y = ad.add(x, x)
    assert y.node_id is None
    assert y.data.tolist() == [2.0, 4.0]


def test_backward_accumulates_gradients():
    x = Value([1.0, -2.0, 3.0])
    with Tape() as tape:
        loss = ad.sum_all(ad.mul(x, x))
        tape.backward(loss)
        assert x.grad.tolist() == [2.0, -4.0, 6.0]
        tape.backward(loss)
    assert x.grad.tolist() == [4.0, -8.0, 12.0]
    x.zero_grad()
    assert x.grad.tolist() == [0.0, 0.0, 0.0]


def test_backward_rejects_non_scalar_loss():
    x = Value([1.0, 2.0])
    with Tape() as tape:
        y = ad.scale(x, 2.0)
        with pytest.raises(ContractError):
            tape.backward(y)


def test_backward_rejects_unrecorded_loss():
    loss = Value(1.0)
    with Tape() as tape:
        with pytest.raises(ContractError):
            tape.backward(loss)


def test_tape_length_counts_leaves_and_operations():
    x = Value([1.0])
    with Tape() as tape:
        ad.scale(x, 3.0)
    assert len(tape) == 2


# -----------------------------------------------------------------------------
# Operations
# -----------------------------------------------------------------------------


def test_shape_mismatch_raises():
    with pytest.raises(ShapeError):
        ad.add(Value([1.0]), Value([1.0, 2.0]))
    with pytest.raises(ShapeError):
        ad.affine(Value(np.zeros((3, 2))), Value(np.zeros(2)), Value(np.zeros((1, 4))))
    with pytest.raises(ShapeError):
        ad.affine(Value(np.zeros((3, 2))), Value(np.zeros(3)), Value(np.zeros((1, 3))))


def test_unknown_activation():
    with pytest.raises(ContractError):
        ad.activation(Value([1.0]), "gelu")


def test_sigmoid_saturates_without_overflow():
    x = Value([-1000.0, 0.0, 1000.0])
    with np.errstate(over="raise"):
        out = ad.sigmoid(x)
    assert out.data.tolist() == [0.0, 0.5, 1.0]


def test_take_accumulates_repeated_indices():
    x = Value([1.0, 2.0, 3.0])
    with Tape() as tape:
        loss = ad.sum_all(ad.take(x, [0, 0, 2]))
        tape.backward(loss)
    assert loss.item() == 5.0
    assert x.grad.tolist() == [2.0, 0.0, 1.0]


def test_take_rejects_out_of_range_index():
    with pytest.raises(GraphIndexError):
        ad.take(Value([1.0, 2.0]), [2])


def test_softmax_cross_entropy_gradient():
    scores = Value([1.0, 2.0, 0.5])
    with Tape() as tape:
        loss = ad.softmax_cross_entropy(scores, 1)
        tape.backward(loss)
    probabilities = np.exp(scores.data) / np.exp(scores.data).sum()
    assert loss.item() == pytest.approx(-np.log(probabilities[1]))
    expected = probabilities - np.array([0.0, 1.0, 0.0])
    assert np.allclose(scores.grad, expected)


def test_softmax_cross_entropy_is_shift_invariant():
    base = ad.softmax_cross_entropy(Value([1.0, 2.0, 0.5]), 2)
    shifted = ad.softmax_cross_entropy(Value([1001.0, 1002.0, 1000.5]), 2)
    assert shifted.item() == pytest.approx(base.item())


def test_softmax_cross_entropy_rejects_bad_label():
    with pytest.raises(GraphIndexError):
        ad.softmax_cross_entropy(Value([0.0, 1.0]), 2)


def test_mse():
    prediction = Value([1.0, 3.0])
    with Tape() as tape:
        loss = ad.mse(prediction, [0.0, 1.0])
        tape.backward(loss)
    assert loss.item() == pytest.approx(2.5)
    assert prediction.grad.tolist() == [1.0, 2.0]


# -----------------------------------------------------------------------------
# Gradients against central differences
# -----------------------------------------------------------------------------


def test_mlp_gradients():
    rng = np.random.default_rng(7)
    w1 = Value(rng.normal(size=(4, 3)))
    b1 = Value(rng.normal(size=3))
    w2 = Value(rng.normal(size=(3, 1)))
    b2 = Value(np.zeros(1))
    x = Value(rng.normal(size=(5, 4)))

    def loss():
        hidden = ad.tanh(ad.affine(w1, b1, x))
        out = ad.sigmoid(ad.affine(w2, b2, hidden))
        return ad.mse(ad.reshape(out, (5,)), np.linspace(0.0, 1.0, 5))

    assert grad_check(loss, [w1, b1, w2, b2, x], step=1e-5) < 1e-5


def test_graph_operation_gradients():
    src = np.array([1, 2, 2, 0])
    dst = np.array([0, 1, 0, 2])
    edges = Value([0.3, 0.7, 0.2, 0.9])
    nodes = Value([1.0, -1.0, 0.5])

    def loss():
        edge_state = ad.gather_add(edges, nodes, src)
        node_state = ad.scatter_add(ad.mul(edge_state, edge_state), dst, 3)
        parts = ad.concat([node_state, ad.stack([ad.take(edge_state, 1)])])
        return ad.sum_all(ad.sub(parts, ad.scale(parts, 0.25)))

    assert grad_check(loss, [edges, nodes], step=1e-5) < 1e-5
