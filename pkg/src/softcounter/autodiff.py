# Graph Soft Counter - Soft and hard edge counting for knowledge-graph QA, with SparseVD dissection.
# Copyright (C) 2026 - softcounter contributors
# SPDX-License-Identifier: Apache-2.0
"""
Minimal reverse-mode differentiation over numpy arrays.

A :class:`Tape` records every operation executed while it is active, with the
function mapping the output gradient to the gradients of its inputs. Calling
:meth:`Tape.backward` replays the records in exact reverse order and adds the
resulting gradients into the ``grad`` of every value involved.

Example
-------
::

    weights = Value(np.ones((3, 1)))
    bias = Value(np.zeros(1))
    with Tape() as tape:
        loss = mean(affine(weights, bias, Value(features)))
        tape.backward(loss)
    weights.grad  # d loss / d weights

Outside an active tape the operations only compute their result, which is
how evaluation runs.

Every tensor is ``float64`` with rank at most 2.
"""
from collections.abc import Callable
from collections.abc import Sequence
from contextvars import ContextVar
from dataclasses import dataclass

import numpy as np

from . import kernels
from .exception import ContractError
from .exception import GraphIndexError
from .exception import ShapeError

VJP = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_ACTIVE_TAPE: ContextVar["Tape | None"] = ContextVar("active_tape", default=None)


class Value:
    """
    A differentiable tensor.

    Attributes
    ----------
    data : numpy.ndarray
        ``float64`` payload of rank 0, 1 or 2.
    grad : numpy.ndarray
        Gradient accumulator, same shape as ``data``.
    node_id : int | None
        Position on the last tape that recorded this value.
    name : str | None
        Optional label used in error messages (parameter names).
    """

    __slots__ = ("data", "grad", "node_id", "name")

    def __init__(self, data, name: str | None = None):
        array = np.array(data, dtype=np.float64)
        if array.ndim > 2:
            raise ContractError("Value", f"rank {array.ndim} tensors are not supported")
        self.data = array
        self.grad = np.zeros_like(array)
        self.node_id: int | None = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        label = f"{self.name}, " if self.name else ""
        return f"Value({label}shape={self.shape})"


@dataclass
class _Record:
    value: Value
    parents: tuple[Value, ...]
    vjp: VJP | None


class Tape:
    """Ordered record of executed operations; parents always precede children."""

    def __init__(self):
        self._records: list[_Record] = []
        self._index: dict[int, int] = {}
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc_info):
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self._records)

    def node_of(self, value: Value) -> int | None:
        return self._index.get(id(value))

    def watch(self, value: Value) -> int:
        """Register ``value`` as a leaf unless it is already on the tape."""
        node = self._index.get(id(value))
        if node is None:
            node = self._append(value, (), None)
        return node

    def record(self, value: Value, parents: Sequence[Value], vjp: VJP) -> Value:
        """Append an operation whose output is ``value``."""
        for parent in parents:
            self.watch(parent)
        self._append(value, tuple(parents), vjp)
        return value

    def _append(self, value: Value, parents: tuple, vjp: VJP | None) -> int:
        node = len(self._records)
        self._records.append(_Record(value, parents, vjp))
        self._index[id(value)] = node
        value.node_id = node
        return node

    def backward(self, loss: Value) -> None:
        """
        Add ``d loss / d value`` into the ``grad`` of every recorded value.

        Repeated calls accumulate; zero the gradients in between to start over.

        Raises
        ------
        ContractError
            If ``loss`` is not a scalar or is not on this tape.
        """
        if loss.data.size != 1:
            raise ContractError(
                "backward", f"loss must be a scalar, got shape {loss.shape}"
            )
        start = self.node_of(loss)
        if start is None:
            raise ContractError("backward", "loss was not recorded on this tape")
        adjoints: dict[int, np.ndarray] = {start: np.ones_like(loss.data)}
        for node in range(start, -1, -1):
            upstream = adjoints.pop(node, None)
            if upstream is None:
                continue
            record = self._records[node]
            record.value.grad = record.value.grad + upstream
            if record.vjp is None:
                continue
            for parent, grad in zip(record.parents, record.vjp(upstream)):
                if grad is None:
                    continue
                parent_node = self._index[id(parent)]
                previous = adjoints.get(parent_node)
                adjoints[parent_node] = grad if previous is None else previous + grad


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE.get()


def backward(tape: Tape, loss: Value) -> None:
    """Module-level alias of :meth:`Tape.backward`."""
    tape.backward(loss)


def record(data: np.ndarray, parents: Sequence[Value], vjp: VJP) -> Value:
    """Wrap ``data`` in a Value and record it on the active tape, if any."""
    out = Value(data)
    tape = _ACTIVE_TAPE.get()
    if tape is not None:
        tape.record(out, parents, vjp)
    return out


def as_value(data) -> Value:
    return data if isinstance(data, Value) else Value(data)


def _same_shape(operation: str, left: Value, right: Value) -> None:
    if left.shape != right.shape:
        raise ShapeError(operation, left.shape, right.shape)


# ----------------------------------------------------------------------
# Linear algebra
# ----------------------------------------------------------------------
def affine(weights: Value, bias: Value, x: Value) -> Value:
    """
    Return ``x @ weights + bias``.

    Shapes: ``weights [in, out]``, ``bias [out]``, ``x [n, in]`` gives ``[n, out]``.
    """
    if x.data.ndim != 2 or weights.data.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeError("affine", x.shape, weights.shape)
    if bias.shape != (weights.shape[1],):
        raise ShapeError("affine.bias", bias.shape, (weights.shape[1],))
    w_data, x_data = weights.data, x.data

    def vjp(grad):
        return x_data.T @ grad, grad.sum(axis=0), grad @ w_data.T

    return record(x_data @ w_data + bias.data, (weights, bias, x), vjp)


def add(left: Value, right: Value) -> Value:
    _same_shape("add", left, right)
    return record(left.data + right.data, (left, right), lambda grad: (grad, grad))


def sub(left: Value, right: Value) -> Value:
    _same_shape("sub", left, right)
    return record(left.data - right.data, (left, right), lambda grad: (grad, -grad))


def mul(left: Value, right: Value) -> Value:
    """Elementwise product."""
    _same_shape("mul", left, right)
    l_data, r_data = left.data, right.data
    return record(
        l_data * r_data, (left, right), lambda grad: (grad * r_data, grad * l_data)
    )


def scale(x: Value, factor: float) -> Value:
    """Multiply by a constant."""
    return record(x.data * factor, (x,), lambda grad: (grad * factor,))


def reshape(x: Value, shape: tuple) -> Value:
    original = x.shape
    return record(x.data.reshape(shape), (x,), lambda grad: (grad.reshape(original),))


# ----------------------------------------------------------------------
# Nonlinearities
# ----------------------------------------------------------------------
def _stable_sigmoid(data: np.ndarray) -> np.ndarray:
    out = np.empty_like(data)
    positive = data >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-data[positive]))
    exp_x = np.exp(data[~positive])
    out[~positive] = exp_x / (1.0 + exp_x)
    return out


def sigmoid(x: Value) -> Value:
    """Elementwise logistic function; saturates without overflow."""
    out = _stable_sigmoid(np.atleast_1d(x.data)).reshape(x.shape)
    return record(out, (x,), lambda grad: (grad * out * (1.0 - out),))


def relu(x: Value) -> Value:
    mask = x.data > 0
    return record(np.where(mask, x.data, 0.0), (x,), lambda grad: (grad * mask,))


def tanh(x: Value) -> Value:
    out = np.tanh(x.data)
    return record(out, (x,), lambda grad: (grad * (1.0 - out * out),))


def identity(x: Value) -> Value:
    return x


ACTIVATIONS = {"relu": relu, "tanh": tanh, "sigmoid": sigmoid, "identity": identity}


def activation(x: Value, kind: str = "relu") -> Value:
    """
    Apply the hidden nonlinearity named ``kind``.

    Raises
    ------
    ContractError
        For an unknown kind.
    """
    try:
        function = ACTIVATIONS[kind]
    except KeyError as error:
        raise ContractError(
            "activation", f"unknown kind '{kind}', expected one of {sorted(ACTIVATIONS)}"
        ) from error
    return function(x)


# ----------------------------------------------------------------------
# Indexing and graph operations
# ----------------------------------------------------------------------
def take(x: Value, index) -> Value:
    """
    Select entries (rank 1) or rows (rank 2) of ``x``.

    ``index`` may be an integer, giving a rank-reduced result, or an integer
    array. Repeated indices accumulate their gradients.
    """
    size = x.shape[0] if x.data.ndim else 0
    index_array = np.asarray(index, dtype=np.int64)
    kernels.check_index("take", index_array.reshape(-1), size)
    shape = x.shape

    def vjp(grad):
        full = np.zeros(shape, dtype=np.float64)
        np.add.at(full, index_array, grad)
        return (full,)

    return record(x.data[index_array], (x,), vjp)


def gather_add(edge_vals: Value, node_vals: Value, src_index) -> Value:
    """
    Return ``edge_vals[e] + node_vals[src_index[e]]``.

    The gradient flows back to the nodes by scattering along the same index.
    """
    src = np.ascontiguousarray(src_index, dtype=np.int64)
    if edge_vals.data.ndim != 1 or edge_vals.shape[0] != src.shape[0]:
        raise ShapeError("gather_add", edge_vals.shape, src.shape)
    node_count = node_vals.shape[0]
    out = kernels.gather_add(edge_vals.data, node_vals.data, src)

    def vjp(grad):
        return grad, kernels.scatter_add(grad, src, node_count)

    return record(out, (edge_vals, node_vals), vjp)


def scatter_add(edge_vals: Value, dst_index, node_count: int) -> Value:
    """
    Return the node vector ``out[v] = sum of edge_vals[e] with dst_index[e] == v``.

    Nodes without incoming edge get exactly 0; the result replaces any prior
    node state.
    """
    dst = np.ascontiguousarray(dst_index, dtype=np.int64)
    if edge_vals.data.ndim != 1 or edge_vals.shape[0] != dst.shape[0]:
        raise ShapeError("scatter_add", edge_vals.shape, dst.shape)
    out = kernels.scatter_add(edge_vals.data, dst, node_count)
    return record(out, (edge_vals,), lambda grad: (grad[dst],))


def stack(values: Sequence[Value]) -> Value:
    """Stack scalars (or same-shape vectors) along a new first axis."""
    if not values:
        raise ContractError("stack", "nothing to stack")
    for value in values[1:]:
        _same_shape("stack", values[0], value)
    parents = tuple(values)

    def vjp(grad):
        return tuple(grad[position] for position in range(len(parents)))

    return record(np.stack([value.data for value in parents]), parents, vjp)


def concat(values: Sequence[Value]) -> Value:
    """Concatenate vectors."""
    if not values or any(value.data.ndim != 1 for value in values):
        raise ContractError("concat", "expects at least one rank-1 value")
    sizes = [value.shape[0] for value in values]
    bounds = np.cumsum([0] + sizes)
    parents = tuple(values)

    def vjp(grad):
        return tuple(grad[bounds[k] : bounds[k + 1]] for k in range(len(parents)))

    return record(np.concatenate([value.data for value in parents]), parents, vjp)


# ----------------------------------------------------------------------
# Reductions and losses
# ----------------------------------------------------------------------
def sum_all(x: Value) -> Value:
    shape = x.shape
    return record(
        np.array(x.data.sum()), (x,), lambda grad: (np.full(shape, float(grad)),)
    )


def mean(x: Value) -> Value:
    shape, size = x.shape, max(x.data.size, 1)
    return record(
        np.array(x.data.mean() if x.data.size else 0.0),
        (x,),
        lambda grad: (np.full(shape, float(grad) / size),),
    )


def softmax_cross_entropy(scores: Value, label: int) -> Value:
    """
    Return ``-log softmax(scores)[label]``.

    Computed with max-subtraction, so shifting every score by a constant
    leaves loss and gradient unchanged. The gradient is
    ``softmax(scores) - onehot(label)``.

    Raises
    ------
    GraphIndexError
        If ``label`` is outside ``[0, C)``.
    """
    if scores.data.ndim != 1:
        raise ShapeError("softmax_cross_entropy", scores.shape, ("C",))
    n_choices = scores.shape[0]
    if not 0 <= label < n_choices:
        raise GraphIndexError("softmax_cross_entropy", label, n_choices)
    shifted = scores.data - scores.data.max()
    log_norm = np.log(np.exp(shifted).sum())
    probabilities = np.exp(shifted - log_norm)
    loss = log_norm - shifted[label]

    def vjp(grad):
        local = probabilities.copy()
        local[label] -= 1.0
        return (float(grad) * local,)

    return record(np.array(loss), (scores,), vjp)


def mse(prediction: Value, target) -> Value:
    """Mean squared error against a constant target of the same shape."""
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ShapeError("mse", prediction.shape, target.shape)
    residual = prediction.data - target
    size = max(residual.size, 1)
    return record(
        np.array((residual**2).sum() / size),
        (prediction,),
        lambda grad: (float(grad) * 2.0 * residual / size,),
    )
