"""Dense float64 tensors with tape-based reverse-mode differentiation.

Tensors are immutable once created. Ops executed while a GradTape is active
are recorded together with a vector-Jacobian closure; ``backward`` replays
the tape in reverse and deposits gradients into a ParamStore.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import NumericFault, ShapeError

_ids = itertools.count()

# The tape currently recording, if any. Single-owner per training step.
_ACTIVE_TAPE = None


class Tensor:
    """Immutable row-major float64 array with an identity for taping."""

    __slots__ = ("data", "_id")

    def __init__(self, values):
        # np.array keeps 0-d shapes (ascontiguousarray would promote to 1-d)
        # and always copies, so callers cannot mutate us afterwards.
        arr = np.array(values, dtype=np.float64, order="C")
        if not np.all(np.isfinite(arr)):
            raise NumericFault("tensor created with non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "_id", next(_ids))

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def numpy(self):
        """Writable copy of the underlying array."""
        return np.array(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    # Operator sugar, all routed through the recorded kernels.
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    def __rmul__(self, other):
        return mul(_as_tensor(other), self)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


class GradTape:
    """Ordered record of ops; replaying it backward visits exact reverse order."""

    def __init__(self):
        self._ops = []  # (out_id, input_ids, vjp)
        self._out_ids = set()

    def __enter__(self):
        global _ACTIVE_TAPE
        if _ACTIVE_TAPE is not None:
            raise RuntimeError("a GradTape is already active")
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, exc_type, exc, tb):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = None
        return False

    def _record(self, out, inputs, vjp):
        self._ops.append((out._id, tuple(t._id for t in inputs), vjp))
        self._out_ids.add(out._id)

    def __len__(self):
        return len(self._ops)

    def gradients(self, loss):
        """Map of tensor id -> dL/dtensor for every tensor reachable from loss."""
        if loss.ndim != 0:
            raise ShapeError(f"loss must be scalar, got shape {loss.shape}")
        if loss._id not in self._out_ids:
            raise ValueError("loss was not produced under this tape")
        grads = {loss._id: np.ones((), dtype=np.float64)}
        for out_id, in_ids, vjp in reversed(self._ops):
            g = grads.get(out_id)
            if g is None:
                continue
            for tid, gi in zip(in_ids, vjp(g)):
                acc = grads.get(tid)
                grads[tid] = gi if acc is None else acc + gi
        return grads


def _finish(kind, out_data, inputs, vjp):
    if not np.all(np.isfinite(out_data)):
        raise NumericFault(f"{kind}: non-finite output")
    out = Tensor.__new__(Tensor)
    arr = np.asarray(out_data, dtype=np.float64, order="C")
    if not arr.flags["C_CONTIGUOUS"]:  # 0-d arrays are always contiguous
        arr = np.ascontiguousarray(arr)
    if not arr.flags.writeable:
        arr = arr.copy()
    arr.flags.writeable = False
    object.__setattr__(out, "data", arr)
    object.__setattr__(out, "_id", next(_ids))
    if _ACTIVE_TAPE is not None:
        _ACTIVE_TAPE._record(out, inputs, vjp)
    return out


def _unbroadcast(g, shape):
    """Reduce gradient g back to the pre-broadcast shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def matmul(a, b):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shapes do not conform: {a.shape} vs {b.shape}")
    ad, bd = a.data, b.data

    def vjp(g):
        return g @ bd.T, ad.T @ g

    # overflow surfaces as the NumericFault below, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        out = ad @ bd
    return _finish("matmul", out, (a, b), vjp)


def _broadcastable(sa, sb):
    try:
        np.broadcast_shapes(sa, sb)
        return True
    except ValueError:
        return False


def add(a, b):
    if not _broadcastable(a.shape, b.shape):
        raise ShapeError(f"add shapes do not conform: {a.shape} vs {b.shape}")
    sa, sb = a.shape, b.shape

    def vjp(g):
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    with np.errstate(over="ignore", invalid="ignore"):
        out = a.data + b.data
    return _finish("add", out, (a, b), vjp)


def mul(a, b):
    if not _broadcastable(a.shape, b.shape):
        raise ShapeError(f"mul shapes do not conform: {a.shape} vs {b.shape}")
    sa, sb = a.shape, b.shape
    ad, bd = a.data, b.data

    def vjp(g):
        return _unbroadcast(g * bd, sa), _unbroadcast(g * ad, sb)

    with np.errstate(over="ignore", invalid="ignore"):
        out = ad * bd
    return _finish("mul", out, (a, b), vjp)


def sub(a, b):
    return add(a, mul(b, Tensor(-1.0)))


def concat(tensors, axis=1):
    tensors = tuple(tensors)
    if not tensors:
        raise ShapeError("concat of zero tensors")
    if len({t.ndim for t in tensors}) != 1:
        raise ShapeError("concat inputs must share rank")
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return _finish("concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, vjp)


def take_columns(x, indices):
    """Column subset x[:, indices]; the slice op for arbitrary index lists."""
    idx = np.asarray(indices, dtype=np.intp)
    if x.ndim != 2:
        raise ShapeError(f"take_columns expects a matrix, got shape {x.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[1]):
        raise ShapeError(f"column index out of range for width {x.shape[1]}")
    width = x.shape[1]

    def vjp(g):
        gx = np.zeros((g.shape[0], width), dtype=np.float64)
        np.add.at(gx, (slice(None), idx), g)
        return (gx,)

    return _finish("slice", x.data[:, idx], (x,), vjp)


def sigmoid(x):
    xd = x.data
    t = np.exp(-np.abs(xd))
    out = np.where(xd >= 0, 1.0 / (1.0 + t), t / (1.0 + t))

    def vjp(g):
        return (g * out * (1.0 - out),)

    return _finish("sigmoid", out, (x,), vjp)


def tanh(x):
    out = np.tanh(x.data)

    def vjp(g):
        return (g * (1.0 - out * out),)

    return _finish("tanh", out, (x,), vjp)


def lrelu(x, slope=0.2):
    pos = x.data >= 0

    def vjp(g):
        return (g * np.where(pos, 1.0, slope),)

    return _finish("lrelu", np.where(pos, x.data, slope * x.data), (x,), vjp)


def dropout(x, rate, training, seed):
    """Inverted dropout: identity in eval mode, mask-and-rescale in training.

    ``seed`` may be an int or a tuple of ints; the mask is a pure function of
    (seed, shape), so repeated calls are bit-identical.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    rng = np.random.default_rng(seed)
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def vjp(g):
        return (g * mask,)

    return _finish("dropout", x.data * mask, (x,), vjp)


def sum_of_squares(x):
    xd = x.data

    def vjp(g):
        return (g * 2.0 * xd,)

    with np.errstate(over="ignore", invalid="ignore"):
        out = np.sum(xd * xd)
    return _finish("sum_of_squares", out, (x,), vjp)


_OPS = {
    "matmul": matmul,
    "add": add,
    "mul": mul,
    "concat": lambda *ts, axis=1: concat(ts, axis=axis),
    "slice": take_columns,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "lrelu": lrelu,
    "dropout": dropout,
    "sum_of_squares": sum_of_squares,
}


def forward_op(op_kind, *inputs, **attrs):
    """Dispatch a kernel by name; recorded on the active tape when one is open."""
    try:
        fn = _OPS[op_kind]
    except KeyError:
        raise ValueError(f"unknown op kind {op_kind!r}") from None
    return fn(*inputs, **attrs)


def backward(tape, loss, params):
    """Accumulate dloss/dparam into each entry's gradient slot.

    Repeated calls without zeroing accumulate; parameters not reachable from
    the loss keep their current (typically zero) gradient.
    """
    grads = tape.gradients(loss)
    params.accumulate(grads)
    return params
