"""
Minimal dense tensor engine with tape-based reverse-mode differentiation.

All data is float64. Every differentiable op that touches a tensor with
requires_grad=True appends a record to the current thread's tape; backward()
walks the tape in reverse recording order and frees it afterwards.

Shapes are checked strictly. The only implicit broadcasting is over the
leading batch dimensions of matmul and over the trailing feature dimension
of linear()/layer_norm() affine parameters.
"""

import threading
from contextlib import contextmanager
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class Tensor:
    """Dense float64 array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "tape_node", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.tape_node: Optional["TapeRecord"] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def numpy(self) -> np.ndarray:
        return self.data

    def backward(self):
        backward(self)

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad = self.grad + g

    def __repr__(self):
        label = f"name={self.name!r}, " if self.name else ""
        return f"Tensor({label}shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


class TapeRecord:
    """One recorded op: output, inputs and the rule mapping d_out to d_inputs."""

    __slots__ = ("output", "inputs", "backward_fn")

    def __init__(self, output: Tensor, inputs: Sequence[Tensor], backward_fn: Callable):
        self.output = output
        self.inputs = tuple(inputs)
        self.backward_fn = backward_fn


class Tape:
    """Ordered list of recorded ops; recording order is a topological order."""

    def __init__(self):
        self.records: List[TapeRecord] = []
        self.enabled = True

    def record(self, output: Tensor, inputs: Sequence[Tensor], backward_fn: Callable):
        rec = TapeRecord(output, inputs, backward_fn)
        output.tape_node = rec
        self.records.append(rec)

    def clear(self):
        for rec in self.records:
            rec.output.tape_node = None
        self.records = []

    def __len__(self):
        return len(self.records)


_local = threading.local()


def current_tape() -> Tape:
    """The calling thread's tape (created on first use)."""
    tape = getattr(_local, "tape", None)
    if tape is None:
        tape = Tape()
        _local.tape = tape
    return tape


@contextmanager
def no_grad():
    """Disable recording inside the block."""
    tape = current_tape()
    previous = tape.enabled
    tape.enabled = False
    try:
        yield
    finally:
        tape.enabled = previous


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, inputs: Sequence[Tensor], backward_fn: Callable) -> Tensor:
    tape = current_tape()
    needs = tape.enabled and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs)
    if needs:
        tape.record(out, inputs, backward_fn)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum grad over the axes that were broadcast to reach its shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _require_same_shape(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def backward(loss: Tensor):
    """
    Accumulate d(loss)/d(t) into t.grad for every tensor with requires_grad.

    The tape is freed afterwards, so each forward pass supports one backward.
    """
    if loss.size != 1:
        raise ShapeError(f"backward() needs a scalar loss, got shape {loss.shape}")
    tape = current_tape()
    if not loss.requires_grad:
        tape.clear()
        return

    grads = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape.records):
        g_out = grads.pop(id(rec.output), None)
        if g_out is None:
            continue
        in_grads = rec.backward_fn(g_out)
        for t, g in zip(rec.inputs, in_grads):
            if g is None or not t.requires_grad:
                continue
            if t.tape_node is None:
                t._accumulate(g)
            else:
                key = id(t)
                grads[key] = grads[key] + g if key in grads else g
    tape.clear()


# ── elementwise and structural ops ─────────────────────────────────────────

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _require_same_shape("add", a, b)
    return _make(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _require_same_shape("sub", a, b)
    return _make(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _require_same_shape("mul", a, b)
    return _make(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def scale(x, c: float) -> Tensor:
    x = _as_tensor(x)
    return _make(x.data * c, (x,), lambda g: (g * c,))


def tanh(x) -> Tensor:
    x = _as_tensor(x)
    y = np.tanh(x.data)
    return _make(y, (x,), lambda g: (g * (1.0 - y * y),))


def relu(x) -> Tensor:
    x = _as_tensor(x)
    mask = x.data > 0
    return _make(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def reshape(x, shape: Tuple[int, ...]) -> Tensor:
    x = _as_tensor(x)
    original = x.shape
    return _make(x.data.reshape(shape), (x,), lambda g: (g.reshape(original),))


def transpose(x, axes: Tuple[int, ...]) -> Tensor:
    x = _as_tensor(x)
    inverse = tuple(np.argsort(axes))
    return _make(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),))


def swap_last(x) -> Tensor:
    """Transpose of the two trailing axes."""
    x = _as_tensor(x)
    axes = tuple(range(x.data.ndim - 2)) + (x.data.ndim - 1, x.data.ndim - 2)
    return transpose(x, axes)


def expand_batch(x, batch: int) -> Tensor:
    """Repeat x along a new leading axis of length `batch`."""
    x = _as_tensor(x)
    data = np.broadcast_to(x.data, (batch,) + x.shape).copy()
    return _make(data, (x,), lambda g: (g.sum(axis=0),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    ndim = tensors[0].data.ndim
    ax = axis % ndim
    for t in tensors[1:]:
        if t.data.ndim != ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != ax
        ):
            raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]}")
    sizes = [t.shape[ax] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward_fn(g):
        return tuple(
            np.take(g, np.arange(lo, hi), axis=ax) for lo, hi in zip(bounds[:-1], bounds[1:])
        )

    return _make(np.concatenate([t.data for t in tensors], axis=ax), tensors, backward_fn)


def sum_all(x) -> Tensor:
    x = _as_tensor(x)
    shape = x.shape
    return _make(np.array(x.data.sum()), (x,), lambda g: (np.full(shape, float(g)),))


def mean_all(x) -> Tensor:
    x = _as_tensor(x)
    shape, n = x.shape, x.size
    return _make(np.array(x.data.mean()), (x,), lambda g: (np.full(shape, float(g) / n),))


def mse_loss(a, b) -> Tensor:
    """Mean over all elements of (a - b)^2."""
    a, b = _as_tensor(a), _as_tensor(b)
    _require_same_shape("mse_loss", a, b)
    diff = a.data - b.data
    n = diff.size

    def backward_fn(g):
        ga = 2.0 * float(g) * diff / n
        return ga, -ga

    return _make(np.array(np.mean(diff * diff)), (a, b), backward_fn)


# ── linear algebra ─────────────────────────────────────────────────────────

def matmul(a, b) -> Tensor:
    """
    Batched matrix product [..., m, k] @ [..., k, n].

    Leading batch dimensions broadcast; a 2-D operand is shared across the batch.
    """
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(f"matmul needs at least 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as e:
        raise ShapeError(f"matmul: batch dimensions not broadcastable, {a.shape} @ {b.shape}") from e

    def backward_fn(g):
        ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return _make(out, (a, b), backward_fn)


def linear(x, weight, bias=None) -> Tensor:
    """x[..., in] @ weight[in, out] + bias[out]."""
    x, weight = _as_tensor(x), _as_tensor(weight)
    if x.shape[-1] != weight.shape[0] or weight.data.ndim != 2:
        raise ShapeError(f"linear: input {x.shape} does not match weight {weight.shape}")
    out = x.data @ weight.data
    inputs = [x, weight]
    if bias is not None:
        bias = _as_tensor(bias)
        if bias.shape != (weight.shape[1],):
            raise ShapeError(f"linear: bias {bias.shape} does not match weight {weight.shape}")
        out = out + bias.data
        inputs.append(bias)

    def backward_fn(g):
        gx = g @ weight.data.T
        gw = x.data.reshape(-1, x.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        if bias is None:
            return gx, gw
        return gx, gw, g.reshape(-1, g.shape[-1]).sum(axis=0)

    return _make(out, inputs, backward_fn)


def conv1d(x, weight, stride: int = 1, bias=None) -> Tensor:
    """
    Cross-correlation over the last axis.

    Args:
        x: Input of shape [..., C_in, L]
        weight: Kernel of shape [C_out, C_in, K]
        stride: Step between kernel positions (>= 1)
        bias: Optional [C_out]

    Returns:
        Tensor of shape [..., C_out, L_out] with L_out = (L - K) // stride + 1
    """
    x, weight = _as_tensor(x), _as_tensor(weight)
    c_out, c_in, K = weight.shape
    L = x.shape[-1]
    if x.shape[-2] != c_in:
        raise ShapeError(f"conv1d: input channels {x.shape[-2]} != kernel channels {c_in}")
    if K > L:
        raise ShapeError(f"conv1d: kernel size {K} exceeds input length {L}")
    if stride < 1:
        raise ShapeError(f"conv1d: stride must be >= 1, got {stride}")

    L_out = (L - K) // stride + 1
    # [..., C_in, L_out, K]
    cols = sliding_window_view(x.data, K, axis=-1)[..., ::stride, :][..., :L_out, :]
    out = np.einsum("...clk,ock->...ol", cols, weight.data)
    inputs = [x, weight]
    if bias is not None:
        bias = _as_tensor(bias)
        if bias.shape != (c_out,):
            raise ShapeError(f"conv1d: bias {bias.shape} does not match {c_out} output channels")
        out = out + bias.data[:, None]
        inputs.append(bias)

    def backward_fn(g):
        # einsum will not sum over an ellipsis missing from the output
        gw = np.einsum("nol,nclk->ock", g.reshape(-1, c_out, L_out), cols.reshape(-1, c_in, L_out, K))
        gcols = np.einsum("...ol,ock->...clk", g, weight.data)
        gx = np.zeros_like(x.data)
        for l in range(L_out):
            gx[..., l * stride:l * stride + K] += gcols[..., l, :]
        if bias is None:
            return gx, gw
        gb = g.sum(axis=-1).reshape(-1, c_out).sum(axis=0)
        return gx, gw, gb

    return _make(out, inputs, backward_fn)


# ── normalization and regularization ──────────────────────────────────────

def softmax(x, axis: int = -1) -> Tensor:
    """Numerically stable softmax along axis."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward_fn(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _make(y, (x,), backward_fn)


def layer_norm(x, gain=None, offset=None, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then gain * x + offset."""
    x = _as_tensor(x)
    d = x.shape[-1]
    if d < 1:
        raise ShapeError("layer_norm: feature axis is empty")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv

    inputs = [x]
    out = xhat
    if gain is not None:
        gain = _as_tensor(gain)
        if gain.shape != (d,):
            raise ShapeError(f"layer_norm: gain {gain.shape} does not match features {d}")
        out = out * gain.data
        inputs.append(gain)
    if offset is not None:
        offset = _as_tensor(offset)
        if offset.shape != (d,):
            raise ShapeError(f"layer_norm: offset {offset.shape} does not match features {d}")
        out = out + offset.data
        inputs.append(offset)

    def backward_fn(g):
        gh = g * gain.data if gain is not None else g
        gx = inv * (gh - gh.mean(axis=-1, keepdims=True)
                    - xhat * (gh * xhat).mean(axis=-1, keepdims=True))
        grads = [gx]
        if gain is not None:
            grads.append((g * xhat).reshape(-1, d).sum(axis=0))
        if offset is not None:
            grads.append(g.reshape(-1, d).sum(axis=0))
        return tuple(grads)

    return _make(out, inputs, backward_fn)


def dropout(x, p: float, training: bool, rng: Optional[np.random.Generator] = None) -> Tensor:
    """Inverted dropout; identity when not training or p == 0."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    x = _as_tensor(x)
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs a random generator")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return _make(x.data * mask, (x,), lambda g: (g * mask,))
