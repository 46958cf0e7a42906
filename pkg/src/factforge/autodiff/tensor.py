"""Reverse-mode automatic differentiation over dense numpy arrays.

A Tensor wraps an ndarray and, when gradients are enabled, remembers how it
was produced so that ``backward()`` on a scalar loss can accumulate
gradients into every reachable leaf. Gradients accumulate additively across
backward calls until explicitly cleared.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Parameter",
    "NumericError",
    "no_grad",
    "set_check_finite",
    "add",
    "sub",
    "mul",
    "matmul",
    "dot",
    "tanh",
    "sigmoid",
    "exp",
    "log",
    "relu",
    "softplus",
    "softmax",
    "log_softmax",
    "tsum",
    "tmean",
    "tmax",
    "concat",
    "stack",
    "reshape",
    "transpose2d",
    "embedding",
    "gather_rows",
    "gather_time",
    "dropout",
    "square",
]


class NumericError(ArithmeticError):
    """A forward operation produced a NaN or Inf value."""


_grad_enabled = True
_check_finite = True


@contextlib.contextmanager
def no_grad():
    """Disable graph construction inside the block (forward values only)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def set_check_finite(flag: bool) -> None:
    """Toggle the NaN/Inf guard run after every forward op."""
    global _check_finite
    _check_finite = bool(flag)


class Tensor:
    """Dense array with an optional gradient slot and backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        """Accumulate gradients of this scalar into all reachable leaves."""
        if self.data.size != 1 or self.data.shape != ():
            raise ValueError(
                f"backward() requires a scalar loss, got shape {self.data.shape}"
            )
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad and node._backward is None:
                node._accumulate(g)
            if node._backward is not None:
                node._backward_dispatch(g, grads)

    def _backward_dispatch(self, g: np.ndarray, grads: dict[int, np.ndarray]) -> None:
        contribs = self._backward(g)
        for parent, pg in contribs:
            if not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg

    # Operator sugar; scalars and ndarrays are wrapped as constants.
    def __add__(self, other):
        return add(self, _as_tensor(other, self.dtype))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _as_tensor(other, self.dtype))

    def __rsub__(self, other):
        return sub(_as_tensor(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other, self.dtype))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, _as_tensor(-1.0, self.dtype))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return _getitem(self, key)

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{flag})"


class Parameter(Tensor):
    """A named trainable leaf tensor."""

    __slots__ = ("name",)

    def __init__(self, data, name: str):
        super().__init__(np.asarray(data), requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name}, shape={self.data.shape})"


def _as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=dtype)
    return Tensor(arr)


def _guard(out: np.ndarray, op: str) -> None:
    if _check_finite and not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite values produced by op '{op}'")


def _make(
    data: np.ndarray,
    parents: Sequence[Tensor],
    backward: Callable[[np.ndarray], list[tuple[Tensor, np.ndarray]]] | None,
    op: str,
) -> Tensor:
    _guard(data, op)
    out = Tensor(data)
    if _grad_enabled and backward is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def backward(g):
        out = []
        if a.requires_grad:
            out.append((a, _unbroadcast(g, a.data.shape)))
        if b.requires_grad:
            out.append((b, _unbroadcast(g, b.data.shape)))
        return out

    return _make(data, (a, b), backward, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data

    def backward(g):
        out = []
        if a.requires_grad:
            out.append((a, _unbroadcast(g, a.data.shape)))
        if b.requires_grad:
            out.append((b, _unbroadcast(-g, b.data.shape)))
        return out

    return _make(data, (a, b), backward, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data

    def backward(g):
        out = []
        if a.requires_grad:
            out.append((a, _unbroadcast(g * b.data, a.data.shape)))
        if b.requires_grad:
            out.append((b, _unbroadcast(g * a.data, b.data.shape)))
        return out

    return _make(data, (a, b), backward, "mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ValueError(
            f"matmul requires operands with ndim >= 2, got shapes "
            f"{a.data.shape} and {b.data.shape}"
        )
    try:
        data = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ValueError(
            f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}"
        ) from exc

    def backward(g):
        out = []
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            out.append((a, _unbroadcast(ga, a.data.shape)))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            out.append((b, _unbroadcast(gb, b.data.shape)))
        return out

    return _make(data, (a, b), backward, "matmul")


def dot(a: Tensor, b: Tensor) -> Tensor:
    """Inner product of two 1-D tensors, returning a scalar."""
    if a.data.ndim != 1 or b.data.ndim != 1 or a.data.shape != b.data.shape:
        raise ValueError(f"dot shape mismatch: {a.data.shape} vs {b.data.shape}")
    data = np.asarray(a.data @ b.data)

    def backward(g):
        return [(a, g * b.data), (b, g * a.data)]

    return _make(data, (a, b), backward, "dot")


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)

    def backward(g):
        return [(a, g * (1.0 - data * data))]

    return _make(data, (a,), backward, "tanh")


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a: Tensor) -> Tensor:
    data = _stable_sigmoid(a.data)

    def backward(g):
        return [(a, g * data * (1.0 - data))]

    return _make(data, (a,), backward, "sigmoid")


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        data = np.exp(a.data)

    def backward(g):
        return [(a, g * data)]

    return _make(data, (a,), backward, "exp")


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        data = np.log(a.data)

    def backward(g):
        return [(a, g / a.data)]

    return _make(data, (a,), backward, "log")


def relu(a: Tensor) -> Tensor:
    data = np.maximum(a.data, 0.0)

    def backward(g):
        return [(a, g * (a.data > 0))]

    return _make(data, (a,), backward, "relu")


def softplus(a: Tensor) -> Tensor:
    # log(1 + e^x), computed without overflow for large |x|.
    data = np.maximum(a.data, 0.0) + np.log1p(np.exp(-np.abs(a.data)))

    def backward(g):
        return [(a, g * _stable_sigmoid(a.data))]

    return _make(data, (a,), backward, "softplus")


def square(a: Tensor) -> Tensor:
    data = a.data * a.data

    def backward(g):
        return [(a, g * 2.0 * a.data)]

    return _make(data, (a,), backward, "square")


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = (g * data).sum(axis=axis, keepdims=True)
        return [(a, data * (g - inner))]

    return _make(data, (a,), backward, "softmax")


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    data = shifted - lse

    def backward(g):
        sm = np.exp(data)
        return [(a, g - sm * g.sum(axis=axis, keepdims=True))]

    return _make(data, (a,), backward, "log_softmax")


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return [(a, np.broadcast_to(g, a.data.shape).copy())]
        g2 = g if keepdims else np.expand_dims(g, axis)
        return [(a, np.broadcast_to(g2, a.data.shape).copy())]

    return _make(np.asarray(data), (a,), backward, "sum")


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = a.data.size
    else:
        n = a.data.shape[axis]
    data = a.data.mean(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return [(a, np.broadcast_to(g / n, a.data.shape).copy())]
        g2 = g if keepdims else np.expand_dims(g, axis)
        return [(a, np.broadcast_to(g2 / n, a.data.shape).copy())]

    return _make(np.asarray(data), (a,), backward, "mean")


def tmax(a: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    """Max along an axis; gradient flows to the first (lowest-index) argmax."""
    data = a.data.max(axis=axis, keepdims=keepdims)
    idx = a.data.argmax(axis=axis)

    def backward(g):
        ga = np.zeros_like(a.data)
        g2 = g if keepdims else np.expand_dims(g, axis)
        np.put_along_axis(ga, np.expand_dims(idx, axis), g2, axis=axis)
        return [(a, ga)]

    return _make(data, (a,), backward, "max")


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    ts = list(tensors)
    data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = [t.data.shape[axis] for t in ts]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        out = []
        for t, lo, hi in zip(ts, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            out.append((t, g[tuple(sl)]))
        return out

    return _make(data, ts, backward, "concat")


def stack(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    ts = list(tensors)
    data = np.stack([t.data for t in ts], axis=axis)

    def backward(g):
        parts = np.split(g, len(ts), axis=axis)
        return [(t, np.squeeze(p, axis=axis)) for t, p in zip(ts, parts)]

    return _make(data, ts, backward, "stack")


def reshape(a: Tensor, shape) -> Tensor:
    data = a.data.reshape(shape)

    def backward(g):
        return [(a, g.reshape(a.data.shape))]

    return _make(data, (a,), backward, "reshape")


def transpose2d(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ValueError(f"transpose2d expects a matrix, got shape {a.data.shape}")
    data = a.data.T

    def backward(g):
        return [(a, g.T)]

    return _make(data, (a,), backward, "transpose2d")


def _is_basic_index(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(
        isinstance(k, (int, np.integer, slice)) or k is Ellipsis or k is None
        for k in parts
    )


def _getitem(a: Tensor, key) -> Tensor:
    data = a.data[key]
    basic = _is_basic_index(key)

    def backward(g):
        ga = np.zeros_like(a.data)
        if basic:
            ga[key] += g
        else:
            np.add.at(ga, key, g)
        return [(a, ga)]

    return _make(np.asarray(data), (a,), backward, "getitem")


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup: out[..., :] = weight[ids[...], :]."""
    ids = np.asarray(ids)
    data = weight.data[ids]

    def backward(g):
        gw = np.zeros_like(weight.data)
        np.add.at(gw, ids, g)
        return [(weight, gw)]

    return _make(data, (weight,), backward, "embedding")


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    """Pick one column per row: out[i] = a[i, idx[i]] for a 2-D tensor."""
    idx = np.asarray(idx)
    n = a.data.shape[0]
    rows = np.arange(n)
    data = a.data[rows, idx]

    def backward(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, (rows, idx), g)
        return [(a, ga)]

    return _make(data, (a,), backward, "gather_rows")


def gather_time(a: Tensor, idx: np.ndarray) -> Tensor:
    """Reorder the time axis per row: out[b, t] = a[b, idx[b, t]] for (B, T, D)."""
    idx = np.asarray(idx)
    b = np.arange(a.data.shape[0])[:, None]
    data = a.data[b, idx]

    def backward(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, (b, idx), g)
        return [(a, ga)]

    return _make(data, (a,), backward, "gather_time")


def dropout(a: Tensor, rate: float, rng: np.random.Generator, train: bool = True) -> Tensor:
    """Inverted dropout: scales kept units by 1/(1-rate) so inference is identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return a
    keep = (rng.random(a.data.shape) >= rate).astype(a.data.dtype)
    scale = 1.0 / (1.0 - rate)
    mask = keep * scale

    def backward(g):
        return [(a, g * mask)]

    return _make(a.data * mask, (a,), backward, "dropout")
