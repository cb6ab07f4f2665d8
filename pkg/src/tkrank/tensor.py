"""Minimal reverse-mode autodiff over float64 numpy arrays.

Only the primitives the TK network needs are provided. Every primitive
returns a new :class:`Tensor` whose ``_backward`` closure maps the upstream
gradient to one gradient per parent (``None`` for parents that do not need
one). Gradients of leaf tensors accumulate into ``.grad``.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels

DTYPE = np.float64


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")
    __array_ufunc__ = None  # make ``ndarray op Tensor`` defer to Tensor

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if (self.requires_grad and not _parents) else None
        self._parents = tuple(_parents)
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scale(as_tensor(other), -1.0))

    def __rsub__(self, other):
        return add(as_tensor(other), scale(self, -1.0))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def zero_grad(self):
        if self.grad is not None:
            self.grad[...] = 0.0

    def backward(self, grad=None):
        """Propagate ``grad`` (default: ones) to every leaf that requires it."""
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that does not require grad")
        seed = np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=DTYPE)
        if seed.shape != self.data.shape:
            raise ValueError(f"seed gradient shape {seed.shape} != tensor shape {self.data.shape}")

        order = _topological_order(self)
        grads = {id(self): seed}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad += g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg


class Parameter(Tensor):
    """A learned leaf tensor with a stable id and a learning-rate group.

    Group ``"A"`` holds word embeddings and contextualization weights; group
    ``"B"`` holds every other learned weight.
    """

    __slots__ = ("name", "group")

    GROUPS = ("A", "B")

    def __init__(self, name, data, group):
        if group not in self.GROUPS:
            raise ValueError(f"unknown learning-rate group {group!r}")
        super().__init__(np.array(data, dtype=DTYPE), requires_grad=True)
        self.name = name
        self.group = group

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape}, group={self.group})"


def _topological_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


_GRAD_ENABLED = [True]


class no_grad:
    """Context manager that skips graph construction; values are unchanged."""

    def __enter__(self):
        self._prev = _GRAD_ENABLED[0]
        _GRAD_ENABLED[0] = False

    def __exit__(self, *exc):
        _GRAD_ENABLED[0] = self._prev


def _make(data, parents, backward):
    req = _GRAD_ENABLED[0] and any(p.requires_grad for p in parents)
    if not req:
        return Tensor(data)
    return Tensor(data, requires_grad=True, _parents=parents, _backward=backward)


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# -- elementwise ---------------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, (a, b), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(a.data * b.data, (a, b), backward)


def scale(x, c):
    x = as_tensor(x)
    c = float(c)
    return _make(x.data * c, (x,), lambda g: (g * c,))


def exp(x):
    x = as_tensor(x)
    out = np.exp(x.data)
    return _make(out, (x,), lambda g: (g * out,))


def log(x):
    x = as_tensor(x)
    return _make(np.log(x.data), (x,), lambda g: (g / x.data,))


def clamp_min(x, floor):
    """``max(x, floor)``; the gradient is zero where the floor is active."""
    x = as_tensor(x)
    keep = x.data > floor
    return _make(np.where(keep, x.data, floor), (x,), lambda g: (g * keep,))


def relu(x):
    x = as_tensor(x)
    keep = x.data > 0.0
    return _make(x.data * keep, (x,), lambda g: (g * keep,))


def sigmoid(x):
    x = as_tensor(x)
    out = 1.0 / (1.0 + np.exp(-x.data))
    return _make(out, (x,), lambda g: (g * out * (1.0 - out),))


def masked_fill(x, mask, value):
    """Replace entries where ``mask`` is true with ``value`` (broadcast)."""
    x = as_tensor(x)
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
    keep = ~mask
    return _make(np.where(mask, value, x.data), (x,), lambda g: (g * keep,))


# -- shape ---------------------------------------------------------------------


def matmul(a, b):
    """Batched matrix product with numpy broadcasting over leading axes."""
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape) if a.requires_grad else None
        gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape) if b.requires_grad else None
        return ga, gb

    return _make(np.matmul(a.data, b.data), (a, b), backward)


def transpose(x, axes=None):
    """Permute axes; by default swap the last two."""
    x = as_tensor(x)
    if axes is None:
        axes = list(range(x.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _make(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),))


def reshape(x, shape):
    x = as_tensor(x)
    src = x.shape
    return _make(x.data.reshape(shape), (x,), lambda g: (g.reshape(src),))


def sum(x, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy naming
    x = as_tensor(x)
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(out, (x,), backward)


def concat(xs, axis=-1):
    xs = [as_tensor(x) for x in xs]
    sizes = [x.shape[axis] for x in xs]
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(np.concatenate([x.data for x in xs], axis=axis), tuple(xs), backward)


def gather_rows(table, ids, padding_id=0):
    """Embedding lookup ``table[ids]``; gradient for ``padding_id`` is discarded."""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)

    def backward(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids.reshape(-1), g.reshape(-1, table.shape[-1]))
        if padding_id is not None:
            grad[padding_id] = 0.0
        return (grad,)

    return _make(table.data[ids], (table,), backward)


def take(x, index, axis):
    """Select ``index`` (integer array, same rank as ``x``) along ``axis``."""
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)

    def backward(g):
        grad = np.zeros_like(x.data)
        idx = list(np.indices(index.shape, sparse=True))
        idx[axis] = index
        np.add.at(grad, tuple(idx), g)
        return (grad,)

    return _make(np.take_along_axis(x.data, index, axis), (x,), backward)


# -- composite primitives with hand-written gradients --------------------------


def softmax_rows(x):
    """Softmax over the last axis, stabilised by subtracting the row maximum.

    Entries equal to ``-inf`` receive probability exactly 0. Every row must
    contain at least one finite entry.
    """
    x = as_tensor(x)
    shifted = x.data - np.max(x.data, axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / np.sum(e, axis=-1, keepdims=True)

    def backward(g):
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return _make(out, (x,), backward)


def cosine_rows(a, b):
    """Pairwise cosine similarity between the rows of ``a (..., m, d)`` and ``b (..., n, d)``.

    Pairs involving a zero-norm row are defined as 0 and get zero gradient.
    """
    a, b = as_tensor(a), as_tensor(b)
    na = np.sqrt(np.sum(a.data * a.data, axis=-1))
    nb = np.sqrt(np.sum(b.data * b.data, axis=-1))
    za, zb = na == 0.0, nb == 0.0
    ia = np.where(za, 0.0, 1.0 / np.where(za, 1.0, na))
    ib = np.where(zb, 0.0, 1.0 / np.where(zb, 1.0, nb))
    ua = a.data * ia[..., None]
    ub = b.data * ib[..., None]
    cos = np.matmul(ua, np.swapaxes(ub, -1, -2))

    def backward(g):
        ga = gb = None
        if a.requires_grad:
            # d cos_ij / d a_i = (ub_j - cos_ij ua_i) / |a_i|
            ga = (np.matmul(g, ub) - np.sum(g * cos, axis=-1)[..., None] * ua) * ia[..., None]
            ga = _unbroadcast(ga, a.shape)
        if b.requires_grad:
            gt = np.swapaxes(g, -1, -2)
            gb = (np.matmul(gt, ua) - np.sum(g * cos, axis=-2)[..., None] * ub) * ib[..., None]
            gb = _unbroadcast(gb, b.shape)
        return ga, gb

    return _make(cos, (a, b), backward)


def rbf_window_pool(M, mask, mus, sigma, starts, ends):
    """Gaussian kernel pooling of a match matrix over document windows.

    ``M`` is ``(B, m, n)``; ``mask`` the 0/1 cell mask of the same shape.
    Returns ``(B, K, m, W)``: for each kernel and query row, the sum of
    ``exp(-(M - mu)^2 / (2 sigma^2))`` over the unmasked columns of window ``w``.
    """
    M = as_tensor(M)
    mask = np.ascontiguousarray(mask, dtype=DTYPE)
    mus = np.ascontiguousarray(mus, dtype=DTYPE)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    ends = np.ascontiguousarray(ends, dtype=np.int64)
    Md = np.ascontiguousarray(M.data)
    out = kernels.rbf_window_pool(Md, mask, mus, float(sigma), starts, ends)

    def backward(g):
        return (kernels.rbf_window_pool_grad(Md, mask, mus, float(sigma), starts, ends,
                                             np.ascontiguousarray(g)),)

    return _make(out, (M,), backward)


def log_base(x, base):
    return scale(log(x), 1.0 / math.log(base))
