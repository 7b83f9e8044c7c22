"""Reverse-mode automatic differentiation on numpy arrays.

A Tensor wraps a float64 ndarray and records the operation that produced
it; calling backward() on a scalar loss topologically sorts the graph and
accumulates gradients into every node, parameters included.  Only the
operations the classifier topologies need are provided; all of them are
exercised by finite-difference checks in the gradcheck harness.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_backward")

    # keep numpy from consuming Tensor operands so __radd__/__rsub__ run
    __array_ufunc__ = None
    __array_priority__ = 1000

    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    # -- graph traversal ------------------------------------------------

    def backward(self):
        """Accumulate d(self)/d(node) into .grad for every upstream node."""
        if self.data.size != 1:
            raise ShapeMismatch("backward requires a scalar loss")
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
            for parent in node._parents:
                stack.append((parent, False))
        for node in topo:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data + other.data, (self, other))

        def bwd():
            self.grad += _unbroadcast(out.grad, self.data.shape)
            other.grad += _unbroadcast(out.grad, other.data.shape)

        out._backward = bwd
        return out

    __radd__ = __add__

    def __mul__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data * other.data, (self, other))

        def bwd():
            self.grad += _unbroadcast(out.grad * other.data, self.data.shape)
            other.grad += _unbroadcast(out.grad * self.data, other.data.shape)

        out._backward = bwd
        return out

    __rmul__ = __mul__

    def __neg__(self):
        out = Tensor(-self.data, (self,))

        def bwd():
            self.grad += -out.grad

        out._backward = bwd
        return out

    def __sub__(self, other):
        return self + (-_as_tensor(other))

    def __rsub__(self, other):
        return _as_tensor(other) + (-self)

    def __matmul__(self, other):
        if not isinstance(other, Tensor):
            other = _as_tensor(other)
        a, b = self.data, other.data
        if a.ndim != 2 or b.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
            raise ShapeMismatch(f"matmul of {a.shape} and {b.shape}")
        out = Tensor(a @ b, (self, other))

        def bwd():
            g = out.grad
            if b.ndim == 1:
                self.grad += np.outer(g, b)
                other.grad += a.T @ g
            else:
                self.grad += g @ b.T
                other.grad += a.T @ g

        out._backward = bwd
        return out

    # -- shape ops ------------------------------------------------------

    def reshape(self, *shape):
        out = Tensor(self.data.reshape(*shape), (self,))

        def bwd():
            self.grad += out.grad.reshape(self.data.shape)

        out._backward = bwd
        return out

    def transpose(self):
        if self.data.ndim != 2:
            raise ShapeMismatch("transpose expects a 2-d tensor")
        out = Tensor(self.data.T, (self,))

        def bwd():
            self.grad += out.grad.T

        out._backward = bwd
        return out

    def row(self, i: int):
        out = Tensor(self.data[i], (self,))

        def bwd():
            self.grad[i] += out.grad

        out._backward = bwd
        return out

    def pick(self, i: int):
        """Scalar element of a vector."""
        if self.data.ndim != 1:
            raise ShapeMismatch("pick expects a vector")
        out = Tensor(self.data[i], (self,))

        def bwd():
            self.grad[i] += out.grad

        out._backward = bwd
        return out

    # -- reductions and nonlinearities -----------------------------------

    def sum(self):
        out = Tensor(self.data.sum(), (self,))

        def bwd():
            self.grad += out.grad

        out._backward = bwd
        return out

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), (self,))

        def bwd():
            self.grad += out.grad * (self.data > 0)

        out._backward = bwd
        return out

    def sigmoid(self):
        y = 1.0 / (1.0 + np.exp(-self.data))
        out = Tensor(y, (self,))

        def bwd():
            self.grad += out.grad * y * (1.0 - y)

        out._backward = bwd
        return out

    def tanh(self):
        y = np.tanh(self.data)
        out = Tensor(y, (self,))

        def bwd():
            self.grad += out.grad * (1.0 - y * y)

        out._backward = bwd
        return out

    def log(self):
        out = Tensor(np.log(self.data), (self,))

        def bwd():
            self.grad += out.grad / self.data

        out._backward = bwd
        return out

    def minimum(self, cap: float):
        """Elementwise min(x, cap); subgradient 1 strictly below the cap."""
        out = Tensor(np.minimum(self.data, cap), (self,))

        def bwd():
            self.grad += out.grad * (self.data < cap)

        out._backward = bwd
        return out

    def clip_min(self, floor: float):
        """Elementwise max(x, floor); subgradient 1 strictly above the floor."""
        out = Tensor(np.maximum(self.data, floor), (self,))

        def bwd():
            self.grad += out.grad * (self.data > floor)

        out._backward = bwd
        return out

    def softmax(self):
        if self.data.ndim != 1:
            raise ShapeMismatch("softmax expects a vector")
        shifted = self.data - self.data.max()
        e = np.exp(shifted)
        y = e / e.sum()
        out = Tensor(y, (self,))

        def bwd():
            g = out.grad
            self.grad += y * (g - np.dot(g, y))

        out._backward = bwd
        return out


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def stack(rows: list[Tensor]) -> Tensor:
    """Stack T vectors of identical shape into a (T, ...) tensor."""
    out = Tensor(np.stack([r.data for r in rows]), tuple(rows))

    def bwd():
        for i, r in enumerate(rows):
            r.grad += out.grad[i]

    out._backward = bwd
    return out


def conv1d(x: Tensor, filters: Tensor, bias: Tensor, pad: int) -> Tensor:
    """Stride-1 cross-correlation with symmetric zero padding.

    x: (C_in, T), filters: (C_out, C_in, W), bias: (C_out,).
    Output: (C_out, T + 2*pad - W + 1).
    """
    if x.data.ndim != 2 or filters.data.ndim != 3:
        raise ShapeMismatch("conv1d expects x (C_in, T) and filters (C_out, C_in, W)")
    c_in, t = x.data.shape
    c_out, f_cin, width = filters.data.shape
    if f_cin != c_in or bias.data.shape != (c_out,):
        raise ShapeMismatch(
            f"conv1d shapes disagree: x {x.data.shape}, filters "
            f"{filters.data.shape}, bias {bias.data.shape}"
        )
    t_out = t + 2 * pad - width + 1
    if t_out < 1:
        raise ShapeMismatch(f"filter width {width} too wide for T={t}, pad={pad}")
    xp = np.pad(x.data, ((0, 0), (pad, pad)))
    y = np.broadcast_to(bias.data[:, None], (c_out, t_out)).copy()
    for w in range(width):
        y += filters.data[:, :, w] @ xp[:, w : w + t_out]
    out = Tensor(y, (x, filters, bias))

    def bwd():
        g = out.grad
        bias.grad += g.sum(axis=1)
        dxp = np.zeros_like(xp)
        for w in range(width):
            filters.grad[:, :, w] += g @ xp[:, w : w + t_out].T
            dxp[:, w : w + t_out] += filters.data[:, :, w].T @ g
        x.grad += dxp[:, pad : pad + t] if pad else dxp

    out._backward = bwd
    return out


def maxpool1d(x: Tensor, rate: int) -> Tensor:
    """Non-overlapping per-channel max over windows of width `rate`;
    a trailing remainder shorter than `rate` is dropped."""
    if x.data.ndim != 2:
        raise ShapeMismatch("maxpool1d expects (C, T)")
    if rate < 1:
        raise ShapeMismatch(f"pool rate must be >= 1, got {rate}")
    c, t = x.data.shape
    t_out = t // rate
    if t_out < 1:
        raise ShapeMismatch(f"pool rate {rate} exceeds T={t}")
    windows = x.data[:, : t_out * rate].reshape(c, t_out, rate)
    idx = windows.argmax(axis=2)
    out = Tensor(windows.max(axis=2), (x,))

    def bwd():
        cols = idx + np.arange(t_out)[None, :] * rate
        np.add.at(x.grad, (np.arange(c)[:, None], cols), out.grad)

    out._backward = bwd
    return out


def global_maxpool(x: Tensor) -> Tensor:
    """Columnwise max over the leading (time) axis: (T, H) -> (H,)."""
    if x.data.ndim != 2:
        raise ShapeMismatch("global_maxpool expects (T, H)")
    idx = x.data.argmax(axis=0)
    out = Tensor(x.data.max(axis=0), (x,))

    def bwd():
        np.add.at(x.grad, (idx, np.arange(x.data.shape[1])), out.grad)

    out._backward = bwd
    return out


def dropout(x: Tensor, p: float, train: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: identity in eval mode, mask-and-rescale in train."""
    if not train or p == 0.0:
        return x
    mask = (rng.random(x.data.shape) >= p) / (1.0 - p)
    out = Tensor(x.data * mask, (x,))

    def bwd():
        x.grad += out.grad * mask

    out._backward = bwd
    return out
