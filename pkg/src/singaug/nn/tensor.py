"""A small reverse-mode autodiff engine over 2-D numpy arrays.

Every value is a (rows, cols) matrix; scalars are (1, 1).  Operations build
a dynamic tape of parent links and backward closures; ``backward()`` walks
the tape in reverse topological order and accumulates gradients into
``grad``.  The dtype of the inputs (float32 for training, float64 for
gradient checking) flows through every operation unchanged.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        arr = np.asarray(data)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {arr.shape}")
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    # -- bookkeeping ------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on non-scalar shape {self.shape}")
        return float(self.data[0, 0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def _accumulate(self, g, owned=False):
        """Add ``g`` into the gradient; ``owned=True`` promises ``g`` is a
        fresh temporary that may be adopted without copying."""
        if self.grad is None:
            self.grad = g if owned else g.copy()
        else:
            self.grad += g

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.size != 1:
            raise ShapeError("backward() starts from a scalar loss")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))
        self._accumulate(np.ones_like(self.data), owned=True)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}, grad={self.grad is not None})"


def _as_const(x, dtype):
    """Plain numbers and arrays enter the graph as non-differentiable data."""
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    return Tensor(arr)


def _unbroadcast(g, shape):
    """Reduce a gradient back to the broadcast source's shape."""
    if g.shape == shape:
        return g
    out = g
    if shape[0] == 1 and g.shape[0] != 1:
        out = out.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] != 1:
        out = out.sum(axis=1, keepdims=True)
    if out.shape != shape:
        raise ShapeError(f"cannot reduce grad {g.shape} to {shape}")
    return out


def _binary_shapes_ok(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    return (ra == rb or ra == 1 or rb == 1) and (ca == cb or ca == 1 or cb == 1)


def add(a, b):
    a = a if isinstance(a, Tensor) else _as_const(a, b.dtype)
    b = b if isinstance(b, Tensor) else _as_const(b, a.dtype)
    if not _binary_shapes_ok(a, b):
        raise ShapeError(f"cannot add {a.shape} and {b.shape}")
    out = Tensor(a.data + b.data, _parents=(a, b))

    def bwd(g):
        if a.requires_grad:
            ga = _unbroadcast(g, a.shape)
            a._accumulate(ga, owned=ga is not g)
        if b.requires_grad:
            gb = _unbroadcast(g, b.shape)
            b._accumulate(gb, owned=gb is not g)

    out._backward = bwd
    return out


def sub(a, b):
    a = a if isinstance(a, Tensor) else _as_const(a, b.dtype)
    b = b if isinstance(b, Tensor) else _as_const(b, a.dtype)
    if not _binary_shapes_ok(a, b):
        raise ShapeError(f"cannot subtract {a.shape} and {b.shape}")
    out = Tensor(a.data - b.data, _parents=(a, b))

    def bwd(g):
        if a.requires_grad:
            ga = _unbroadcast(g, a.shape)
            a._accumulate(ga, owned=ga is not g)
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.shape), owned=True)

    out._backward = bwd
    return out


def mul(a, b):
    if isinstance(b, (int, float)) and isinstance(a, Tensor):
        s = float(b)
        out = Tensor(a.data * s, _parents=(a,))

        def bwd_scalar(g):
            if a.requires_grad:
                a._accumulate(g * s, owned=True)

        out._backward = bwd_scalar
        return out
    a = a if isinstance(a, Tensor) else _as_const(a, b.dtype)
    b = b if isinstance(b, Tensor) else _as_const(b, a.dtype)
    if not _binary_shapes_ok(a, b):
        raise ShapeError(f"cannot multiply {a.shape} and {b.shape}")
    out = Tensor(a.data * b.data, _parents=(a, b))

    def bwd(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape), owned=True)
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape), owned=True)

    out._backward = bwd
    return out


def matmul(a: Tensor, b: Tensor):
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul mismatch: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data, _parents=(a, b))

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T, owned=True)
        if b.requires_grad:
            b._accumulate(a.data.T @ g, owned=True)

    out._backward = bwd
    return out


def transpose(a: Tensor):
    out = Tensor(a.data.T.copy(), _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g.T)

    out._backward = bwd
    return out


def relu(a: Tensor):
    mask = a.data > 0
    out = Tensor(np.where(mask, a.data, 0), _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * mask, owned=True)

    out._backward = bwd
    return out


def tanh(a: Tensor):
    y = np.tanh(a.data)
    out = Tensor(y, _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * (1.0 - y * y), owned=True)

    out._backward = bwd
    return out


def abs_(a: Tensor):
    out = Tensor(np.abs(a.data), _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * np.sign(a.data), owned=True)

    out._backward = bwd
    return out


def mean_all(a: Tensor):
    out = Tensor(np.array([[a.data.mean()]], dtype=a.dtype), _parents=(a,))
    inv = 1.0 / a.data.size

    def bwd(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.data, g[0, 0] * inv), owned=True)

    out._backward = bwd
    return out


def softmax_rows(a: Tensor):
    z = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)
    out = Tensor(y, _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            dot = (g * y).sum(axis=1, keepdims=True)
            a._accumulate(y * (g - dot), owned=True)

    out._backward = bwd
    return out


def log_softmax_rows(a: Tensor):
    z = a.data - a.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    y = z - lse
    out = Tensor(y, _parents=(a,))
    sm = np.exp(y)

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g - sm * g.sum(axis=1, keepdims=True), owned=True)

    out._backward = bwd
    return out


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5):
    """Row-wise normalization with learned gain/bias (both (1, D))."""
    if gain.shape != (1, a.shape[1]) or bias.shape != (1, a.shape[1]):
        raise ShapeError("gain/bias must be (1, D) rows")
    mu = a.data.mean(axis=1, keepdims=True)
    xc = a.data - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(xhat * gain.data + bias.data, _parents=(a, gain, bias))
    d = a.shape[1]

    def bwd(g):
        if gain.requires_grad:
            gain._accumulate((g * xhat).sum(axis=0, keepdims=True), owned=True)
        if bias.requires_grad:
            bias._accumulate(g.sum(axis=0, keepdims=True), owned=True)
        if a.requires_grad:
            gx = g * gain.data
            term2 = gx.mean(axis=1, keepdims=True)
            term3 = xhat * (gx * xhat).mean(axis=1, keepdims=True)
            a._accumulate(inv * (gx - term2 - term3), owned=True)

    out._backward = bwd
    return out


def embedding(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ShapeError("ids must be a 1-D index vector")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        from ..errors import VocabularyError

        raise VocabularyError(
            f"id out of range [0, {table.shape[0]}): {ids.min()}..{ids.max()}"
        )
    out = Tensor(table.data[ids], _parents=(table,))

    def bwd(g):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, ids, g)

    out._backward = bwd
    return out


def repeat_rows(a: Tensor, counts) -> Tensor:
    """Length regulation: row t' repeated counts[t'] times, in order."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape[0] != a.shape[0]:
        raise ShapeError(
            f"{counts.shape[0]} counts for {a.shape[0]} rows"
        )
    if np.any(counts < 1):
        raise ShapeError("every row needs a positive repeat count")
    out = Tensor(np.repeat(a.data, counts, axis=0), _parents=(a,))
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])

    def bwd(g):
        if a.requires_grad:
            a._accumulate(np.add.reduceat(g, starts, axis=0), owned=True)

    out._backward = bwd
    return out


def pad_rows(a: Tensor, total_rows: int) -> Tensor:
    rows = a.shape[0]
    if total_rows < rows:
        raise ShapeError("cannot pad to fewer rows")
    if total_rows == rows:
        return a
    padded = np.zeros((total_rows, a.shape[1]), dtype=a.dtype)
    padded[:rows] = a.data
    out = Tensor(padded, _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g[:rows])

    out._backward = bwd
    return out


def slice_rows(a: Tensor, start: int, stop: int) -> Tensor:
    if not 0 <= start < stop <= a.shape[0]:
        raise ShapeError(f"bad row slice [{start}:{stop}] of {a.shape}")
    out = Tensor(a.data[start:stop].copy(), _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[start:stop] = g
            a._accumulate(full, owned=True)

    out._backward = bwd
    return out


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if not 0 <= start < stop <= a.shape[1]:
        raise ShapeError(f"bad column slice [{start}:{stop}] of {a.shape}")
    out = Tensor(a.data[:, start:stop].copy(), _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[:, start:stop] = g
            a._accumulate(full, owned=True)

    out._backward = bwd
    return out


def concat_cols(parts: list[Tensor]) -> Tensor:
    rows = parts[0].shape[0]
    if any(p.shape[0] != rows for p in parts):
        raise ShapeError("column concat needs equal row counts")
    out = Tensor(np.concatenate([p.data for p in parts], axis=1), _parents=tuple(parts))
    widths = [p.shape[1] for p in parts]
    offsets = np.concatenate([[0], np.cumsum(widths)])

    def bwd(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                p._accumulate(g[:, lo:hi])

    out._backward = bwd
    return out


def take_per_row(a: Tensor, idx) -> Tensor:
    """out[t, 0] = a[t, idx[t]]; the building block of cross-entropy."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.shape[0] != a.shape[0]:
        raise ShapeError("one index per row required")
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[1]):
        from ..errors import VocabularyError

        raise VocabularyError(f"label out of range [0, {a.shape[1]})")
    rows = np.arange(a.shape[0])
    out = Tensor(a.data[rows, idx].reshape(-1, 1), _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            full[rows, idx] = g[:, 0]
            a._accumulate(full, owned=True)

    out._backward = bwd
    return out


def im2col(a: Tensor, kernel: int) -> Tensor:
    """Unfold rows with a centered window: output row t is the concatenation
    of rows t-k//2 .. t+k//2 (zero-padded at the edges), giving (T, k*D)."""
    if kernel < 1 or kernel % 2 == 0:
        raise ShapeError("kernel must be odd and positive")
    t_rows, d = a.shape
    half = kernel // 2
    padded = np.zeros((t_rows + 2 * half, d), dtype=a.dtype)
    padded[half : half + t_rows] = a.data
    cols = np.concatenate([padded[j : j + t_rows] for j in range(kernel)], axis=1)
    out = Tensor(cols, _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            acc = np.zeros_like(padded)
            for j in range(kernel):
                acc[j : j + t_rows] += g[:, j * d : (j + 1) * d]
            a._accumulate(acc[half : half + t_rows], owned=True)

    out._backward = bwd
    return out


def mul_const(a: Tensor, arr: np.ndarray) -> Tensor:
    """Elementwise product with a constant mask (dropout etc.)."""
    out = Tensor(a.data * arr, _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g * arr, owned=True)

    out._backward = bwd
    return out


def add_const(a: Tensor, arr: np.ndarray) -> Tensor:
    """Elementwise sum with a constant (positional encodings etc.)."""
    out = Tensor(a.data + arr.astype(a.dtype, copy=False), _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            a._accumulate(g)

    out._backward = bwd
    return out


def dropout(a: Tensor, p: float, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when p == 0 or no generator is supplied."""
    if p < 0 or p >= 1:
        from ..errors import ParameterError

        raise ParameterError(f"dropout rate must lie in [0, 1), got {p}")
    if p == 0.0 or rng is None:
        return a
    mask = (rng.random(a.shape) >= p).astype(a.dtype) / (1.0 - p)
    return mul_const(a, mask)
