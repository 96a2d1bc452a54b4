"""Trainable building blocks: linear/conv layers, layer norm, self-attention
blocks, and the postnet.  Weights initialize as uniform(+-sqrt(1/fan_in)),
biases as zeros, embeddings as normal(0, 0.02), all driven by a seeded
generator so model construction is reproducible.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from . import tensor as T
from .tensor import Tensor


class Module:
    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._children: dict[str, Module] = {}

    def param(self, name: str, data: np.ndarray) -> Tensor:
        t = Tensor(data, requires_grad=True)
        self._params[name] = t
        return t

    def child(self, name: str, module: "Module") -> "Module":
        self._children[name] = module
        return module

    def parameters(self) -> dict[str, Tensor]:
        out = dict(self._params)
        for child_name, child in self._children.items():
            for name, p in child.parameters().items():
                out[f"{child_name}.{name}"] = p
        return out

    def zero_grad(self):
        for p in self.parameters().values():
            p.zero_grad()

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.parameters().values())


def _uniform_init(rng, fan_in, shape, dtype):
    bound = float(np.sqrt(1.0 / fan_in))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Linear(Module):
    def __init__(self, d_in, d_out, rng, dtype=np.float32):
        super().__init__()
        self.weight = self.param("weight", _uniform_init(rng, d_in, (d_in, d_out), dtype))
        self.bias = self.param("bias", np.zeros((1, d_out), dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return T.matmul(x, self.weight) + self.bias


class Embedding(Module):
    def __init__(self, n_rows, d, rng, dtype=np.float32):
        super().__init__()
        self.table = self.param(
            "table", (0.02 * rng.standard_normal((n_rows, d))).astype(dtype)
        )

    def __call__(self, ids) -> Tensor:
        return T.embedding(self.table, ids)


class LayerNorm(Module):
    def __init__(self, d, dtype=np.float32):
        super().__init__()
        self.gain = self.param("gain", np.ones((1, d), dtype=dtype))
        self.bias = self.param("bias", np.zeros((1, d), dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.gain, self.bias)


class Conv1d(Module):
    """Same-padded 1-D convolution over the time axis via row unfolding."""

    def __init__(self, d_in, d_out, kernel, rng, dtype=np.float32):
        super().__init__()
        self.kernel = kernel
        fan_in = kernel * d_in
        self.weight = self.param("weight", _uniform_init(rng, fan_in, (fan_in, d_out), dtype))
        self.bias = self.param("bias", np.zeros((1, d_out), dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return T.matmul(T.im2col(x, self.kernel), self.weight) + self.bias


class MultiHeadSelfAttention(Module):
    def __init__(self, d, n_heads, rng, dtype=np.float32):
        super().__init__()
        if d % n_heads != 0:
            raise ParameterError(f"width {d} not divisible by {n_heads} heads")
        self.n_heads = n_heads
        self.d_head = d // n_heads
        self.wq = self.child("wq", Linear(d, d, rng, dtype))
        self.wk = self.child("wk", Linear(d, d, rng, dtype))
        self.wv = self.child("wv", Linear(d, d, rng, dtype))
        self.wo = self.child("wo", Linear(d, d, rng, dtype))

    def __call__(self, x: Tensor) -> Tensor:
        q, k, v = self.wq(x), self.wk(x), self.wv(x)
        scale = 1.0 / float(np.sqrt(self.d_head))
        heads = []
        for h in range(self.n_heads):
            lo, hi = h * self.d_head, (h + 1) * self.d_head
            qh = T.slice_cols(q, lo, hi)
            kh = T.slice_cols(k, lo, hi)
            vh = T.slice_cols(v, lo, hi)
            scores = T.matmul(qh, T.transpose(kh)) * scale
            heads.append(T.matmul(T.softmax_rows(scores), vh))
        return self.wo(T.concat_cols(heads))


class FeedForward(Module):
    """Pointwise (1x1-filter) two-layer feed-forward with ReLU."""

    def __init__(self, d, hidden, dropout, rng, dtype=np.float32):
        super().__init__()
        self.dropout = dropout
        self.w1 = self.child("w1", Linear(d, hidden, rng, dtype))
        self.w2 = self.child("w2", Linear(hidden, d, rng, dtype))

    def __call__(self, x: Tensor, rng=None) -> Tensor:
        h = T.relu(self.w1(x))
        h = T.dropout(h, self.dropout, rng)
        return self.w2(h)


class TransformerBlock(Module):
    """Self-attention + feed-forward, each with residual and post-layer-norm."""

    def __init__(self, d, n_heads, ff_hidden, dropout, rng, dtype=np.float32):
        super().__init__()
        self.dropout = dropout
        self.attn = self.child("attn", MultiHeadSelfAttention(d, n_heads, rng, dtype))
        self.norm1 = self.child("norm1", LayerNorm(d, dtype))
        self.ff = self.child("ff", FeedForward(d, ff_hidden, dropout, rng, dtype))
        self.norm2 = self.child("norm2", LayerNorm(d, dtype))

    def __call__(self, x: Tensor, rng=None) -> Tensor:
        x = self.norm1(x + T.dropout(self.attn(x), self.dropout, rng))
        x = self.norm2(x + T.dropout(self.ff(x, rng), self.dropout, rng))
        return x


class Postnet(Module):
    """Residual refinement: tanh convolutions then a linear projection."""

    def __init__(self, d_a, channels, kernel, n_tanh_layers, dropout, rng, dtype=np.float32):
        super().__init__()
        self.dropout = dropout
        self.convs = []
        d_in = d_a
        for i in range(n_tanh_layers):
            conv = self.child(f"conv{i}", Conv1d(d_in, channels, kernel, rng, dtype))
            self.convs.append(conv)
            d_in = channels
        self.proj = self.child("proj", Conv1d(d_in, d_a, kernel, rng, dtype))

    def __call__(self, x: Tensor, rng=None) -> Tensor:
        h = x
        for conv in self.convs:
            h = T.dropout(T.tanh(conv(h)), self.dropout, rng)
        return self.proj(h)
