"""Dense tensors with reverse-mode automatic differentiation.

A ``Tensor`` wraps a numpy array and records the operations applied to it on
an implicit tape (each result keeps references to its parents plus a backward
closure). Calling :func:`backward` on a scalar result walks the recorded
graph in reverse topological order and accumulates ``d loss / d tensor`` into
every ``requires_grad`` tensor's ``grad`` slot.

Only the operations the model needs are implemented, and broadcasting is
restricted to scalars and trailing-row vectors so every backward rule stays
small and auditable. Inputs are never mutated; gradients accumulate
additively (running backward twice without zeroing doubles every grad).
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf, expit

from .errors import ContractError, DimensionError

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class Tensor:
    """N-dimensional array with an attached gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad=False, dtype=np.float32, _parents=(), _op="leaf"):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=dtype)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = _parents
        self._backward = None
        self.op = _op

    # -- basic introspection ------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    def item(self):
        return float(self.data)

    # -- grad bookkeeping ---------------------------------------------------

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g.astype(self.data.dtype, copy=False)

    # -- operator sugar -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _result(data, parents, op):
    rg = any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=rg, dtype=data.dtype, _parents=tuple(parents), _op=op)
    return out


def _as_tensor(x, like):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.dtype))


def _check_broadcast(a, b):
    """Allow equal shapes, scalar, or trailing-row vector broadcast only."""
    if a.shape == b.shape:
        return
    if b.ndim == 0 or a.ndim == 0:
        return
    if b.ndim == 1 and a.ndim >= 1 and a.shape[-1] == b.shape[0]:
        return
    if a.ndim == 1 and b.ndim >= 1 and b.shape[-1] == a.shape[0]:
        return
    raise DimensionError(f"shapes {a.shape} and {b.shape} are not broadcast-compatible "
                         "(only scalar and trailing-row broadcast supported)")


def _reduce_to_shape(g, shape):
    """Sum gradient g down to `shape` (undo scalar / row broadcast)."""
    if g.shape == shape:
        return g
    if shape == ():
        return g.sum()
    # trailing-row vector: sum over all leading axes
    extra = g.ndim - len(shape)
    axes = tuple(range(extra))
    out = g.sum(axis=axes) if axes else g
    if out.shape != shape:
        out = out.reshape(shape)
    return out


# -- elementwise ------------------------------------------------------------

def add(a, b):
    a = a if isinstance(a, Tensor) else Tensor(np.asarray(a))
    b = _as_tensor(b, a)
    _check_broadcast(a.data, b.data)
    out = _result(a.data + b.data, (a, b), "add")

    def bw(g):
        if a.requires_grad:
            a._accumulate(_reduce_to_shape(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_reduce_to_shape(g, b.data.shape))

    out._backward = bw
    return out


def mul(a, b):
    a = a if isinstance(a, Tensor) else Tensor(np.asarray(a))
    b = _as_tensor(b, a)
    _check_broadcast(a.data, b.data)
    out = _result(a.data * b.data, (a, b), "mul")

    def bw(g):
        if a.requires_grad:
            a._accumulate(_reduce_to_shape(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_reduce_to_shape(g * a.data, b.data.shape))

    out._backward = bw
    return out


def scale(a, c):
    """Multiply by a python scalar constant."""
    c = float(c)
    out = _result(a.data * np.asarray(c, dtype=a.dtype), (a,), "scale")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * c)

    out._backward = bw
    return out


def sigmoid(a):
    y = expit(a.data)
    out = _result(y.astype(a.dtype, copy=False), (a,), "sigmoid")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * y * (1.0 - y))

    out._backward = bw
    return out


def relu(a):
    out = _result(np.maximum(a.data, 0), (a,), "relu")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * (a.data > 0))

    out._backward = bw
    return out


def gelu(a):
    """Exact (erf-based) GELU."""
    x = a.data
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    out = _result((x * cdf).astype(a.dtype, copy=False), (a,), "gelu")

    def bw(g):
        if a.requires_grad:
            pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
            a._accumulate(g * (cdf + x * pdf))

    out._backward = bw
    return out


def tanh(a):
    y = np.tanh(a.data)
    out = _result(y, (a,), "tanh")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * (1.0 - y * y))

    out._backward = bw
    return out


def dropout(a, p, rng):
    """Recorded mask multiply; backward is exact for the sampled mask."""
    if not 0.0 <= p < 1.0:
        raise ContractError(f"dropout probability {p} outside [0, 1)")
    if p == 0.0:
        return a
    mask = (rng.random(a.data.shape) >= p).astype(a.dtype) / np.asarray(1.0 - p, dtype=a.dtype)
    out = _result(a.data * mask, (a,), "dropout")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * mask)

    out._backward = bw
    return out


# -- linear algebra ---------------------------------------------------------

def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError("matmul requires 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions disagree: {a.shape} @ {b.shape}")
    out = _result(a.data @ b.data, (a, b), "matmul")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    out._backward = bw
    return out


def transpose(a):
    if a.data.ndim != 2:
        raise DimensionError("transpose requires a 2-D tensor")
    out = _result(a.data.T.copy(), (a,), "transpose")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g.T)

    out._backward = bw
    return out


def gather_rows(a, idx):
    """Select rows of a 2-D tensor; backward scatter-adds."""
    idx = np.asarray(idx, dtype=np.int64)
    if a.data.ndim != 2:
        raise DimensionError("gather_rows requires a 2-D tensor")
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise ContractError(f"row index out of range for shape {a.shape}")
    out = _result(a.data[idx], (a,), "gather_rows")

    def bw(g):
        if a.requires_grad:
            ga = np.zeros_like(a.data)
            np.add.at(ga, idx, g)
            a._accumulate(ga)

    out._backward = bw
    return out


def slice_cols(a, start, stop):
    if a.data.ndim != 2:
        raise DimensionError("slice_cols requires a 2-D tensor")
    out = _result(a.data[:, start:stop].copy(), (a,), "slice_cols")

    def bw(g):
        if a.requires_grad:
            ga = np.zeros_like(a.data)
            ga[:, start:stop] = g
            a._accumulate(ga)

    out._backward = bw
    return out


def concat_cols(tensors):
    """Concatenate 2-D tensors along the last axis."""
    if not tensors:
        raise ContractError("concat_cols needs at least one tensor")
    rows = tensors[0].shape[0]
    for t in tensors:
        if t.data.ndim != 2 or t.shape[0] != rows:
            raise DimensionError("concat_cols operands must be 2-D with equal row counts")
    out = _result(np.concatenate([t.data for t in tensors], axis=1), tuple(tensors), "concat_cols")
    widths = [t.shape[1] for t in tensors]

    def bw(g):
        off = 0
        for t, w in zip(tensors, widths):
            if t.requires_grad:
                t._accumulate(g[:, off:off + w])
            off += w

    out._backward = bw
    return out


# -- normalization ----------------------------------------------------------

def layer_norm(x, gamma, beta, eps=1e-5):
    """Per-row normalization over the last axis, then affine."""
    d = x.shape[-1] if x.data.ndim else 0
    if d == 0:
        raise DimensionError("layer_norm needs a non-empty last dimension")
    if gamma.shape != (d,) or beta.shape != (d,):
        raise DimensionError(f"gamma/beta must have shape ({d},)")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = _result((xhat * gamma.data + beta.data).astype(x.dtype, copy=False),
                  (x, gamma, beta), "layer_norm")

    def bw(g):
        if gamma.requires_grad:
            gamma._accumulate((g * xhat).reshape(-1, d).sum(axis=0))
        if beta.requires_grad:
            beta._accumulate(g.reshape(-1, d).sum(axis=0))
        if x.requires_grad:
            gg = g * gamma.data
            m1 = gg.mean(axis=-1, keepdims=True)
            m2 = (gg * xhat).mean(axis=-1, keepdims=True)
            x._accumulate((gg - m1 - xhat * m2) * inv)

    out._backward = bw
    return out


def softmax_rows(x):
    """Row softmax, computed shift-invariantly."""
    z = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    out = _result(y.astype(x.dtype, copy=False), (x,), "softmax_rows")

    def bw(g):
        if x.requires_grad:
            dot = (g * y).sum(axis=-1, keepdims=True)
            x._accumulate(y * (g - dot))

    out._backward = bw
    return out


# -- reductions and losses --------------------------------------------------

def sum_all(a):
    out = _result(np.asarray(a.data.sum(), dtype=a.dtype), (a,), "sum")

    def bw(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.data, 1.0) * g)

    out._backward = bw
    return out


def mean_all(a):
    n = a.data.size
    out = _result(np.asarray(a.data.mean(), dtype=a.dtype), (a,), "mean")

    def bw(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.data, 1.0 / n) * g)

    out._backward = bw
    return out


def bce_with_logits(logits, targets, reduction="sum"):
    """Binary cross-entropy computed stably from logits.

    Uses max(x,0) - x*y + log1p(exp(-|x|)) elementwise, which is finite for
    any finite logit. ``reduction`` is "sum" or "mean" over all elements.
    """
    y = np.asarray(targets, dtype=logits.dtype)
    if y.shape != logits.shape:
        raise DimensionError(f"targets shape {y.shape} != logits shape {logits.shape}")
    if reduction not in ("sum", "mean"):
        raise ContractError(f"unknown reduction {reduction!r}")
    x = logits.data
    elem = np.maximum(x, 0) - x * y + np.log1p(np.exp(-np.abs(x)))
    total = elem.sum() if reduction == "sum" else elem.mean()
    out = _result(np.asarray(total, dtype=logits.dtype), (logits,), "bce_with_logits")

    def bw(g):
        if logits.requires_grad:
            d = (expit(x) - y).astype(x.dtype, copy=False)
            if reduction == "mean":
                d = d / x.size
            logits._accumulate(d * g)

    out._backward = bw
    return out


# -- backward pass ----------------------------------------------------------

def backward(loss):
    """Populate grads of every requires_grad tensor reachable from `loss`.

    Grads accumulate additively across uses and across repeated calls.
    """
    if loss.data.ndim != 0:
        raise ContractError(f"backward requires a scalar loss, got shape {loss.shape}")

    topo = _toposort(loss)
    loss._accumulate(np.asarray(1.0, dtype=loss.dtype))
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def _toposort(root):
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    return order


def graph_nodes(root):
    """All graph nodes reachable from `root` (for inspection, e.g. relu kinks)."""
    out = []
    seen = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        out.append(node)
        stack.extend(node._parents)
    return out
