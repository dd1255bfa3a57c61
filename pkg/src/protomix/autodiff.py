"""Dense float64 tensors with reverse-mode automatic differentiation.

Every differentiable quantity in the package is a :class:`Tensor`.  Operations
execute eagerly on numpy arrays and record themselves on an implicit tape:
each result remembers its parent tensors, a backward closure, and a globally
increasing creation index.  :func:`backward` replays the tape in reverse
creation order, which is a valid topological order by construction and fixes
the gradient summation order, so repeated runs are bit-identical.

Design constraints:

- float64 only; gradient checks at 1e-4 relative tolerance are not reliable
  in float32.
- Non-finite values are an error state, never a silent result: every op
  validates its output and :func:`backward` validates every gradient.
- Anything exponentiating similarities goes through the stabilized
  `logsumexp_rows` / `weighted_logsumexp_rows` ops, never a bare exp/log.

A tensor graph is confined to one thread; independent graphs may run in
parallel.
"""

import itertools

import numpy as np

from . import backend
from .errors import ContractError, NumericError, ShapeError

_CREATION_COUNTER = itertools.count()


class Tensor:
    """A dense float64 array plus gradient bookkeeping.

    Attributes:
        data: the values, a numpy float64 array (row-major).
        requires_grad: whether backward should produce a gradient for this
            tensor (True for trainable leaves, inherited by results).
        grad: accumulated gradient, same shape as data; None until backward.
    """

    __slots__ = ("data", "requires_grad", "grad", "op", "_parents", "_backward", "_order")

    def __init__(self, data, requires_grad=False, op=None, parents=(), backward=None):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.op = op
        self._parents = parents
        self._backward = backward
        self._order = next(_CREATION_COUNTER)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        tag = f", op={self.op!r}" if self.op else ""
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad}{tag})"

    # Operator sugar; scalars are promoted to constant tensors.
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return subtract(self, _as_tensor(other))

    def __rsub__(self, other):
        return subtract(_as_tensor(other), self)

    def __mul__(self, other):
        return multiply(self, _as_tensor(other))

    def __rmul__(self, other):
        return multiply(_as_tensor(other), self)

    def __neg__(self):
        return multiply(self, _as_tensor(-1.0))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def _as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _check_finite(arr, op):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values produced by op '{op}'")


def _result(data, op, parents, backward_fn):
    """Wrap an op output, validating finiteness and wiring the tape."""
    data = np.asarray(data, dtype=np.float64)
    _check_finite(data, op)
    needs = any(p.requires_grad for p in parents)
    if needs:
        return Tensor(data, requires_grad=True, op=op, parents=parents, backward=backward_fn)
    return Tensor(data, op=op)


def _accumulate(parent, grad):
    if not parent.requires_grad:
        return
    grad = np.asarray(grad, dtype=np.float64)
    if parent.grad is None:
        parent.grad = np.zeros_like(parent.data)
    parent.grad += grad


def backward(terminal):
    """Backpropagate from a scalar tensor through its recorded graph.

    Gradients of every `requires_grad` tensor reachable from `terminal`
    accumulate additively (fan-out sums).  Visits each node exactly once, in
    reverse creation order.
    """
    if terminal.data.size != 1:
        raise ContractError(
            f"backward requires a scalar terminal, got shape {terminal.data.shape}"
        )
    nodes = []
    seen = set()
    stack = [terminal]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        nodes.append(node)
        stack.extend(node._parents)
    nodes.sort(key=lambda n: n._order)

    terminal.grad = np.ones_like(terminal.data)
    for node in reversed(nodes):
        if node._backward is None or node.grad is None:
            continue
        if not node.requires_grad:
            continue
        node._backward(node.grad)
    for node in nodes:
        if node.grad is not None and not np.all(np.isfinite(node.grad)):
            raise NumericError(f"non-finite gradient at op '{node.op}'")


def _unbroadcast(grad, shape):
    """Sum a broadcast gradient back down to `shape`."""
    extra = grad.ndim - len(shape)
    for _ in range(extra):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(a, b, op):
    try:
        np.broadcast_shapes(a.data.shape, b.data.shape)
    except ValueError:
        raise ShapeError(
            f"op '{op}': cannot broadcast shapes {a.data.shape} and {b.data.shape}"
        ) from None


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "add")

    def bwd(gout):
        _accumulate(a, _unbroadcast(gout, a.data.shape))
        _accumulate(b, _unbroadcast(gout, b.data.shape))

    return _result(a.data + b.data, "add", (a, b), bwd)


def subtract(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "subtract")

    def bwd(gout):
        _accumulate(a, _unbroadcast(gout, a.data.shape))
        _accumulate(b, _unbroadcast(-gout, b.data.shape))

    return _result(a.data - b.data, "subtract", (a, b), bwd)


def multiply(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "multiply")

    def bwd(gout):
        _accumulate(a, _unbroadcast(gout * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(gout * a.data, b.data.shape))

    return _result(a.data * b.data, "multiply", (a, b), bwd)


def matmul(a, b):
    """Matrix product: (R,K)@(K,C) -> (R,C) or (R,K)@(K,) -> (R,)."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim not in (1, 2):
        raise ShapeError(
            f"op 'matmul': unsupported ranks {a.data.ndim} and {b.data.ndim}"
        )
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(
            f"op 'matmul': inner dimensions differ ({a.data.shape} @ {b.data.shape})"
        )

    def bwd(gout):
        if b.data.ndim == 2:
            _accumulate(a, gout @ b.data.T)
            _accumulate(b, a.data.T @ gout)
        else:
            _accumulate(a, np.outer(gout, b.data))
            _accumulate(b, a.data.T @ gout)

    return _result(a.data @ b.data, "matmul", (a, b), bwd)


def reshape(a, shape):
    a = _as_tensor(a)
    old = a.data.shape

    def bwd(gout):
        _accumulate(a, gout.reshape(old))

    return _result(a.data.reshape(shape), "reshape", (a,), bwd)


def getitem(a, key):
    """Basic indexing (ints/slices); gradient scatters back additively."""
    a = _as_tensor(a)

    def bwd(gout):
        full = np.zeros_like(a.data)
        np.add.at(full, key, gout)
        _accumulate(a, full)

    return _result(a.data[key], "getitem", (a,), bwd)


def sum_(a, axis=None, keepdims=False):
    a = _as_tensor(a)

    def bwd(gout):
        g = gout
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape).copy())

    return _result(a.data.sum(axis=axis, keepdims=keepdims), "sum", (a,), bwd)


def mean(a, axis=None, keepdims=False):
    a = _as_tensor(a)
    if axis is None:
        count = a.data.size
    else:
        count = a.data.shape[axis]

    def bwd(gout):
        g = gout
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape) / count)

    return _result(a.data.mean(axis=axis, keepdims=keepdims), "mean", (a,), bwd)


def exp(a):
    a = _as_tensor(a)
    out_data = np.exp(a.data)

    def bwd(gout):
        _accumulate(a, gout * out_data)

    return _result(out_data, "exp", (a,), bwd)


def log(a):
    a = _as_tensor(a)

    def bwd(gout):
        _accumulate(a, gout / a.data)

    return _result(np.log(a.data), "log", (a,), bwd)


def tanh(a):
    a = _as_tensor(a)
    out_data = backend.ops.tanh(a.data)

    def bwd(gout):
        _accumulate(a, backend.ops.tanh_grad(out_data, gout))

    return _result(out_data, "tanh", (a,), bwd)


def relu(a):
    a = _as_tensor(a)

    def bwd(gout):
        _accumulate(a, backend.ops.relu_grad(a.data, gout))

    return _result(backend.ops.relu(a.data), "relu", (a,), bwd)


def l2_norm(a, axis=None):
    """Euclidean norm over the whole tensor (axis=None) or along one axis."""
    a = _as_tensor(a)
    norms = np.sqrt(np.sum(a.data * a.data, axis=axis))

    def bwd(gout):
        if axis is None:
            _accumulate(a, gout * a.data / norms)
        else:
            g = np.expand_dims(gout, axis)
            n = np.expand_dims(norms, axis)
            _accumulate(a, g * a.data / n)

    return _result(norms, "l2_norm", (a,), bwd)


def softmax_rows(a):
    """Row-wise softmax of a 2-D tensor (stabilized by max subtraction)."""
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"op 'softmax_rows': expected 2-D input, got {a.data.shape}")
    y = backend.ops.row_softmax(a.data)

    def bwd(gout):
        _accumulate(a, backend.ops.row_softmax_grad(y, gout))

    return _result(y, "softmax_rows", (a,), bwd)


def logsumexp_rows(a):
    """Row-wise log(sum(exp(.))) of a 2-D tensor, overflow-safe."""
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"op 'logsumexp_rows': expected 2-D input, got {a.data.shape}")
    out_data = backend.ops.row_logsumexp(a.data)

    def bwd(gout):
        _accumulate(a, backend.ops.row_logsumexp_grad(a.data, out_data, gout))

    return _result(out_data, "logsumexp_rows", (a,), bwd)


def weighted_logsumexp_rows(a, weights):
    """Row-wise log(sum(w * exp(.))) for constant non-negative weights.

    Stabilized over the support of each weight row; every row must carry
    positive mass (otherwise the result is log 0).
    """
    a = _as_tensor(a)
    w = np.asarray(weights, dtype=np.float64)
    if a.data.ndim != 2 or w.shape != a.data.shape:
        raise ShapeError(
            f"op 'weighted_logsumexp_rows': weights {w.shape} must match input "
            f"{a.data.shape}"
        )
    if np.any(w < 0.0):
        raise ContractError("op 'weighted_logsumexp_rows': weights must be non-negative")
    if np.any(np.all(w <= 0.0, axis=1)):
        raise ContractError(
            "op 'weighted_logsumexp_rows': a weight row has no positive mass (log 0)"
        )
    out_data = backend.ops.row_weighted_logsumexp(a.data, w)

    def bwd(gout):
        _accumulate(a, backend.ops.row_weighted_logsumexp_grad(a.data, w, out_data, gout))

    return _result(out_data, "weighted_logsumexp_rows", (a,), bwd)


def diagonal(a):
    """Diagonal of a square 2-D tensor."""
    a = _as_tensor(a)
    if a.data.ndim != 2 or a.data.shape[0] != a.data.shape[1]:
        raise ShapeError(f"op 'diagonal': expected square matrix, got {a.data.shape}")
    n = a.data.shape[0]
    idx = np.arange(n)

    def bwd(gout):
        full = np.zeros_like(a.data)
        full[idx, idx] = gout
        _accumulate(a, full)

    return _result(a.data[idx, idx], "diagonal", (a,), bwd)


def gather_columns(a, columns):
    """Pick one entry per row of a 2-D tensor: out[i] = a[i, columns[i]]."""
    a = _as_tensor(a)
    cols = np.asarray(columns, dtype=np.intp)
    if a.data.ndim != 2 or cols.shape != (a.data.shape[0],):
        raise ShapeError(
            f"op 'gather_columns': need one column index per row of {a.data.shape}"
        )
    if np.any(cols < 0) or np.any(cols >= a.data.shape[1]):
        raise ContractError("op 'gather_columns': column index out of range")
    rows = np.arange(a.data.shape[0])

    def bwd(gout):
        full = np.zeros_like(a.data)
        full[rows, cols] = gout
        _accumulate(a, full)

    return _result(a.data[rows, cols], "gather_columns", (a,), bwd)


def cosine_rows(a, b):
    """Pairwise cosine similarity between rows: out[j,k] = cos(a_j, b_k).

    Raises NumericError naming the offending row when either side contains a
    zero-norm vector (cosine undefined).
    """
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[1]:
        raise ShapeError(
            f"op 'cosine_rows': incompatible shapes {a.data.shape} and {b.data.shape}"
        )
    an = np.sqrt(np.sum(a.data * a.data, axis=1))
    bn = np.sqrt(np.sum(b.data * b.data, axis=1))
    for name, norms in (("left", an), ("right", bn)):
        zero = np.nonzero(norms == 0.0)[0]
        if zero.size:
            raise NumericError(
                f"op 'cosine_rows': zero-norm {name} row {int(zero[0])} "
                "(cosine undefined)"
            )
    ah = a.data / an[:, None]
    bh = b.data / bn[:, None]
    cos = ah @ bh.T

    def bwd(gout):
        row_dot = np.sum(gout * cos, axis=1)
        col_dot = np.sum(gout * cos, axis=0)
        _accumulate(a, (gout @ bh - row_dot[:, None] * ah) / an[:, None])
        _accumulate(b, (gout.T @ ah - col_dot[:, None] * bh) / bn[:, None])

    return _result(cos, "cosine_rows", (a, b), bwd)
