"""Differentiable primitives.

Each function takes Vars (plain arrays are lifted to constants), computes
the forward value in float64 and registers a backward closure on the tape.
"""

from typing import Optional, Sequence, Union

import numpy as np

from gated_grounder.autodiff.tape import Tape, Var
from gated_grounder.errors import NumericError

ArrayLike = Union[Var, np.ndarray, float]


def _tape(*xs) -> Optional[Tape]:
    for x in xs:
        if isinstance(x, Var) and x.tape is not None:
            return x.tape
    return None


def _lift(x: ArrayLike, tape: Optional[Tape]) -> Var:
    if isinstance(x, Var):
        return x
    return Var(np.asarray(x, dtype=np.float64), tape)


def _emit(op: str, inputs: Sequence[Var], value: np.ndarray, backward) -> Var:
    tape = _tape(*inputs)
    if tape is None:
        if not np.all(np.isfinite(value)):
            raise NumericError(f"Non-finite value produced by {op}", op=op)
        return Var(value)
    return tape.record(op, inputs, value, backward)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: ArrayLike, b: ArrayLike) -> Var:
    t = _tape(a, b)
    a, b = _lift(a, t), _lift(b, t)
    return _emit(
        "add", (a, b), a.value + b.value,
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: ArrayLike, b: ArrayLike) -> Var:
    t = _tape(a, b)
    a, b = _lift(a, t), _lift(b, t)
    return _emit(
        "sub", (a, b), a.value - b.value,
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: ArrayLike, b: ArrayLike) -> Var:
    """Elementwise product with broadcasting."""
    t = _tape(a, b)
    a, b = _lift(a, t), _lift(b, t)
    return _emit(
        "mul", (a, b), a.value * b.value,
        lambda g: (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)),
    )


def scale(a: Var, factor: float) -> Var:
    return _emit("scale", (a,), a.value * factor, lambda g: (g * factor,))


def linear(x: ArrayLike, weight: Var) -> Var:
    """Matrix-vector (or row-batched) product x @ W^T.

    Args:
        x: Vector (d,) or matrix (n, d)
        weight: Matrix (out, d)
    """
    t = _tape(x, weight)
    x, weight = _lift(x, t), _lift(weight, t)

    def grad(g):
        gx = g @ weight.value
        gw = np.outer(g, x.value) if x.value.ndim == 1 else g.T @ x.value
        return gx, gw

    return _emit("linear", (x, weight), x.value @ weight.value.T, grad)


def matmul(a: ArrayLike, b: ArrayLike) -> Var:
    """Matrix product a @ b for 2-D a and 1-D or 2-D b."""
    t = _tape(a, b)
    a, b = _lift(a, t), _lift(b, t)

    def grad(g):
        if b.value.ndim == 1:
            return np.outer(g, b.value), a.value.T @ g
        return g @ b.value.T, a.value.T @ g

    return _emit("matmul", (a, b), a.value @ b.value, grad)


def tanh(a: Var) -> Var:
    y = np.tanh(a.value)
    return _emit("tanh", (a,), y, lambda g: (g * (1.0 - y * y),))


def tanh_rnn(pre: Var, hidden: Var, reverse: bool = False) -> Var:
    """Final state of h_t = tanh(x_t + W_h h_{t-1}) over the rows of `pre`, h_0 = 0.

    One record for the whole sequence; backward runs through time.

    Args:
        pre: (T, H) input projections x_t
        hidden: (H, H) recurrent weight W_h
        reverse: Walk the rows from last to first
    """
    t = _tape(pre, hidden)
    pre, hidden = _lift(pre, t), _lift(hidden, t)
    steps = list(range(pre.shape[0] - 1, -1, -1) if reverse else range(pre.shape[0]))
    if not steps:
        raise ValueError("tanh_rnn needs at least one step")
    w = hidden.value
    states = []
    h = np.zeros(w.shape[0])
    for row in steps:
        h = np.tanh(pre.value[row] + w @ h)
        states.append(h)

    def grad(g):
        g_pre = np.zeros_like(pre.value)
        g_w = np.zeros_like(w)
        g_h = g
        for n in range(len(steps) - 1, -1, -1):
            da = g_h * (1.0 - states[n] * states[n])
            g_pre[steps[n]] = da
            if n > 0:
                g_w += np.outer(da, states[n - 1])
            g_h = w.T @ da
        return g_pre, g_w

    return _emit("tanh_rnn", (pre, hidden), states[-1], grad)


def concat(xs: Sequence[ArrayLike], axis: int = 0) -> Var:
    t = _tape(*xs)
    xs = [_lift(x, t) for x in xs]
    value = np.concatenate([x.value for x in xs], axis=axis)
    cuts = np.cumsum([x.value.shape[axis] for x in xs])[:-1]
    return _emit("concat", xs, value, lambda g: np.split(g, cuts, axis=axis))


def take(a: Var, index) -> Var:
    """Rows of `a` at `index` (an int or an int array)."""
    index = np.asarray(index) if not isinstance(index, (int, np.integer)) else int(index)

    def grad(g):
        full = np.zeros_like(a.value)
        np.add.at(full, index, g)
        return (full,)

    return _emit("take", (a,), a.value[index], grad)


def row_update(base: Var, index: np.ndarray, rows: Var) -> Var:
    """Copy of `base` with rows at `index` replaced; other rows are bit-identical."""
    t = _tape(base, rows)
    base, rows = _lift(base, t), _lift(rows, t)
    index = np.asarray(index, dtype=np.int64)
    value = base.value.copy()
    value[index] = rows.value

    def grad(g):
        g_base = g.copy()
        g_base[index] = 0.0
        return g_base, g[index]

    return _emit("row_update", (base, rows), value, grad)


def reshape(a: Var, shape) -> Var:
    return _emit("reshape", (a,), a.value.reshape(shape), lambda g: (g.reshape(a.value.shape),))


def sum_(a: Var, axis: Optional[int] = None) -> Var:
    def grad(g):
        if axis is None:
            return (np.broadcast_to(g, a.value.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.value.shape).copy(),)

    return _emit("sum", (a,), np.asarray(a.value.sum(axis=axis)), grad)


def mean(a: Var, axis: Optional[int] = None) -> Var:
    count = a.value.size if axis is None else a.value.shape[axis]
    return scale(sum_(a, axis), 1.0 / count)


def softmax(a: Var) -> Var:
    """Max-subtracted softmax of a vector."""
    shifted = a.value - a.value.max()
    e = np.exp(shifted)
    y = e / e.sum()
    return _emit("softmax", (a,), y, lambda g: (y * (g - np.dot(g, y)),))


def masked_softmax(scores: Var, mask: np.ndarray) -> Var:
    """Row-wise softmax over masked entries; rows without any entry are zero."""
    mask = np.asarray(mask, dtype=bool)
    masked = np.where(mask, scores.value, -np.inf)
    row_max = masked.max(axis=1, keepdims=True)
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)
    e = np.exp(np.where(mask, scores.value - row_max, -np.inf))
    denom = e.sum(axis=1, keepdims=True)
    y = np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)
    return _emit(
        "masked_softmax", (scores,), y,
        lambda g: (y * (g - (g * y).sum(axis=1, keepdims=True)),),
    )


def scatter(values: Var, rows: np.ndarray, cols: np.ndarray, shape) -> Var:
    """Dense matrix of zeros with `values` placed at (rows, cols)."""
    out = np.zeros(shape)
    out[rows, cols] = values.value
    return _emit("scatter", (values,), out, lambda g: (g[rows, cols],))


def maximum(a: Var, b: Var) -> Var:
    """Elementwise max; gradient goes to the achieving branch, `a` on ties."""
    t = _tape(a, b)
    a, b = _lift(a, t), _lift(b, t)
    take_a = a.value >= b.value
    if t is not None:
        t.freeze("max", take_a)
    return _emit(
        "max", (a, b), np.where(take_a, a.value, b.value),
        lambda g: (np.where(take_a, g, 0.0), np.where(take_a, 0.0, g)),
    )


def cosine_rows(rows: Var, u: Var) -> Var:
    """Cosine between each row of `rows` and the vector `u`.

    Rows (or `u`) with zero norm score 0 and pass no gradient.
    """
    row_norm = np.linalg.norm(rows.value, axis=1)
    u_norm = float(np.linalg.norm(u.value))
    valid = (row_norm > 0) & (u_norm > 0)
    safe_row = np.where(valid, row_norm, 1.0)
    safe_u = u_norm if u_norm > 0 else 1.0
    dots = rows.value @ u.value
    cos = np.clip(np.where(valid, dots / (safe_row * safe_u), 0.0), -1.0, 1.0)

    def grad(g):
        g = np.where(valid, g, 0.0)
        inv = 1.0 / (safe_row * safe_u)
        g_rows = (g * inv)[:, None] * u.value[None, :]
        g_rows = g_rows - (g * cos / safe_row**2)[:, None] * rows.value
        g_u = (g * inv) @ rows.value - float(np.sum(g * cos)) * u.value / safe_u**2
        return g_rows, g_u

    return _emit("cosine", (rows, u), cos, grad)


def smooth_l1(pred: Var, target: ArrayLike, knee: float = 1.0) -> Var:
    """Summed smooth-L1: 0.5 d^2 / knee inside |d| < knee, |d| - 0.5 knee outside."""
    target_value = target.value if isinstance(target, Var) else np.asarray(target, dtype=np.float64)
    d = pred.value - target_value
    inside = np.abs(d) < knee
    loss = np.where(inside, 0.5 * d * d / knee, np.abs(d) - 0.5 * knee).sum()
    return _emit(
        "smooth_l1", (pred,), np.asarray(loss),
        lambda g: (g * np.where(inside, d / knee, np.sign(d)),),
    )


def neg_log_softmax(logits: Var, index: int) -> Var:
    """-log softmax(logits)[index], computed with max subtraction."""
    shifted = logits.value - logits.value.max()
    log_z = np.log(np.exp(shifted).sum())
    p = np.exp(shifted - log_z)

    def grad(g):
        dz = p.copy()
        dz[index] -= 1.0
        return (g * dz,)

    return _emit("neg_log_index", (logits,), np.asarray(log_z - shifted[index]), grad)
