"""Dense float64 tensors with reverse-mode automatic differentiation.

Covers exactly the layer zoo the two autoencoders need: valid 1-D
convolution, max/global-average pooling, dense layers with a small set of
activations, a fused bidirectional LSTM with hand-rolled backpropagation
through time, and bias-corrected Adam.  Everything is CPU numpy in 64-bit;
forward passes are deterministic and single-threaded training is
bit-reproducible.

Graphs are built only while some input requires gradients, so the same ops
double as a plain (graph-free) inference path.
"""

from __future__ import annotations

import json
import math
import struct

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import TrainingDivergedError

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - plain numpy fallback
    _HAVE_NUMBA = False

_WEIGHTS_MAGIC = b"SFWT0001"


class Tensor:
    """A numpy array plus an optional backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=float)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = parents if requires_grad else ()
        self._backward = backward if requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, k):
        return power(self, k)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return take(self, idx)

    def sum(self, axis=None):
        return tsum(self, axis=axis)

    def mean(self, axis=None):
        return tmean(self, axis=axis)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


def astensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accum(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    squeeze = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if squeeze:
        g = g.sum(axis=squeeze, keepdims=True)
    return g


def _node(data, parents, backward) -> Tensor:
    req = any(p.requires_grad for p in parents)
    return Tensor(data, requires_grad=req, parents=tuple(parents), backward=backward)


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------

def add(a, b):
    a, b = astensor(a), astensor(b)
    out_data = a.data + b.data

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _node(out_data, (a, b), bwd)


def sub(a, b):
    a, b = astensor(a), astensor(b)
    out_data = a.data - b.data

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _node(out_data, (a, b), bwd)


def mul(a, b):
    a, b = astensor(a), astensor(b)
    out_data = a.data * b.data

    def bwd(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(out_data, (a, b), bwd)


def div(a, b):
    a, b = astensor(a), astensor(b)
    out_data = a.data / b.data

    def bwd(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _node(out_data, (a, b), bwd)


def power(a, k: float):
    a = astensor(a)
    out_data = a.data ** k

    def bwd(g):
        _accum(a, g * k * a.data ** (k - 1))

    return _node(out_data, (a,), bwd)


def matmul(a, b):
    """x (..., Din) @ w (Din, Dout); weight must be a 2-D matrix."""
    a, b = astensor(a), astensor(b)
    if b.ndim != 2:
        raise ValueError("matmul right operand must be 2-D")
    out_data = a.data @ b.data

    def bwd(g):
        _accum(a, g @ b.data.T)
        _accum(b, a.data.reshape(-1, a.data.shape[-1]).T @ g.reshape(-1, g.shape[-1]))

    return _node(out_data, (a, b), bwd)


def texp(a):
    a = astensor(a)
    out_data = np.exp(a.data)

    def bwd(g):
        _accum(a, g * out_data)

    return _node(out_data, (a,), bwd)


def tlog(a):
    a = astensor(a)
    out_data = np.log(a.data)

    def bwd(g):
        _accum(a, g / a.data)

    return _node(out_data, (a,), bwd)


def tanh(a):
    a = astensor(a)
    out_data = np.tanh(a.data)

    def bwd(g):
        _accum(a, g * (1.0 - out_data * out_data))

    return _node(out_data, (a,), bwd)


def sigmoid(a):
    a = astensor(a)
    out_data = _sigmoid(a.data)

    def bwd(g):
        _accum(a, g * out_data * (1.0 - out_data))

    return _node(out_data, (a,), bwd)


def _sigmoid(x):
    # exact identity, overflow-safe, one vectorized tanh call
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def relu(a):
    a = astensor(a)
    mask = a.data > 0
    out_data = np.where(mask, a.data, 0.0)

    def bwd(g):
        _accum(a, g * mask)

    return _node(out_data, (a,), bwd)


def leaky_relu(a, slope: float = 0.3):
    a = astensor(a)
    mask = a.data > 0
    out_data = np.where(mask, a.data, slope * a.data)

    def bwd(g):
        _accum(a, g * np.where(mask, 1.0, slope))

    return _node(out_data, (a,), bwd)


def tsum(a, axis=None):
    a = astensor(a)
    out_data = a.data.sum(axis=axis)

    def bwd(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape).copy())
        else:
            _accum(a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())

    return _node(out_data, (a,), bwd)


def tmean(a, axis=None):
    a = astensor(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis), 1.0 / count)


def reshape(a, shape):
    a = astensor(a)
    out_data = a.data.reshape(shape)

    def bwd(g):
        _accum(a, g.reshape(a.data.shape))

    return _node(out_data, (a,), bwd)


def take(a, idx):
    a = astensor(a)
    out_data = a.data[idx]

    def bwd(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx, g)
        _accum(a, full)

    return _node(out_data, (a,), bwd)


def concat(parts, axis=-1):
    parts = [astensor(p) for p in parts]
    out_data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]

    def bwd(g):
        offs = np.cumsum([0] + sizes)
        for p, lo, hi in zip(parts, offs[:-1], offs[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _accum(p, g[tuple(sl)])

    return _node(out_data, tuple(parts), bwd)


def tile_time(s, n_steps: int):
    """Broadcast (B, q) summaries across a new time axis -> (B, T, q)."""
    s = astensor(s)
    out_data = np.broadcast_to(s.data[:, None, :],
                               (s.data.shape[0], n_steps, s.data.shape[1])).copy()

    def bwd(g):
        _accum(s, g.sum(axis=1))

    return _node(out_data, (s,), bwd)


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

_ACTIVATIONS = {
    "linear": lambda t: t,
    "relu": relu,
    "leakyrelu": lambda t: leaky_relu(t, 0.3),
    "tanh": tanh,
    "sigmoid": sigmoid,
}


def _check_finite(x: np.ndarray, where: str):
    if not np.all(np.isfinite(x)):
        raise TrainingDivergedError(f"non-finite values in {where}")


def conv1d_valid(x, kernel, bias=None):
    """Cross-correlation with no padding, stride 1.

    ``x`` is (..., L, C_in), ``kernel`` is (k, C_in, C_out); output is
    (..., L-k+1, C_out).
    """
    x, kernel = astensor(x), astensor(kernel)
    k = kernel.data.shape[0]
    length = x.data.shape[-2]
    if length < k:
        raise ValueError(f"input length {length} shorter than kernel {k}")
    # windows: (..., L-k+1, C_in, k)
    win = sliding_window_view(x.data, k, axis=-2)
    out_data = np.tensordot(win, kernel.data, axes=((-1, -2), (0, 1)))
    if bias is not None:
        bias = astensor(bias)
        out_data = out_data + bias.data
    _check_finite(out_data, "conv1d")

    def bwd(g):
        if kernel.requires_grad:
            batch_axes = tuple(range(g.ndim - 1))
            # dK[k, ci, co] = sum over batch,t of win[..., t, ci, k] g[..., t, co]
            dk = np.tensordot(win, g, axes=(batch_axes[:-1] + (g.ndim - 2,),
                                            batch_axes))
            _accum(kernel, dk.transpose(1, 0, 2))
        if x.requires_grad:
            pad = [(0, 0)] * g.ndim
            pad[-2] = (k - 1, k - 1)
            gp = np.pad(g, pad)
            gwin = sliding_window_view(gp, k, axis=-2)  # (..., L, C_out, k)
            krev = kernel.data[::-1]  # (k, C_in, C_out)
            dx = np.tensordot(gwin, krev, axes=((-1, -2), (0, 2)))
            _accum(x, dx)
        if bias is not None and bias.requires_grad:
            _accum(bias, _unbroadcast(g, bias.data.shape))

    parents = (x, kernel) if bias is None else (x, kernel, bias)
    return _node(out_data, parents, bwd)


def maxpool1d(x, window: int = 2):
    """Windowed max with stride = window; odd trailing element is dropped."""
    x = astensor(x)
    length = x.data.shape[-2]
    n_out = length // window
    trimmed = x.data[..., : n_out * window, :]
    shaped = trimmed.reshape(trimmed.shape[:-2] + (n_out, window, trimmed.shape[-1]))
    arg = shaped.argmax(axis=-2)  # first maximal index wins
    out_data = np.take_along_axis(shaped, arg[..., None, :], axis=-2)[..., 0, :]
    _check_finite(out_data, "maxpool1d")

    def bwd(g):
        gfull = np.zeros_like(shaped)
        np.put_along_axis(gfull, arg[..., None, :], g[..., None, :], axis=-2)
        gx = np.zeros_like(x.data)
        gx[..., : n_out * window, :] = gfull.reshape(trimmed.shape)
        _accum(x, gx)

    return _node(out_data, (x,), bwd)


def global_avg_pool(x):
    """Mean over the temporal axis: (..., L, C) -> (..., C)."""
    x = astensor(x)
    length = x.data.shape[-2]
    if length == 0:
        raise ValueError("cannot pool an empty axis")
    out_data = x.data.mean(axis=-2)
    _check_finite(out_data, "global_avg_pool")

    def bwd(g):
        _accum(x, np.broadcast_to(g[..., None, :] / length, x.data.shape).copy())

    return _node(out_data, (x,), bwd)


def dense(x, weights, bias, activation: str = "linear"):
    """Affine map on the trailing axis followed by an activation."""
    if activation not in _ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    out = add(matmul(x, weights), bias)
    out = _ACTIVATIONS[activation](out)
    _check_finite(out.data, "dense")
    return out


# ---------------------------------------------------------------------------
# fused bidirectional LSTM
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _lstm_cells_fwd(xw, wh, h_seq, c_seq, gates, tanh_c):
        n_steps, d, batch, g4 = xw.shape
        hidden = g4 // 4
        for t in range(n_steps):
            for k in range(d):
                z = xw[t, k] + np.dot(h_seq[t, k], wh[k])
                for bi in range(batch):
                    for j in range(hidden):
                        gi = 0.5 * (1.0 + math.tanh(0.5 * z[bi, j]))
                        gf = 0.5 * (1.0 + math.tanh(0.5 * z[bi, hidden + j]))
                        go = 0.5 * (1.0 + math.tanh(0.5 * z[bi, 2 * hidden + j]))
                        gg = math.tanh(z[bi, 3 * hidden + j])
                        c = gf * c_seq[t, k, bi, j] + gi * gg
                        tc = math.tanh(c)
                        gates[t, k, bi, j] = gi
                        gates[t, k, bi, hidden + j] = gf
                        gates[t, k, bi, 2 * hidden + j] = go
                        gates[t, k, bi, 3 * hidden + j] = gg
                        c_seq[t + 1, k, bi, j] = c
                        tanh_c[t, k, bi, j] = tc
                        h_seq[t + 1, k, bi, j] = go * tc

    @numba.njit(cache=True)
    def _lstm_cells_bwd(gates, tanh_c, c_seq, h_seq, wh, d_out, d_xw):
        n_steps, d, batch, g4 = d_xw.shape
        hidden = g4 // 4
        d_wh = np.zeros_like(wh)
        dh_next = np.zeros((d, batch, hidden))
        dc_next = np.zeros((d, batch, hidden))
        wh_t = np.zeros((d, g4, hidden))
        for k in range(d):
            wh_t[k] = wh[k].T.copy()
        for t in range(n_steps - 1, -1, -1):
            for k in range(d):
                dz = d_xw[t, k]
                for bi in range(batch):
                    for j in range(hidden):
                        gi = gates[t, k, bi, j]
                        gf = gates[t, k, bi, hidden + j]
                        go = gates[t, k, bi, 2 * hidden + j]
                        gg = gates[t, k, bi, 3 * hidden + j]
                        tc = tanh_c[t, k, bi, j]
                        dh = d_out[t, k, bi, j] + dh_next[k, bi, j]
                        do = dh * tc
                        dc = dc_next[k, bi, j] + dh * go * (1.0 - tc * tc)
                        dz[bi, j] = (dc * gg) * gi * (1.0 - gi)
                        dz[bi, hidden + j] = (dc * c_seq[t, k, bi, j]) * gf * (1.0 - gf)
                        dz[bi, 2 * hidden + j] = do * go * (1.0 - go)
                        dz[bi, 3 * hidden + j] = (dc * gi) * (1.0 - gg * gg)
                        dc_next[k, bi, j] = dc * gf
                d_wh[k] += np.dot(h_seq[t, k].T.copy(), dz)
                dh_next[k] = np.dot(dz, wh_t[k])
        return d_wh


def _lstm_forward(x: np.ndarray, wx: np.ndarray, wh: np.ndarray, b: np.ndarray):
    """LSTM over stacked directions: x (D, B, T, C) with weights (D, C, 4H),
    (D, H, 4H), (D, 4H); returns (T, D, B, H) and a BPTT cache.

    All D directions advance together each time step.  Gate layout along the
    4H axis is (input, forget, output, cell-candidate) so the three sigmoid
    gates form one contiguous block; initial states are zero.  The cell loop
    runs through a numba kernel when available, with an identical-math numpy
    fallback.
    """
    d, batch, n_steps, c_in = x.shape
    hidden = wh.shape[1]
    h3 = 3 * hidden
    xw = np.matmul(x.reshape(d, batch * n_steps, c_in), wx)
    xw = xw.reshape(d, batch, n_steps, 4 * hidden) + b[:, None, None, :]
    xw = np.ascontiguousarray(xw.transpose(2, 0, 1, 3))  # (T, D, B, 4H)
    h_seq = np.zeros((n_steps + 1, d, batch, hidden))
    c_seq = np.zeros((n_steps + 1, d, batch, hidden))
    gates = np.empty((n_steps, d, batch, 4 * hidden))
    tanh_c = np.empty((n_steps, d, batch, hidden))
    if _HAVE_NUMBA:
        _lstm_cells_fwd(xw, wh, h_seq, c_seq, gates, tanh_c)
    else:
        for t in range(n_steps):
            z = xw[t]
            z += h_seq[t] @ wh
            gate = gates[t]
            np.multiply(z[..., :h3], 0.5, out=gate[..., :h3])
            np.tanh(gate[..., :h3], out=gate[..., :h3])
            gate[..., :h3] += 1.0
            gate[..., :h3] *= 0.5
            np.tanh(z[..., h3:], out=gate[..., h3:])
            i = gate[..., :hidden]
            f = gate[..., hidden:2 * hidden]
            o = gate[..., 2 * hidden:h3]
            g = gate[..., h3:]
            c = c_seq[t + 1]
            np.multiply(f, c_seq[t], out=c)
            c += i * g
            tc = tanh_c[t]
            np.tanh(c, out=tc)
            np.multiply(o, tc, out=h_seq[t + 1])
    cache = (x, wx, wh, h_seq, c_seq, gates, tanh_c)
    return h_seq[1:], cache


def _lstm_backward(cache, d_out: np.ndarray):
    """BPTT for `_lstm_forward`; d_out is (T, D, B, H)."""
    x, wx, wh, h_seq, c_seq, gates, tanh_c = cache
    d, batch, n_steps, c_in = x.shape
    hidden = wh.shape[1]
    h3 = 3 * hidden
    d_xw = np.empty((n_steps, d, batch, 4 * hidden))
    if _HAVE_NUMBA:
        d_wh = _lstm_cells_bwd(gates, tanh_c, c_seq, h_seq, wh,
                               np.ascontiguousarray(d_out), d_xw)
    else:
        d_wh = np.zeros_like(wh)
        dh_next = np.zeros((d, batch, hidden))
        dc_next = np.zeros((d, batch, hidden))
        for t in range(n_steps - 1, -1, -1):
            gate = gates[t]
            i = gate[..., :hidden]
            f = gate[..., hidden:2 * hidden]
            o = gate[..., 2 * hidden:h3]
            g = gate[..., h3:]
            tc = tanh_c[t]
            dh = d_out[t] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz = d_xw[t]
            dz[..., :hidden] = (dc * g) * i * (1.0 - i)
            dz[..., hidden:2 * hidden] = (dc * c_seq[t]) * f * (1.0 - f)
            dz[..., 2 * hidden:h3] = do * o * (1.0 - o)
            dz[..., h3:] = (dc * i) * (1.0 - g * g)
            dc_next = dc * f
            d_wh += h_seq[t].transpose(0, 2, 1) @ dz
            dh_next = dz @ wh.transpose(0, 2, 1)
    d_xw_flat = np.ascontiguousarray(d_xw.transpose(1, 2, 0, 3)).reshape(
        d, batch * n_steps, 4 * hidden)
    x_flat = x.reshape(d, batch * n_steps, c_in)
    d_wx = np.matmul(x_flat.transpose(0, 2, 1), d_xw_flat)
    d_b = d_xw_flat.sum(axis=1)
    d_x = np.matmul(d_xw_flat, wx.transpose(0, 2, 1)).reshape(x.shape)
    return d_x, d_wx, d_wh, d_b


def bilstm(x, wx_f, wh_f, b_f, wx_b, wh_b, b_b):
    """Bidirectional LSTM: (B, T, C) -> (B, T, 2*units), zero initial states.

    The two directions have independent weights; per-step outputs are
    concatenated (forward direction first).
    """
    x = astensor(x)
    params = [astensor(p) for p in (wx_f, wh_f, b_f, wx_b, wh_b, b_b)]
    wxf, whf, bf, wxb, whb, bb = params
    squeeze = x.data.ndim == 2
    xd = x.data[None] if squeeze else x.data
    x2 = np.stack([xd, xd[:, ::-1]])
    out, cache = _lstm_forward(x2, np.stack([wxf.data, wxb.data]),
                               np.stack([whf.data, whb.data]),
                               np.stack([bf.data, bb.data]))
    # out is (T, 2, B, H): forward half as-is, backward half time-flipped
    out_data = np.concatenate([out[:, 0], out[::-1, 1]], axis=-1).transpose(1, 0, 2)
    if squeeze:
        out_data = out_data[0]
    _check_finite(out_data, "bilstm")
    hidden = whf.data.shape[0]
    n_steps = xd.shape[1]
    batch = xd.shape[0]

    def bwd(g):
        gd = g[None] if squeeze else g
        gt = gd.transpose(1, 0, 2)  # (T, B, 2H)
        d_out = np.empty((n_steps, 2, batch, hidden))
        d_out[:, 0] = gt[..., :hidden]
        d_out[:, 1] = gt[::-1, :, hidden:]
        dx2, dwx2, dwh2, db2 = _lstm_backward(cache, d_out)
        dx = dx2[0] + dx2[1][:, ::-1]
        _accum(x, dx[0] if squeeze else dx)
        _accum(wxf, dwx2[0])
        _accum(whf, dwh2[0])
        _accum(bf, db2[0])
        _accum(wxb, dwx2[1])
        _accum(whb, dwh2[1])
        _accum(bb, db2[1])

    return _node(out_data, (x, *params), bwd)


# ---------------------------------------------------------------------------
# backward driver
# ---------------------------------------------------------------------------

def backward(loss: Tensor):
    """Reverse-mode sweep from a scalar loss; frees the graph afterwards."""
    if loss.data.size != 1:
        raise ValueError("backward expects a scalar loss")
    if not loss.requires_grad:
        raise ValueError("loss is not connected to any tracked parameter")
    topo: list[Tensor] = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            stack.append((parent, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)
    for node in topo:
        node._backward = None
        node._parents = ()


# ---------------------------------------------------------------------------
# parameters, Adam, weight container
# ---------------------------------------------------------------------------

def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class ParameterStore:
    """Named trainable tensors plus their Adam state."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, data) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        t = Tensor(np.array(data, dtype=float), requires_grad=True)
        self.params[name] = t
        self.m[name] = np.zeros_like(t.data)
        self.v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def names(self):
        return list(self.params)

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def gradients(self) -> dict:
        return {n: (t.grad if t.grad is not None else np.zeros_like(t.data))
                for n, t in self.params.items()}

    def num_parameters(self) -> int:
        return int(sum(t.data.size for t in self.params.values()))

    def arrays(self) -> dict:
        return {n: t.data for n, t in self.params.items()}

    def clone(self) -> "ParameterStore":
        other = ParameterStore()
        for n, t in self.params.items():
            other.add(n, t.data.copy())
            other.m[n] = self.m[n].copy()
            other.v[n] = self.v[n].copy()
        other.step_count = self.step_count
        return other


def adam_step(store: ParameterStore, grads: dict, lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """Standard bias-corrected Adam update, in place; returns the store."""
    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, tensor_ in store.params.items():
        g = np.asarray(grads[name], dtype=float)
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(f"non-finite gradient for {name!r}")
        m = store.m[name]
        v = store.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        tensor_.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return store


def count_parameters(weights) -> int:
    """Trainable scalar count of a store or a name->array mapping."""
    if isinstance(weights, ParameterStore):
        return weights.num_parameters()
    return int(sum(np.asarray(a).size for a in weights.values()))


def save_weights(path, weights, meta: dict | None = None):
    """Versioned container: JSON header then flat little-endian f8 blobs.

    The header records entry names and shapes in order; blob bytes follow in
    the same order.
    """
    arrays = weights.arrays() if isinstance(weights, ParameterStore) else weights
    entries = [{"name": n, "shape": list(np.asarray(a).shape)}
               for n, a in arrays.items()]
    header = {
        "format_version": 1,
        "dtype": "<f8",
        "entries": entries,
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_WEIGHTS_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, a in arrays.items():
            fh.write(np.ascontiguousarray(np.asarray(a, dtype="<f8")).tobytes())


def load_weights(path):
    """Returns (name -> float64 array, header dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _WEIGHTS_MAGIC:
            raise ValueError(f"bad weights magic {magic!r}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("format_version") != 1:
            raise ValueError("unsupported weights container version")
        arrays = {}
        for entry in header["entries"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return arrays, header
