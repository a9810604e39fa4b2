"""Single-layer LSTM with a linear dense head, forward and BPTT in numpy.

Gate layout in the stacked matrices follows the usual i, f, g, o order.
Shapes: input kernel ``(4H, D)``, recurrent kernel ``(4H, H)``, bias
``(4H,)``, dense kernel ``(H,)``, dense bias ``(1,)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError

PARAM_NAMES = ("input_kernel", "recurrent_kernel", "bias", "dense_kernel", "dense_bias")


def param_count(hidden, n_inputs):
    return 4 * hidden * (hidden + n_inputs + 1) + hidden + 1


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmWeights:
    input_kernel: np.ndarray
    recurrent_kernel: np.ndarray
    bias: np.ndarray
    dense_kernel: np.ndarray
    dense_bias: np.ndarray

    def __post_init__(self):
        H = self.recurrent_kernel.shape[1]
        if (
            self.recurrent_kernel.shape != (4 * H, H)
            or self.input_kernel.ndim != 2
            or self.input_kernel.shape[0] != 4 * H
            or self.bias.shape != (4 * H,)
            or self.dense_kernel.shape != (H,)
            or self.dense_bias.shape != (1,)
        ):
            raise ShapeError("inconsistent LSTM weight shapes")

    @property
    def hidden(self):
        return self.recurrent_kernel.shape[1]

    @property
    def n_inputs(self):
        return self.input_kernel.shape[1]

    @property
    def dtype(self):
        return self.input_kernel.dtype

    def astype(self, dtype):
        return LstmWeights(**{k: v.astype(dtype) for k, v in self.arrays().items()})

    @property
    def n_params(self):
        return sum(a.size for a in self.arrays().values())

    def arrays(self):
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def copy(self):
        return LstmWeights(**{k: v.copy() for k, v in self.arrays().items()})

    @classmethod
    def zeros(cls, hidden, n_inputs):
        H = hidden
        return cls(np.zeros((4 * H, n_inputs)), np.zeros((4 * H, H)), np.zeros(4 * H),
                   np.zeros(H), np.zeros(1))

    @classmethod
    def init(cls, hidden, n_inputs, rng):
        """Glorot-uniform input kernel, orthogonal recurrent kernel,
        zero bias except forget gate = 1."""
        H = hidden
        lim = np.sqrt(6.0 / (n_inputs + 4 * H))
        Wx = rng.uniform(-lim, lim, size=(4 * H, n_inputs))
        q, r = np.linalg.qr(rng.standard_normal((4 * H, H)))
        Wh = q * np.sign(np.diag(r))
        b = np.zeros(4 * H)
        b[H:2 * H] = 1.0
        lim_d = np.sqrt(6.0 / (H + 1))
        return cls(Wx, Wh, b, rng.uniform(-lim_d, lim_d, size=H), np.zeros(1))


def lstm_step(x, h_prev, c_prev, w):
    """One LSTM cell update; ``x`` may be ``(D,)`` or batched ``(B, D)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != w.n_inputs or h_prev.shape[-1] != w.hidden or c_prev.shape[-1] != w.hidden:
        raise ShapeError(
            f"lstm_step: got x{x.shape}, h{h_prev.shape}, c{c_prev.shape} for H={w.hidden}, D={w.n_inputs}"
        )
    H = w.hidden
    z = x @ w.input_kernel.T + h_prev @ w.recurrent_kernel.T + w.bias
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = sigmoid(z[..., 3 * H:])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c


def _gate_affine(H, dtype):
    """sigmoid(x) = 0.5 + 0.5 tanh(x / 2): one tanh for all four gates."""
    pre = np.full(4 * H, 0.5, dtype=dtype)
    pre[2 * H:3 * H] = 1.0
    mul = pre.copy()
    add = np.full(4 * H, 0.5, dtype=dtype)
    add[2 * H:3 * H] = 0.0
    return pre, mul, add


def forward(w, X):
    """Run windows ``X`` of shape ``(B, L, D)``; return dense outputs ``(B,)`` and a cache.

    Computation happens in the dtype of the weights.
    """
    dt = w.dtype
    X = np.asarray(X, dtype=dt)
    if X.ndim != 3 or X.shape[2] != w.n_inputs:
        raise ShapeError(f"expected (batch, lookback, {w.n_inputs}) windows, got {X.shape}")
    B, L, _ = X.shape
    H = w.hidden
    pre, mul, add = _gate_affine(H, dt)
    Zx = (X @ w.input_kernel.T + w.bias) * pre
    Wh_T = w.recurrent_kernel.T * pre
    gates = np.empty((L, B, 4 * H), dtype=dt)
    cs = np.zeros((L + 1, B, H), dtype=dt)
    hs = np.zeros((L + 1, B, H), dtype=dt)
    tcs = np.empty((L, B, H), dtype=dt)
    for t in range(L):
        a = gates[t]
        np.matmul(hs[t], Wh_T, out=a)
        a += Zx[:, t, :]
        np.tanh(a, out=a)
        a *= mul
        a += add
        c = cs[t + 1]
        np.multiply(a[:, H:2 * H], cs[t], out=c)
        c += a[:, :H] * a[:, 2 * H:3 * H]
        np.tanh(c, out=tcs[t])
        np.multiply(a[:, 3 * H:], tcs[t], out=hs[t + 1])
    y = hs[L] @ w.dense_kernel + w.dense_bias[0]
    return y, (X, gates, cs, hs, tcs)


def backward(w, cache, dy):
    """Gradients of ``sum(dy * y)`` with respect to every weight array."""
    X, gates, cs, hs, tcs = cache
    L, B, _ = gates.shape
    H = w.hidden
    dt = w.dtype
    dy = np.asarray(dy, dtype=dt)
    g_dense = hs[L].T @ dy
    g_dbias = np.array([dy.sum()], dtype=dt)
    dh = np.outer(dy, w.dense_kernel)
    dc = np.zeros((B, H), dtype=dt)
    dZ = np.empty((B, L, 4 * H), dtype=dt)
    Wh = w.recurrent_kernel
    for t in range(L - 1, -1, -1):
        a = gates[t]
        i, f, g, o = a[:, :H], a[:, H:2 * H], a[:, 2 * H:3 * H], a[:, 3 * H:]
        tc = tcs[t]
        dc += dh * o * (1.0 - tc * tc)
        dz = dZ[:, t, :]
        dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * cs[t] * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dh = dz @ Wh
        dc *= f
    flat = dZ.reshape(B * L, 4 * H)
    g_Wx = flat.T @ X.reshape(B * L, -1)
    g_Wh = dZ[:, 1:, :].reshape(-1, 4 * H).T @ hs[1:L].transpose(1, 0, 2).reshape(-1, H)
    g_b = flat.sum(axis=0)
    return {
        "input_kernel": g_Wx,
        "recurrent_kernel": g_Wh,
        "bias": g_b,
        "dense_kernel": g_dense,
        "dense_bias": g_dbias,
    }


def mse_loss_and_grads(w, X, y, gate=None):
    """Gated mean squared error and its gradients.

    Samples with ``gate == 0`` add a weight-independent constant (their
    output is fixed) and never reach the LSTM. ``offset`` terms for those
    samples are the caller's business; here they contribute 0.
    """
    y = np.asarray(y, dtype=w.dtype)
    n = len(y)
    if n == 0:
        raise ShapeError("empty batch")
    gate = np.ones(n, dtype=bool) if gate is None else np.asarray(gate, dtype=bool)
    on = np.flatnonzero(gate)
    if on.size == 0:
        return 0.0, {k: np.zeros_like(v) for k, v in w.arrays().items()}
    pred, cache = forward(w, np.asarray(X)[on])
    r = pred - y[on]
    loss = float(r @ r) / n
    grads = backward(w, cache, 2.0 * r / n)
    return loss, grads
