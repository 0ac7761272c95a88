"""LSTM, bidirectional LSTM (summed directions) and additive attention."""

from __future__ import annotations

import numpy as np

from .layers import Layer, glorot_uniform


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LSTM(Layer):
    """Single-direction LSTM over [B, T, d] sequences, returning [B, T, h].

    Gate layout in the stacked weight matrices is (input, forget,
    candidate, output).  The forget-gate bias starts at 1.0.
    """

    def __init__(self, n_in: int, n_hidden: int, rng: np.random.Generator):
        super().__init__()
        self.n_in = n_in
        self.n_hidden = n_hidden
        h = n_hidden
        b = np.zeros(4 * h)
        b[h : 2 * h] = 1.0
        self.params = {
            "Wx": glorot_uniform(rng, (n_in, 4 * h), n_in, h),
            "Wh": glorot_uniform(rng, (h, 4 * h), h, h),
            "b": b,
        }
        self.zero_grads()

    @property
    def weight_names(self) -> tuple:
        return ("Wx", "Wh")

    def forward(self, x, train=True):
        if x.ndim != 3 or x.shape[2] != self.n_in:
            raise ValueError(f"lstm expects [batch, T, {self.n_in}], got {x.shape}")
        if x.shape[1] < 1:
            raise ValueError("empty sequence")
        bsz, steps, _ = x.shape
        h = self.n_hidden
        pre = x @ self.params["Wx"] + self.params["b"]
        Wh = self.params["Wh"]
        h_t = np.zeros((bsz, h))
        c_t = np.zeros((bsz, h))
        outputs = np.empty((bsz, steps, h))
        cache = []
        for t in range(steps):
            z = pre[:, t] + h_t @ Wh
            i = _sigmoid(z[:, :h])
            f = _sigmoid(z[:, h : 2 * h])
            g = np.tanh(z[:, 2 * h : 3 * h])
            o = _sigmoid(z[:, 3 * h :])
            c_prev, h_prev = c_t, h_t
            c_t = f * c_prev + i * g
            hc = np.tanh(c_t)
            h_t = o * hc
            outputs[:, t] = h_t
            cache.append((i, f, g, o, hc, c_prev, h_prev))
        self._cache = (x, cache)
        return outputs

    def backward(self, gy):
        x, cache = self._cache
        bsz, steps, _ = x.shape
        h = self.n_hidden
        Wh = self.params["Wh"]
        dz_all = np.zeros((bsz, steps, 4 * h))
        dh_next = np.zeros((bsz, h))
        dc_next = np.zeros((bsz, h))
        gWh = np.zeros_like(Wh)
        for t in reversed(range(steps)):
            i, f, g, o, hc, c_prev, h_prev = cache[t]
            dh = gy[:, t] + dh_next
            do = dh * hc
            dc = dc_next + dh * o * (1.0 - hc ** 2)
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g ** 2),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            dz_all[:, t] = dz
            gWh += h_prev.T @ dz
            dh_next = dz @ Wh.T
            dc_next = dc * f
        self.grads["Wh"] += gWh
        self.grads["Wx"] += x.reshape(bsz * steps, -1).T @ dz_all.reshape(bsz * steps, -1)
        self.grads["b"] += dz_all.sum(axis=(0, 1))
        return dz_all @ self.params["Wx"].T


class BiLSTM(Layer):
    """Bidirectional LSTM whose direction outputs are summed elementwise."""

    def __init__(self, n_in: int, n_hidden: int, rng: np.random.Generator):
        super().__init__()
        self.forward_cell = LSTM(n_in, n_hidden, rng)
        self.backward_cell = LSTM(n_in, n_hidden, rng)
        self.n_hidden = n_hidden

    @property
    def params(self):
        merged = {f"fwd.{k}": v for k, v in self.forward_cell.params.items()}
        merged.update({f"bwd.{k}": v for k, v in self.backward_cell.params.items()})
        return merged

    @params.setter
    def params(self, value):
        # base-class __init__ assigns an empty dict before the cells exist
        pass

    @property
    def grads(self):
        merged = {f"fwd.{k}": v for k, v in self.forward_cell.grads.items()}
        merged.update({f"bwd.{k}": v for k, v in self.backward_cell.grads.items()})
        return merged

    @grads.setter
    def grads(self, value):
        pass

    def zero_grads(self):
        self.forward_cell.zero_grads()
        self.backward_cell.zero_grads()

    @property
    def weight_names(self) -> tuple:
        return ("fwd.Wx", "fwd.Wh", "bwd.Wx", "bwd.Wh")

    def forward(self, x, train=True):
        fwd = self.forward_cell.forward(x, train)
        bwd = self.backward_cell.forward(x[:, ::-1], train)
        return fwd + bwd[:, ::-1]

    def backward(self, gy):
        gx_fwd = self.forward_cell.backward(gy)
        gx_bwd = self.backward_cell.backward(gy[:, ::-1])
        return gx_fwd + gx_bwd[:, ::-1]


class Attention(Layer):
    """Additive attention pooling a [B, T, h] sequence to a [B, h] context.

    Scores u_t = w . tanh(W o_t + b); weights alpha = softmax(u); the
    context is the alpha-weighted sum of the sequence states.  The weights
    of the latest forward pass are kept on `last_weights` for export.
    """

    def __init__(self, n_hidden: int, rng: np.random.Generator):
        super().__init__()
        self.n_hidden = n_hidden
        self.params = {
            "W": glorot_uniform(rng, (n_hidden, n_hidden), n_hidden, n_hidden),
            "b": np.zeros(n_hidden),
            "w": glorot_uniform(rng, (n_hidden,), n_hidden, 1),
        }
        self.zero_grads()
        self.last_weights = None

    @property
    def weight_names(self) -> tuple:
        return ("W", "w")

    def forward(self, seq, train=True):
        if seq.ndim != 3 or seq.shape[2] != self.n_hidden:
            raise ValueError(f"attention expects [batch, T, {self.n_hidden}], got {seq.shape}")
        a = np.tanh(seq @ self.params["W"] + self.params["b"])
        u = a @ self.params["w"]
        u_shift = u - u.max(axis=1, keepdims=True)
        exp = np.exp(u_shift)
        alpha = exp / exp.sum(axis=1, keepdims=True)
        y = (alpha[:, :, None] * seq).sum(axis=1)
        self._cache = (seq, a, alpha)
        self.last_weights = alpha
        return y

    def backward(self, gy):
        seq, a, alpha = self._cache
        dalpha = np.einsum("bh,bth->bt", gy, seq)
        du = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
        da = du[:, :, None] * self.params["w"]
        dz = da * (1.0 - a ** 2)
        self.grads["W"] += np.einsum("bth,btk->hk", seq, dz)
        self.grads["b"] += dz.sum(axis=(0, 1))
        self.grads["w"] += np.einsum("bth,bt->h", a, du)
        return alpha[:, :, None] * gy[:, None, :] + dz @ self.params["W"].T
