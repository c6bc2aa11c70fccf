"""Tiny differentiable building blocks with hand-written backprop.

Everything here is CPU numpy in float64: a 5-3-5 autoencoder (ReLU bottleneck,
Tanh output), linear value heads, a two-layer multi-head graph attention
network, the two regression losses, and the two optimizers.  Networks cache
their forward intermediates, so one owner trains a model at a time;
inference on fixed parameters is thread-safe.

Gradients are exact and are checked against central finite differences in
the test suite, so derivations below are deliberately explicit rather than
clever.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np


class DimensionMismatch(Exception):
    pass


class AsymmetricAdjacency(Exception):
    pass


LEAKY_SLOPE = 0.2


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def squash(x):
    """Map a raw score into (0, 1): (tanh(x) + 1) / 2."""
    return (np.tanh(x) + 1.0) / 2.0


def squash_grad(x):
    t = np.tanh(x)
    return (1.0 - t * t) / 2.0


# ---------------------------------------------------------------------------
# Dense layers and the autoencoder


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.w = xavier_uniform(rng, in_dim, out_dim, (out_dim, in_dim))
        self.b = np.zeros(out_dim)

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape != (self.w.shape[1],):
            raise DimensionMismatch(f"expected input of shape ({self.w.shape[1]},), got {x.shape}")
        return self.w @ x + self.b


class Autoencoder:
    """5 -> 3 -> 5 with a ReLU bottleneck and Tanh output."""

    IN_DIM = 5
    HIDDEN = 3

    def __init__(self, rng: np.random.Generator):
        self.enc = Dense(self.IN_DIM, self.HIDDEN, rng)
        self.dec = Dense(self.HIDDEN, self.IN_DIM, rng)

    def forward(self, v: np.ndarray):
        """Returns (output, cache).  Output lies strictly inside (-1, 1)^5."""
        v = np.asarray(v, dtype=np.float64)
        h_pre = self.enc.forward(v)
        h = np.maximum(h_pre, 0.0)
        o_pre = self.dec.forward(h)
        out = np.tanh(o_pre)
        return out, (v, h_pre, h, o_pre, out)

    def backward(self, cache, d_out: np.ndarray, grads: dict, prefix: str) -> np.ndarray:
        """Accumulate parameter grads into ``grads``; returns d_input."""
        v, h_pre, h, o_pre, out = cache
        d_o_pre = d_out * (1.0 - out * out)
        grads[prefix + "dec_w"] += np.outer(d_o_pre, h)
        grads[prefix + "dec_b"] += d_o_pre
        d_h = self.dec.w.T @ d_o_pre
        d_h_pre = d_h * (h_pre > 0.0)
        grads[prefix + "enc_w"] += np.outer(d_h_pre, v)
        grads[prefix + "enc_b"] += d_h_pre
        return self.enc.w.T @ d_h_pre

    def params(self) -> dict:
        return {"enc_w": self.enc.w, "enc_b": self.enc.b,
                "dec_w": self.dec.w, "dec_b": self.dec.b}


class ValueHead:
    """Linear readout of the autoencoder output: w . x + b."""

    def __init__(self, rng: np.random.Generator, dim: int = 5):
        self.w = xavier_uniform(rng, dim, 1, (dim,))
        self.b = np.zeros(1)

    def forward(self, x: np.ndarray) -> float:
        if x.shape != self.w.shape:
            raise DimensionMismatch(f"expected input of shape {self.w.shape}, got {x.shape}")
        return float(self.w @ x + self.b[0])

    def params(self) -> dict:
        return {"w": self.w, "b": self.b}


def ae_forward(ae: Autoencoder, v) -> np.ndarray:
    out, _ = ae.forward(np.asarray(v, dtype=np.float64))
    return out


def score(ae: Autoencoder, head: ValueHead, v) -> float:
    """Raw value-head readout of the reconstructed measure vector."""
    return head.forward(ae_forward(ae, v))


# ---------------------------------------------------------------------------
# Graph attention


def _leaky(x):
    return np.where(x > 0.0, x, LEAKY_SLOPE * x)


def _leaky_grad(x):
    return np.where(x > 0.0, 1.0, LEAKY_SLOPE)


def _elu(x):
    return np.where(x > 0.0, x, np.expm1(x))


def _elu_grad(x):
    return np.where(x > 0.0, 1.0, np.exp(x))


class GatLayer:
    """One masked multi-head attention layer.

    Per head: z_i = W h_i, attention logit e_ij = LeakyReLU(a . [z_i || z_j])
    masked to the adjacency, row-softmaxed, then h'_i = sum_j alpha_ij z_j.
    Heads are concatenated or averaged depending on ``reduce``.
    """

    def __init__(self, rng: np.random.Generator, in_dim: int, out_dim: int,
                 heads: int, reduce: str, activation: Optional[str]):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.heads = heads
        self.reduce = reduce
        self.activation = activation
        self.w = xavier_uniform(rng, in_dim, out_dim, (heads, out_dim, in_dim))
        self.a = xavier_uniform(rng, 2 * out_dim, 1, (heads, 2 * out_dim))

    def forward(self, x: np.ndarray, mask: np.ndarray):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionMismatch(f"expected (n, {self.in_dim}) features, got {x.shape}")
        n = x.shape[0]
        head_out = np.empty((self.heads, n, self.out_dim))
        caches = []
        for h in range(self.heads):
            z = x @ self.w[h].T
            s = z @ self.a[h, : self.out_dim]
            t = z @ self.a[h, self.out_dim:]
            e_raw = s[:, None] + t[None, :]
            e = _leaky(e_raw)
            e = np.where(mask, e, -np.inf)
            e = e - e.max(axis=1, keepdims=True)
            ex = np.exp(e) * mask
            alpha = ex / ex.sum(axis=1, keepdims=True)
            head_out[h] = alpha @ z
            caches.append((z, e_raw, alpha))
        if self.reduce == "concat":
            agg = head_out.transpose(1, 0, 2).reshape(n, self.heads * self.out_dim)
        else:
            agg = head_out.mean(axis=0)
        if self.activation == "elu":
            out = _elu(agg)
        else:
            out = agg
        return out, (x, mask, caches, agg)

    def backward(self, cache, d_out: np.ndarray, grads: dict, prefix: str) -> np.ndarray:
        x, mask, caches, agg = cache
        n = x.shape[0]
        if self.activation == "elu":
            d_agg = d_out * _elu_grad(agg)
        else:
            d_agg = d_out
        if self.reduce == "concat":
            d_heads = d_agg.reshape(n, self.heads, self.out_dim).transpose(1, 0, 2)
        else:
            d_heads = np.repeat(d_agg[None, :, :], self.heads, axis=0) / self.heads
        d_x = np.zeros_like(x)
        for h in range(self.heads):
            z, e_raw, alpha = caches[h]
            d_h = d_heads[h]
            d_alpha = d_h @ z.T
            d_z = alpha.T @ d_h
            # softmax backward, row-wise; masked entries have alpha == 0
            row_dot = (d_alpha * alpha).sum(axis=1, keepdims=True)
            d_e = alpha * (d_alpha - row_dot)
            d_e_raw = d_e * _leaky_grad(e_raw) * mask
            d_s = d_e_raw.sum(axis=1)
            d_t = d_e_raw.sum(axis=0)
            a_src = self.a[h, : self.out_dim]
            a_dst = self.a[h, self.out_dim:]
            d_z += np.outer(d_s, a_src) + np.outer(d_t, a_dst)
            grads[f"{prefix}a{h}"][: self.out_dim] += z.T @ d_s
            grads[f"{prefix}a{h}"][self.out_dim:] += z.T @ d_t
            grads[f"{prefix}w{h}"] += d_z.T @ x
            d_x += d_z @ self.w[h]
        return d_x

    def params(self) -> dict:
        out = {}
        for h in range(self.heads):
            out[f"w{h}"] = self.w[h]
            out[f"a{h}"] = self.a[h]
        return out


class GatNetwork:
    """Two attention layers over a node-feature matrix and adjacency.

    Layer 1: 8 heads, 5 -> 4 each, concatenated to 32, ELU.
    Layer 2: 1 head, 32 -> 1.  The scalar is mapped through
    (tanh(v) + 1) / 2, so every node score lies strictly inside (0, 1).
    """

    IN_DIM = 5
    HEAD_DIM = 4
    HEADS = 8

    def __init__(self, rng: np.random.Generator):
        self.layer1 = GatLayer(rng, self.IN_DIM, self.HEAD_DIM, self.HEADS,
                               reduce="concat", activation="elu")
        self.layer2 = GatLayer(rng, self.HEAD_DIM * self.HEADS, 1, 1,
                               reduce="mean", activation=None)
        self._cache = None

    @staticmethod
    def _check_adjacency(a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"adjacency must be square, got {a.shape}")
        if not np.array_equal(a, a.T):
            raise AsymmetricAdjacency("adjacency matrix must be symmetric")
        if not np.all(np.diag(a) == 1.0):
            raise AsymmetricAdjacency("adjacency must carry self-loops")
        return a

    def forward(self, x: np.ndarray, a: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        mask = self._check_adjacency(a) > 0.0
        if x.ndim != 2 or x.shape[0] != mask.shape[0]:
            raise DimensionMismatch("feature matrix and adjacency disagree on node count")
        h1, c1 = self.layer1.forward(x, mask)
        v, c2 = self.layer2.forward(h1, mask)
        v = v[:, 0]
        y = squash(v)
        self._cache = (c1, c2, v)
        return y

    def backward(self, d_y: np.ndarray) -> dict:
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        c1, c2, v = self._cache
        grads = self.zero_grads()
        d_v = d_y * squash_grad(v)
        d_h1 = self.layer2.backward(c2, d_v[:, None], grads, "l2_")
        self.layer1.backward(c1, d_h1, grads, "l1_")
        return grads

    def zero_grads(self) -> dict:
        return {name: np.zeros_like(p) for name, p in self.params().items()}

    def params(self) -> dict:
        out = {}
        for name, p in self.layer1.params().items():
            out["l1_" + name] = p
        for name, p in self.layer2.params().items():
            out["l2_" + name] = p
        return out

    def zero_init(self) -> None:
        """Zero all parameters; the network then outputs exactly 0.5."""
        for p in self.params().values():
            p[...] = 0.0


def gat_forward(net: GatNetwork, x: np.ndarray, a: np.ndarray) -> np.ndarray:
    return net.forward(x, a)


# ---------------------------------------------------------------------------
# Losses


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error and its gradient w.r.t. pred."""
    pred = np.atleast_1d(np.asarray(pred, dtype=np.float64))
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if pred.shape != target.shape:
        raise DimensionMismatch(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.size


def smooth_l1_loss(pred: np.ndarray, target: np.ndarray, beta: float = 1.0):
    """Huber-style loss, quadratic inside |d| < beta, linear outside."""
    pred = np.atleast_1d(np.asarray(pred, dtype=np.float64))
    target = np.atleast_1d(np.asarray(target, dtype=np.float64))
    if pred.shape != target.shape:
        raise DimensionMismatch(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    ad = np.abs(diff)
    quad = ad < beta
    vals = np.where(quad, 0.5 * diff * diff / beta, ad - 0.5 * beta)
    grad = np.where(quad, diff / beta, np.sign(diff))
    return float(np.mean(vals)), grad / diff.size


LOSSES = {"mse": mse_loss, "smooth-l1": smooth_l1_loss}


# ---------------------------------------------------------------------------
# Optimizers


class Adam:
    def __init__(self, lr: float = 0.01, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict = {}
        self.v: dict = {}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, p in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m = self.m[name]
            v = self.v[name]
            m += (1.0 - b1) * (g - m)
            v += (1.0 - b2) * (g * g - v)
            m_hat = m / (1.0 - b1 ** self.t)
            v_hat = v / (1.0 - b2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class RmsProp:
    def __init__(self, lr: float = 0.0001, decay: float = 0.99, eps: float = 1e-8):
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.acc: dict = {}

    def step(self, params: dict, grads: dict) -> None:
        for name, p in params.items():
            g = grads[name]
            if name not in self.acc:
                self.acc[name] = np.zeros_like(p)
            acc = self.acc[name]
            acc *= self.decay
            acc += (1.0 - self.decay) * g * g
            p -= self.lr * g / (np.sqrt(acc) + self.eps)


def train_step(model, inputs, targets, loss_kind: str, opt) -> float:
    """One optimization step on any model exposing the trainable protocol.

    The model must provide forward_batch(inputs) -> predictions,
    backward_batch(d_predictions) -> grads, and params().  Returns the
    pre-update loss.
    """
    preds = model.forward_batch(inputs)
    loss, d_preds = LOSSES[loss_kind](preds, targets)
    grads = model.backward_batch(d_preds)
    opt.step(model.params(), grads)
    return loss
