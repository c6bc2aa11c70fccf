"""Training loops and loss-series analysis.

The movement and placement scorers (autoencoder + value head) regress their
squashed readout onto the labeled scores with Adam and MSE, plus a small
auxiliary reconstruction term that keeps the autoencoder an autoencoder.
The graph re-ranker regresses per-node scores onto the propagated values of
walk-visited nodes with RMSprop and smooth L1.

Loss-series utilities: trailing moving average and a two-sided F-test on
tail variances, with the F distribution evaluated through a continued-
fraction incomplete beta (no stats dependency).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .datagen import DatasetRecord, GraphRecord
from .model_io import ModelBundle
from .nets import (
    Adam,
    Autoencoder,
    GatNetwork,
    RmsProp,
    ValueHead,
    mse_loss,
    smooth_l1_loss,
    squash,
    squash_grad,
)


class EmptyDataset(Exception):
    pass


class InsufficientData(Exception):
    pass


class ScoredAutoencoder:
    """Autoencoder + head trained end to end against scalar labels.

    forward_batch returns the squashed readouts; the auxiliary
    reconstruction loss (weight ``recon_weight``) is folded into the
    gradients during backward_batch, not into the reported loss.
    """

    def __init__(self, ae: Autoencoder, head: ValueHead, recon_weight: float = 0.1):
        self.ae = ae
        self.head = head
        self.recon_weight = recon_weight
        self._cache = None

    def forward_batch(self, batch: np.ndarray) -> np.ndarray:
        caches = []
        raws = np.empty(len(batch))
        for i, v in enumerate(batch):
            out, cache = self.ae.forward(np.asarray(v, dtype=np.float64))
            raws[i] = self.head.forward(out)
            caches.append(cache)
        self._cache = (np.asarray(batch, dtype=np.float64), caches, raws)
        return squash(raws)

    def backward_batch(self, d_preds: np.ndarray) -> dict:
        batch, caches, raws = self._cache
        grads = {name: np.zeros_like(p) for name, p in self.params().items()}
        n = len(batch)
        for i in range(n):
            cache = caches[i]
            ae_out = cache[4]
            d_raw = d_preds[i] * squash_grad(raws[i])
            grads["head_w"] += d_raw * ae_out
            grads["head_b"] += d_raw
            d_ae_out = d_raw * self.head.w
            if self.recon_weight > 0.0:
                # auxiliary reconstruction toward the input measures
                _, d_recon = mse_loss(ae_out, batch[i])
                d_ae_out = d_ae_out + self.recon_weight * d_recon / n
            self.ae.backward(cache, d_ae_out, grads, "ae_")
        return grads

    def params(self) -> dict:
        out = {"head_w": self.head.w, "head_b": self.head.b}
        for name, p in self.ae.params().items():
            out["ae_" + name] = p
        return out


class GraphScorer:
    """GatNetwork wrapper training on one graph with a labeled-row mask."""

    def __init__(self, gat: GatNetwork):
        self.gat = gat
        self._rows = None

    def forward_batch(self, inputs) -> np.ndarray:
        x, a, rows = inputs
        self._rows = rows
        y = self.gat.forward(np.asarray(x, dtype=np.float64), np.asarray(a, dtype=np.float64))
        return y[rows]

    def backward_batch(self, d_preds: np.ndarray) -> dict:
        x_rows = self._rows
        d_y = np.zeros(self.gat._cache[2].shape[0])
        d_y[x_rows] = d_preds
        return self.gat.backward(d_y)

    def params(self) -> dict:
        return self.gat.params()


@dataclass
class UctTrainResult:
    ae_move: Autoencoder
    head_move: ValueHead
    ae_place: Autoencoder
    head_place: ValueHead
    move_losses: list
    place_losses: list


def train_uct_ae(records: list[DatasetRecord], epochs: int, seed: int,
                 config: TrainConfig = TrainConfig()) -> UctTrainResult:
    """Fit both scorers on labeled plies; returns per-iteration MSE series."""
    if not records:
        raise EmptyDataset("no labeled records")
    rng = np.random.default_rng(seed)
    features = np.array([list(r.measures) for r in records], dtype=np.float64)
    y_move = np.array([r.move_score for r in records], dtype=np.float64)
    y_place = np.array([r.place_score for r in records], dtype=np.float64)

    move_model = ScoredAutoencoder(Autoencoder(rng), ValueHead(rng), config.recon_weight)
    place_model = ScoredAutoencoder(Autoencoder(rng), ValueHead(rng), config.recon_weight)
    opt_move = Adam(lr=config.uct_lr)
    opt_place = Adam(lr=config.uct_lr)

    move_losses: list[float] = []
    place_losses: list[float] = []
    n = len(records)
    batch = config.batch_size
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start: start + batch]
            for model, opt, labels, series in (
                    (move_model, opt_move, y_move, move_losses),
                    (place_model, opt_place, y_place, place_losses)):
                preds = model.forward_batch(features[idx])
                loss, d_preds = mse_loss(preds, labels[idx])
                grads = model.backward_batch(d_preds)
                opt.step(model.params(), grads)
                series.append(loss)
    return UctTrainResult(move_model.ae, move_model.head,
                          place_model.ae, place_model.head,
                          move_losses, place_losses)


def train_gat_ae(graphs: list[GraphRecord], epochs: int, seed: int,
                 config: TrainConfig = TrainConfig(),
                 gat: GatNetwork | None = None) -> tuple[GatNetwork, list]:
    """Fit the graph re-ranker on walk-labeled subgraphs (smooth L1).

    Rows the evolutionary walk landed on carry full weight; the remaining
    rows are kept at ``config.gat_anchor_weight`` so predictions stay
    anchored across the whole candidate layer instead of extrapolating
    from the handful of walked nodes.
    """
    usable = [g for g in graphs if g.labels]
    if not usable:
        raise EmptyDataset("no labeled graphs")
    rng = np.random.default_rng(seed)
    if gat is None:
        gat = GatNetwork(rng)
    scorer = GraphScorer(gat)
    opt = RmsProp(lr=config.gat_lr)
    losses: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(len(usable))
        for gi in order:
            g = usable[gi]
            rows = sorted(g.labels)
            targets = np.array([g.labels[r] for r in rows], dtype=np.float64)
            visited = set(g.visited)
            weights = np.array([1.0 if r in visited else config.gat_anchor_weight
                                for r in rows])
            weights /= weights.sum()
            x = np.asarray(g.x, dtype=np.float64)
            n = x.shape[0]
            a = np.eye(n)
            for i, j in g.edges:
                a[i, j] = 1.0
                a[j, i] = 1.0
            preds = scorer.forward_batch((x, a, rows))
            loss, d_preds = smooth_l1_loss(preds, targets)
            # re-weight per-row gradients; smooth_l1 already divided by n
            d_preds = d_preds * weights * len(rows)
            grads = scorer.backward_batch(d_preds)
            opt.step(scorer.params(), grads)
            losses.append(loss)
    return gat, losses


def assemble_bundle(uct: UctTrainResult, gat: GatNetwork) -> ModelBundle:
    return ModelBundle(ae_move=uct.ae_move, ae_place=uct.ae_place,
                       head_move=uct.head_move, head_place=uct.head_place, gat=gat)


# ---------------------------------------------------------------------------
# Loss-series analysis


def moving_average(series, window: int = 50) -> list:
    """Trailing mean over min(window, i + 1) points; length-preserving."""
    if window < 1:
        raise ValueError("window must be >= 1")
    out = []
    acc = 0.0
    for i, v in enumerate(series):
        acc += v
        if i >= window:
            acc -= series[i - window]
        out.append(acc / min(i + 1, window))
    return out


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_survival(x: float, d1: float, d2: float) -> float:
    """P(F > x) for an F(d1, d2) variate."""
    if x <= 0.0:
        return 1.0
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x))


def variance_and_ftest(a, b, from_index: int = 0) -> tuple[float, float, float, float]:
    """Tail variances, their ratio, and a two-sided F-test p-value.

    F is var_a / var_b (so swapping the series inverts it); the p-value is
    computed from the larger-over-smaller orientation and is symmetric.
    """
    tail_a = list(a[from_index:])
    tail_b = list(b[from_index:])
    if len(tail_a) <= 2 or len(tail_b) <= 2:
        raise InsufficientData("need more than 2 points past from_index in both series")
    var_a = float(np.var(tail_a, ddof=1))
    var_b = float(np.var(tail_b, ddof=1))
    if var_a == 0.0 or var_b == 0.0:
        raise InsufficientData("degenerate (constant) series has zero variance")
    f_value = var_a / var_b
    if var_a >= var_b:
        big, d_num, d_den = f_value, len(tail_a) - 1, len(tail_b) - 1
    else:
        big, d_num, d_den = 1.0 / f_value, len(tail_b) - 1, len(tail_a) - 1
    p = min(1.0, 2.0 * f_survival(big, d_num, d_den))
    return var_a, var_b, f_value, p


def write_loss_csv(path, series, window: int = 50) -> None:
    """Columns: iteration, raw, smoothed."""
    smoothed = moving_average(series, window)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "raw", "smoothed"])
        for i, (raw, smooth) in enumerate(zip(series, smoothed)):
            writer.writerow([i, f"{raw:.10g}", f"{smooth:.10g}"])
