"""Feature extractor: a plain numpy MLP trained by Adam on an MSE objective.

Stage one of surrogate training fits head(net(x)) to standardized scores,
then discards the head and freezes the net. ReLU on hidden layers, linear
output; everything in float64 so gradient checks hold tight tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregation import aggregate
from .standardize import Standardizer
from .types import InsufficientDataError, ObservedDataset


@dataclass
class FeatureNet:
    """Weights/biases per layer; weights[i] has shape (fan_in, fan_out)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must pair up")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[1] != b.shape[0]:
                raise ValueError(f"layer {i} shapes do not chain: {w.shape} / {b.shape}")
            if i > 0 and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i - 1} output does not feed layer {i}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i} has non-finite parameters")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def parameters(self) -> list[np.ndarray]:
        params: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def copy(self) -> "FeatureNet":
        return FeatureNet(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activation=self.activation,
        )


@dataclass
class RegressionHead:
    """Affine map feature -> scalar; trained in stage one, then discarded."""

    w: np.ndarray
    b: float

    def __call__(self, feats: np.ndarray) -> np.ndarray:
        return feats @ self.w + self.b

    def copy(self) -> "RegressionHead":
        return RegressionHead(w=self.w.copy(), b=float(self.b))


def init_feature_net(dims: tuple[int, ...], rng: np.random.Generator) -> FeatureNet:
    """He-normal weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return FeatureNet(weights=weights, biases=biases)


def feature_forward(net: FeatureNet, x) -> np.ndarray:
    """Forward pass; accepts a single vector or a (B, in_dim) batch."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != net.in_dim:
        raise ValueError(f"input width {arr.shape[1]} != net input dim {net.in_dim}")
    h = arr
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h[0] if single else h


def _forward_cache(net: FeatureNet, x: np.ndarray):
    """Pre-activations and post-activations per layer, for backprop."""
    acts = [x]
    pre = []
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0) if i < last else z
        acts.append(h)
    return pre, acts


def feature_backward(net: FeatureNet, x: np.ndarray, grad_out: np.ndarray):
    """Gradients of sum(grad_out * net(x)) w.r.t. every weight and bias.

    Returns ([dW...], [db...]) matching net.weights / net.biases.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
        grad_out = np.asarray(grad_out, dtype=np.float64)[None, :]
    pre, acts = _forward_cache(net, arr)
    d_weights = [np.zeros_like(w) for w in net.weights]
    d_biases = [np.zeros_like(b) for b in net.biases]
    delta = np.asarray(grad_out, dtype=np.float64)
    last = len(net.weights) - 1
    for i in range(last, -1, -1):
        d_weights[i] = acts[i].T @ delta
        d_biases[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (pre[i - 1] > 0.0)
    return d_weights, d_biases


def mse_loss_and_grads(net: FeatureNet, head: RegressionHead, x: np.ndarray, y: np.ndarray):
    """Mean squared error of head(net(x)) against y, plus all parameter grads."""
    pre, acts = _forward_cache(net, x)
    feats = acts[-1]
    pred = feats @ head.w + head.b
    resid = pred - y
    n = x.shape[0]
    loss = float(resid @ resid) / n

    d_pred = 2.0 * resid / n
    d_head_w = feats.T @ d_pred
    d_head_b = float(d_pred.sum())
    grad_feats = np.outer(d_pred, head.w)
    d_weights, d_biases = feature_backward(net, x, grad_feats)
    return loss, d_weights, d_biases, d_head_w, d_head_b


@dataclass
class Adam:
    """Standard Adam over a list of parameter arrays, updated in place."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def train_feature_stage(
    ds: ObservedDataset,
    cfg,
    aggregator=aggregate,
    seed: int | None = None,
):
    """Fit head(net(pool(z_i))) to standardized scores; freeze and return the net.

    Returns (net, head, losses, standardizer). `losses` holds the pre-update
    loss per epoch plus the loss of the returned parameters as its last entry;
    the best iterate is restored at the end, so losses[-1] <= losses[0].
    """
    if len(ds) < 2:
        raise InsufficientDataError(f"feature stage needs >= 2 records, got {len(ds)}")
    missing = [i for i, rec in enumerate(ds) if rec.embedding is None]
    if missing:
        raise ValueError(f"records without embeddings at indices {missing}")

    x = np.stack([aggregator(rec.embedding, cfg.l_max).values for rec in ds])
    scaler = Standardizer.fit(np.array([rec.score for rec in ds]))
    y = scaler.transform([rec.score for rec in ds])

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed if seed is None else seed))
    net = init_feature_net(cfg.effective_mlp_dims, rng)
    # zero head: standardized targets start at zero loss for flat landscapes
    # and the first Adam step breaks the symmetry through the head gradient
    head = RegressionHead(w=np.zeros(net.out_dim), b=0.0)

    opt = Adam(lr=cfg.mlp_lr)
    head_b = np.array([head.b])
    losses: list[float] = []
    best_loss = np.inf
    best_net, best_head = net.copy(), head.copy()
    for _ in range(cfg.mlp_epochs):
        head.b = float(head_b[0])
        loss, dw, db, dhw, dhb = mse_loss_and_grads(net, head, x, y)
        losses.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_net, best_head = net.copy(), head.copy()
        params = net.parameters() + [head.w, head_b]
        grads = [g for pair in zip(dw, db) for g in pair] + [dhw, np.array([dhb])]
        opt.step(params, grads)

    head.b = float(head_b[0])
    final_loss, *_ = mse_loss_and_grads(net, head, x, y)
    if final_loss < best_loss:
        best_loss = final_loss
        best_net, best_head = net.copy(), head.copy()
    losses.append(best_loss)
    return best_net, best_head, losses, scaler
