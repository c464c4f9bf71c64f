"""Training objective: pixel L1 plus a fixed-feature perceptual term.

The perceptual term measures mean squared error between feature maps from a
frozen four-layer convolutional extractor (seeded random weights, never
updated).  ``total = alpha * l1 + beta * perceptual``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng
from ..errors import ParameterError, ShapeError
from .layers import AvgPool2x, Conv, Tanh

FEATNET_CHANNELS = (16, 32, 64, 64)
FEATNET_KERNEL = 3


@dataclass(frozen=True)
class LossReport:
    l1: float
    perceptual: float
    total: float


def _as_batch(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None, :, :, None]
    elif x.ndim == 3:
        x = x[..., None]
    elif x.ndim != 4:
        raise ShapeError("expected 2D image, 3D batch, or 4D NHWC batch")
    return x


def l1_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean absolute difference over every element."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.mean(np.abs(target - pred)))


def l1_loss_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d(l1)/d(pred): sign(pred - target) / n_elements."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    return np.sign(pred - target) / pred.size


class FeatureNet:
    """Frozen convolutional feature extractor (tanh, 2x pools after layers 2 and 4)."""

    def __init__(self, seed: int):
        self.seed = seed
        self.convs = []
        cin = 1
        for i, cout in enumerate(FEATNET_CHANNELS):
            self.convs.append(Conv(f"feat{i}", FEATNET_KERNEL, cin, cout))
            cin = cout
        self.act = Tanh()
        self.pool = AvgPool2x()
        gen = rng.stream(seed, rng.TAG_MODEL_INIT, 1)
        self.params: dict = {}
        for conv in self.convs:
            conv.init(self.params, gen)
        for v in self.params.values():
            v.setflags(write=False)

    def forward(self, batch: np.ndarray, with_cache: bool = False):
        x = _as_batch(batch)
        if x.shape[1] % 4 or x.shape[2] % 4:
            raise ShapeError("feature extractor needs sides divisible by 4")
        caches = []
        h = x
        for i, conv in enumerate(self.convs):
            h, cc = conv.forward(self.params, h)
            h, ca = self.act.forward(h)
            cp = None
            if i in (1, 3):
                h, cp = self.pool.forward(h)
            caches.append((cc, ca, cp))
        if with_cache:
            return h, caches
        return h

    def backward_input(self, caches, dfeat: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the input image only; weights stay frozen."""
        scrap: dict = {}
        dh = dfeat
        for i in reversed(range(len(self.convs))):
            cc, ca, cp = caches[i]
            if cp is not None:
                dh = self.pool.backward(cp, dh)
            dh = self.act.backward(ca, dh)
            dh = self.convs[i].backward(self.params, cc, dh, scrap)
        return dh


def build_featnet(seed: int) -> FeatureNet:
    return FeatureNet(seed)


def perceptual_loss(pred: np.ndarray, target: np.ndarray, featnet: FeatureNet) -> float:
    """Mean squared error between feature maps of pred and target."""
    pred_b = _as_batch(pred)
    target_b = _as_batch(target)
    if pred_b.shape != target_b.shape:
        raise ShapeError(f"shape mismatch {pred_b.shape} vs {target_b.shape}")
    fp = featnet.forward(pred_b)
    ft = featnet.forward(target_b)
    return float(np.mean((fp - ft) ** 2))


def perceptual_loss_with_grad(
    pred: np.ndarray, target_features: np.ndarray, featnet: FeatureNet
):
    """Loss and d(loss)/d(pred) against precomputed target features."""
    pred_b = _as_batch(pred)
    fp, caches = featnet.forward(pred_b, with_cache=True)
    diff = fp - target_features
    loss = float(np.mean(diff**2))
    dpred = featnet.backward_input(caches, (2.0 / diff.size) * diff)
    return loss, dpred


def total_loss(
    pred: np.ndarray,
    target: np.ndarray,
    alpha: float,
    beta: float,
    featnet: FeatureNet | None = None,
) -> LossReport:
    """alpha * l1 + beta * perceptual; featnet may be omitted when beta == 0."""
    if alpha < 0 or beta < 0:
        raise ParameterError("alpha and beta must be >= 0")
    l1 = l1_loss(pred, target)
    if beta > 0:
        if featnet is None:
            raise ParameterError("beta > 0 requires a feature network")
        perc = perceptual_loss(pred, target, featnet)
    else:
        perc = perceptual_loss(pred, target, featnet) if featnet is not None else 0.0
    return LossReport(l1=l1, perceptual=perc, total=alpha * l1 + beta * perc)
