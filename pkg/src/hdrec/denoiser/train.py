"""Patch extraction and Adam training of the denoiser.

Pairs are split floor(split_fraction * n) / rest (at least one validation
pair), patches are sampled once with aligned random offsets, and training runs
shuffled batches with Adam.  The returned weights are a snapshot of the best
validation epoch.  Everything is driven by named seeded streams, so a rerun
with identical inputs reproduces the loss history bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng
from ..errors import ParameterError, ShapeError, TrainingAbortError
from .losses import FeatureNet, LossReport, l1_loss, l1_loss_grad, perceptual_loss_with_grad
from .model import DenoiserConfig, ModelWeights, backward_batch, build_model, forward_batch

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 16
    patch_size: int = 128
    patches_per_pair: int = 64
    epochs: int = 50
    alpha: float = 1.0
    beta: float = 0.1
    split_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.split_fraction < 1:
            raise ParameterError("split_fraction must lie in (0, 1)")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ParameterError("learning_rate, batch_size, epochs must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ParameterError("alpha and beta must be >= 0")
        if self.patch_size < 4 or self.patch_size % 4:
            raise ParameterError("patch_size must be a positive multiple of 4")


def extract_patches(
    pairs: list, patch: int, count_per_pair: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Aligned random patches from (low, normal) image pairs.

    Offsets are uniform over valid positions and identical within a pair;
    both members must be at least patch-sized.
    """
    if count_per_pair < 0:
        raise ParameterError("count_per_pair must be >= 0")
    gen = rng.stream(seed, rng.TAG_PATCHES)
    out = []
    for low, normal in pairs:
        low = np.asarray(low, dtype=np.float64)
        normal = np.asarray(normal, dtype=np.float64)
        if low.shape != normal.shape:
            raise ShapeError("pair members must share a shape")
        if low.ndim != 2:
            raise ShapeError("pair members must be 2D images")
        h, w = low.shape
        if h < patch or w < patch:
            raise ShapeError(
                f"projection {h}x{w} is smaller than the {patch}x{patch} patch"
            )
        for _ in range(count_per_pair):
            oy = int(gen.integers(0, h - patch + 1))
            ox = int(gen.integers(0, w - patch + 1))
            out.append(
                (
                    low[oy : oy + patch, ox : ox + patch].copy(),
                    normal[oy : oy + patch, ox : ox + patch].copy(),
                )
            )
    return out


def split_pairs(n_pairs: int, split_fraction: float, seed: int):
    """Seeded permutation split: floor(frac*n) train, at least 1 validation."""
    if n_pairs < 2:
        raise ParameterError("need at least 2 pairs to hold out validation")
    n_train = int(np.floor(split_fraction * n_pairs))
    n_train = max(1, min(n_train, n_pairs - 1))
    order = rng.stream(seed, rng.TAG_SPLIT).permutation(n_pairs)
    return np.sort(order[:n_train]).tolist(), np.sort(order[n_train:]).tolist()


class AdamState:
    def __init__(self, params: dict):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict, lr: float) -> None:
        self.t += 1
        bias1 = 1.0 - ADAM_BETA1**self.t
        bias2 = 1.0 - ADAM_BETA2**self.t
        for key in params:
            g = grads[key]
            self.m[key] = ADAM_BETA1 * self.m[key] + (1 - ADAM_BETA1) * g
            self.v[key] = ADAM_BETA2 * self.v[key] + (1 - ADAM_BETA2) * g * g
            m_hat = self.m[key] / bias1
            v_hat = self.v[key] / bias2
            params[key] = params[key] - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def _stack_patches(patches: list) -> tuple[np.ndarray, np.ndarray]:
    lows = np.stack([p[0] for p in patches])[..., None]
    normals = np.stack([p[1] for p in patches])[..., None]
    return lows, normals


def _batch_losses(
    weights: ModelWeights,
    lows: np.ndarray,
    normals: np.ndarray,
    cfg: TrainConfig,
    featnet: FeatureNet | None,
    target_features: np.ndarray | None,
    want_grads: bool,
):
    if want_grads:
        pred, caches = forward_batch(weights, lows, with_cache=True)
    else:
        pred = forward_batch(weights, lows)
    l1 = l1_loss(pred, normals)
    perc = 0.0
    dpred = None
    if want_grads:
        dpred = cfg.alpha * l1_loss_grad(pred, normals)
    if featnet is not None:
        if target_features is None:
            target_features = featnet.forward(normals)
        if want_grads:
            perc, dperc = perceptual_loss_with_grad(pred, target_features, featnet)
            dpred = dpred + cfg.beta * dperc
        else:
            fp = featnet.forward(pred)
            perc = float(np.mean((fp - target_features) ** 2))
    total = cfg.alpha * l1 + cfg.beta * perc
    if want_grads:
        _, grads = backward_batch(weights, caches, dpred)
        return LossReport(l1, perc, total), grads
    return LossReport(l1, perc, total), None


def _epoch_eval(
    weights: ModelWeights,
    lows: np.ndarray,
    normals: np.ndarray,
    cfg: TrainConfig,
    featnet: FeatureNet | None,
    feats: np.ndarray | None,
) -> LossReport:
    """Size-weighted mean loss over batches (no gradients)."""
    n = lows.shape[0]
    sums = np.zeros(2)
    for start in range(0, n, cfg.batch_size):
        sl = slice(start, min(start + cfg.batch_size, n))
        report, _ = _batch_losses(
            weights,
            lows[sl],
            normals[sl],
            cfg,
            featnet,
            None if feats is None else feats[sl],
            want_grads=False,
        )
        count = sl.stop - sl.start
        sums += count * np.array([report.l1, report.perceptual])
    l1, perc = sums / n
    return LossReport(float(l1), float(perc), cfg.alpha * l1 + cfg.beta * perc)


def train(
    pairs: list,
    denoiser_cfg: DenoiserConfig,
    train_cfg: TrainConfig,
    featnet: FeatureNet | None = None,
) -> tuple[ModelWeights, list[dict]]:
    """Train on (low, normal) image pairs; returns best-validation weights.

    History entries are {"epoch": int, "train": LossReport, "val": LossReport}.
    When ``featnet`` is None and beta > 0 a fresh frozen extractor is built
    from the training seed.
    """
    if len(pairs) < 2:
        raise ParameterError("need at least 2 pairs (one must be held out)")
    if featnet is None and train_cfg.beta > 0:
        featnet = FeatureNet(train_cfg.seed)
    if train_cfg.beta == 0:
        featnet = None

    train_idx, val_idx = split_pairs(len(pairs), train_cfg.split_fraction, train_cfg.seed)
    train_patches = extract_patches(
        [pairs[i] for i in train_idx],
        train_cfg.patch_size,
        train_cfg.patches_per_pair,
        train_cfg.seed,
    )
    val_patches = extract_patches(
        [pairs[i] for i in val_idx],
        train_cfg.patch_size,
        train_cfg.patches_per_pair,
        train_cfg.seed + 1,
    )
    if not train_patches or not val_patches:
        raise ParameterError("patches_per_pair must be >= 1 for training")

    tr_lows, tr_normals = _stack_patches(train_patches)
    va_lows, va_normals = _stack_patches(val_patches)
    tr_feats = featnet.forward(tr_normals) if featnet is not None else None
    va_feats = featnet.forward(va_normals) if featnet is not None else None

    weights = build_model(denoiser_cfg)
    adam = AdamState(weights.params)
    shuffler = rng.stream(train_cfg.seed, rng.TAG_SHUFFLE)

    history: list[dict] = []
    best = (np.inf, weights.copy())
    n_train = tr_lows.shape[0]
    for epoch in range(train_cfg.epochs):
        order = shuffler.permutation(n_train)
        sums = np.zeros(2)
        for start in range(0, n_train, train_cfg.batch_size):
            pick = order[start : start + train_cfg.batch_size]
            report, grads = _batch_losses(
                weights,
                tr_lows[pick],
                tr_normals[pick],
                train_cfg,
                featnet,
                None if tr_feats is None else tr_feats[pick],
                want_grads=True,
            )
            if not np.isfinite(report.total):
                raise TrainingAbortError(
                    f"non-finite loss at epoch {epoch}, batch {start // train_cfg.batch_size}"
                )
            adam.step(weights.params, grads, train_cfg.learning_rate)
            sums += pick.size * np.array([report.l1, report.perceptual])
        l1, perc = sums / n_train
        train_report = LossReport(
            float(l1), float(perc), train_cfg.alpha * l1 + train_cfg.beta * perc
        )
        val_report = _epoch_eval(weights, va_lows, va_normals, train_cfg, featnet, va_feats)
        if not np.isfinite(val_report.total):
            raise TrainingAbortError(f"non-finite validation loss at epoch {epoch}")
        history.append({"epoch": epoch, "train": train_report, "val": val_report})
        if val_report.total < best[0]:
            best = (val_report.total, weights.copy())
    return best[1], history


def write_history(history: list[dict], path) -> None:
    lines = ["epoch,train_l1,train_perc,train_total,val_l1,val_perc,val_total"]
    for entry in history:
        tr, va = entry["train"], entry["val"]
        lines.append(
            f"{entry['epoch']},{repr(tr.l1)},{repr(tr.perceptual)},{repr(tr.total)},"
            f"{repr(va.l1)},{repr(va.perceptual)},{repr(va.total)}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
