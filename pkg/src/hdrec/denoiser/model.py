"""Residual U-Net built from the layer primitives.

Topology: ``n_scales`` encoder stages of residual units (conv-act-conv with an
additive skip, 1x1-projected on channel change), 2x strided-conv downsampling
between stages, then a mirrored decoder that upsamples with transposed
convolutions, concatenates the same-scale encoder features, and runs residual
units; a linear 1x1 head produces the single output channel.  Activations are
leaky rectifiers (slope 0.01) everywhere except the head.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .. import rng
from ..errors import ParameterError, ShapeError
from .layers import Conv, ConvTranspose2x, LeakyReLU

ACT_SLOPE = 0.01


@dataclass(frozen=True)
class DenoiserConfig:
    n_scales: int = 4
    base_channels: int = 32
    residual_units_per_stage: int = 2
    kernel: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.n_scales < 2:
            raise ParameterError("n_scales must be >= 2")
        if self.kernel % 2 != 1:
            raise ParameterError("kernel must be odd")
        if self.base_channels < 1 or self.residual_units_per_stage < 1:
            raise ParameterError("channels and units must be >= 1")

    def fingerprint(self) -> str:
        text = (
            f"n_scales={self.n_scales},base_channels={self.base_channels},"
            f"residual_units_per_stage={self.residual_units_per_stage},"
            f"kernel={self.kernel},seed={self.seed}"
        )
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def size_multiple(self) -> int:
        return 2 ** (self.n_scales - 1)


class ResidualUnit:
    """conv k*k -> activation -> conv k*k, additive skip (1x1 proj on channel change)."""

    def __init__(self, name: str, kernel: int, cin: int, cout: int):
        self.conv1 = Conv(f"{name}.conv1", kernel, cin, cout)
        self.conv2 = Conv(f"{name}.conv2", kernel, cout, cout)
        self.proj = Conv(f"{name}.proj", 1, cin, cout) if cin != cout else None
        self.act = LeakyReLU(ACT_SLOPE)

    def layers(self):
        out = [self.conv1, self.conv2]
        if self.proj is not None:
            out.append(self.proj)
        return out

    def forward(self, params, x):
        h, c1 = self.conv1.forward(params, x)
        a, ca = self.act.forward(h)
        o, c2 = self.conv2.forward(params, a)
        if self.proj is not None:
            s, cp = self.proj.forward(params, x)
        else:
            s, cp = x, None
        return o + s, (c1, ca, c2, cp)

    def backward(self, params, cache, dy, grads):
        c1, ca, c2, cp = cache
        da = self.conv2.backward(params, c2, dy, grads)
        dh = self.act.backward(ca, da)
        dx = self.conv1.backward(params, c1, dh, grads)
        if self.proj is not None:
            dx = dx + self.proj.backward(params, cp, dy, grads)
        else:
            dx = dx + dy
        return dx


class _UNet:
    def __init__(self, config: DenoiserConfig):
        self.config = config
        k = config.kernel
        base = config.base_channels
        n = config.n_scales
        units = config.residual_units_per_stage
        self.act = LeakyReLU(ACT_SLOPE)

        self.enc_stages = []
        for s in range(n):
            ch = base * 2**s
            cin = 1 if s == 0 else ch
            stage = []
            for u in range(units):
                stage.append(ResidualUnit(f"enc{s}.unit{u}", k, cin if u == 0 else ch, ch))
            self.enc_stages.append(stage)
        self.downs = [
            Conv(f"down{s}", k, base * 2**s, base * 2 ** (s + 1), stride=2)
            for s in range(n - 1)
        ]
        self.ups = []
        self.dec_stages = []
        for s in reversed(range(n - 1)):
            ch = base * 2**s
            self.ups.append(ConvTranspose2x(f"up{s}", ch * 2, ch))
            stage = []
            for u in range(units):
                stage.append(
                    ResidualUnit(f"dec{s}.unit{u}", k, 2 * ch if u == 0 else ch, ch)
                )
            self.dec_stages.append(stage)
        self.head = Conv("head", 1, base, 1)

    def all_layers(self):
        out = []
        for stage in self.enc_stages:
            for unit in stage:
                out.extend(unit.layers())
        out.extend(self.downs)
        for up, stage in zip(self.ups, self.dec_stages):
            out.append(up)
            for unit in stage:
                out.extend(unit.layers())
        out.append(self.head)
        return out

    def init_params(self, seed: int) -> dict:
        gen = rng.stream(seed, rng.TAG_MODEL_INIT)
        params: dict = {}
        for layer in self.all_layers():
            layer.init(params, gen)
        return params

    def forward(self, params, x):
        """Batched forward; x is (N, H, W, 1).  Returns (y, cache)."""
        n_scales = self.config.n_scales
        caches = {"enc": [], "down": [], "up": [], "dec": []}
        skips = []
        h = x
        for s in range(n_scales):
            stage_cache = []
            for unit in self.enc_stages[s]:
                h, c = unit.forward(params, h)
                stage_cache.append(c)
            caches["enc"].append(stage_cache)
            if s < n_scales - 1:
                skips.append(h)
                h, cd = self.downs[s].forward(params, h)
                h, cda = self.act.forward(h)
                caches["down"].append((cd, cda))
        for i, s in enumerate(reversed(range(n_scales - 1))):
            h, cu = self.ups[i].forward(params, h)
            h, cua = self.act.forward(h)
            caches["up"].append((cu, cua))
            h = np.concatenate([skips[s], h], axis=3)
            stage_cache = []
            for unit in self.dec_stages[i]:
                h, c = unit.forward(params, h)
                stage_cache.append(c)
            caches["dec"].append(stage_cache)
        y, ch = self.head.forward(params, h)
        caches["head"] = ch
        return y, caches

    def backward(self, params, caches, dy):
        """Gradient of a scalar loss w.r.t. params and input, given dL/dy."""
        n_scales = self.config.n_scales
        base = self.config.base_channels
        grads: dict = {}
        dh = self.head.backward(params, caches["head"], dy, grads)
        dskips = [None] * (n_scales - 1)
        # Decoder stages in reverse execution order: the shallowest ran last.
        for i in reversed(range(n_scales - 1)):
            s = n_scales - 2 - i
            for unit, c in zip(reversed(self.dec_stages[i]), reversed(caches["dec"][i])):
                dh = unit.backward(params, c, dh, grads)
            ch = base * 2**s
            dskips[s] = dh[..., :ch]
            dup = dh[..., ch:]
            cu, cua = caches["up"][i]
            dup = self.act.backward(cua, dup)
            dh = self.ups[i].backward(params, cu, dup, grads)
        for s in reversed(range(n_scales)):
            if s < n_scales - 1:
                cd, cda = caches["down"][s]
                dh = self.act.backward(cda, dh)
                dh = self.downs[s].backward(params, cd, dh, grads)
                dh = dh + dskips[s]
            for unit, c in zip(reversed(self.enc_stages[s]), reversed(caches["enc"][s])):
                dh = unit.backward(params, c, dh, grads)
        return dh, grads


@dataclass(frozen=True)
class ModelWeights:
    """Named parameter store plus the architecture it belongs to."""

    config: DenoiserConfig
    params: dict
    fingerprint: str

    def copy(self) -> "ModelWeights":
        return ModelWeights(
            self.config, {k: v.copy() for k, v in self.params.items()}, self.fingerprint
        )


_net_cache: dict = {}


def _net_for(config: DenoiserConfig) -> _UNet:
    key = (config.n_scales, config.base_channels, config.residual_units_per_stage, config.kernel)
    if key not in _net_cache:
        _net_cache[key] = _UNet(config)
    return _net_cache[key]


def build_model(config: DenoiserConfig) -> ModelWeights:
    """Seeded fan-in-scaled uniform initialization of every layer."""
    net = _net_for(config)
    params = net.init_params(config.seed)
    for name, value in params.items():
        if not np.all(np.isfinite(value)):
            raise ParameterError(f"non-finite initialization in {name}")
    return ModelWeights(config, params, config.fingerprint())


def parameter_shapes(config: DenoiserConfig) -> dict:
    """Ordered layer-name -> shape map for the given architecture."""
    shapes: dict = {}
    for layer in _net_for(config).all_layers():
        shapes.update(layer.param_shapes())
    return shapes


def _check_size(config: DenoiserConfig, h: int, w: int) -> None:
    m = config.size_multiple
    if h % m or w % m:
        raise ShapeError(
            f"input {h}x{w} must have sides divisible by {m} "
            f"(2^(n_scales-1) with n_scales={config.n_scales})"
        )


def forward_batch(weights: ModelWeights, batch: np.ndarray, with_cache: bool = False):
    """Run (N, H, W) or (N, H, W, 1) batches through the network."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 3:
        x = x[..., None]
    _check_size(weights.config, x.shape[1], x.shape[2])
    net = _net_for(weights.config)
    y, caches = net.forward(weights.params, x)
    if with_cache:
        return y, caches
    return y


def backward_batch(weights: ModelWeights, caches, dy: np.ndarray):
    """Backprop dL/dy through the cached forward pass -> (dL/dx, grads)."""
    net = _net_for(weights.config)
    return net.backward(weights.params, caches, dy)


def forward(weights: ModelWeights, image: np.ndarray) -> np.ndarray:
    """Denoise one H x W image (H, W divisible by 2^(n_scales-1))."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError("forward expects a single 2D image")
    y = forward_batch(weights, image[None, :, :, None])
    return y[0, :, :, 0]
