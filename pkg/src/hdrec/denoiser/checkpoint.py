"""Weight checkpoints: text header plus raw float32 payload.

Header keys: magic, the architecture fields, the config fingerprint, and one
``layer=`` line per tensor with name, shape, and byte offset into the payload
(which sits at ``<path>.f32``, little-endian float32 in manifest order).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import LengthMismatchError, MalformedHeaderError
from ..io import payload_path
from .model import DenoiserConfig, ModelWeights

WEIGHTS_MAGIC = "HDRECW"


def save_weights(weights: ModelWeights, path) -> None:
    path = Path(path)
    cfg = weights.config
    lines = [
        f"magic={WEIGHTS_MAGIC}",
        f"n_scales={cfg.n_scales}",
        f"base_channels={cfg.base_channels}",
        f"residual_units_per_stage={cfg.residual_units_per_stage}",
        f"kernel={cfg.kernel}",
        f"seed={cfg.seed}",
        f"fingerprint={weights.fingerprint}",
    ]
    blobs = []
    offset = 0
    for name, value in weights.params.items():
        arr = np.ascontiguousarray(value, dtype="<f4")
        shape = "x".join(str(d) for d in arr.shape)
        lines.append(f"layer={name},{shape},{offset}")
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    payload_path(path).write_bytes(b"".join(blobs))


def load_weights(path) -> ModelWeights:
    path = Path(path)
    fields = {}
    layers = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition("=")
        if key == "layer":
            parts = value.split(",")
            if len(parts) != 3:
                raise MalformedHeaderError(f"{path}: bad layer line {line!r}")
            name, shape_s, offset_s = parts
            shape = tuple(int(d) for d in shape_s.split("x"))
            layers.append((name, shape, int(offset_s)))
        else:
            fields[key] = value
    if fields.get("magic") != WEIGHTS_MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {fields.get('magic')!r}")
    try:
        config = DenoiserConfig(
            n_scales=int(fields["n_scales"]),
            base_channels=int(fields["base_channels"]),
            residual_units_per_stage=int(fields["residual_units_per_stage"]),
            kernel=int(fields["kernel"]),
            seed=int(fields["seed"]),
        )
    except KeyError as exc:
        raise MalformedHeaderError(f"{path}: missing config key {exc}") from exc
    fingerprint = fields.get("fingerprint", "")
    if fingerprint != config.fingerprint():
        raise MalformedHeaderError(f"{path}: fingerprint does not match config")

    raw = payload_path(path).read_bytes()
    params = {}
    for name, shape, offset in layers:
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(raw):
            raise LengthMismatchError(f"{path}: payload too short for layer {name}")
        params[name] = (
            np.frombuffer(raw[offset:end], dtype="<f4").reshape(shape).astype(np.float64)
        )
    return ModelWeights(config, params, fingerprint)
