"""Full-projection denoising via overlapping tiles.

Each projection row is treated as an image; anything smaller than one tile is
reflect-padded up to tile size first, denoised, and cropped back.  Tiles of
128 x 128 slide with stride 64 and are blended with a separable triangular
window, normalized so the weights at every pixel sum to one.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainTagError
from ..types import Domain, ProjectionStack, T_MAX
from .model import ModelWeights, forward_batch

TILE = 128
TILE_STRIDE = 64


def tile_offsets(length: int, tile: int = TILE, stride: int = TILE_STRIDE) -> list[int]:
    """Start offsets covering [0, length) with a final flush-right tile."""
    if length < tile:
        raise ValueError(f"length {length} shorter than tile {tile}")
    offsets = list(range(0, length - tile + 1, stride))
    if offsets[-1] != length - tile:
        offsets.append(length - tile)
    return offsets


def triangle_window(tile: int = TILE) -> np.ndarray:
    """Strictly positive 1D triangle peaking at the tile center."""
    i = np.arange(tile, dtype=np.float64)
    return (tile / 2.0 - np.abs(i + 0.5 - tile / 2.0)) / (tile / 2.0)


def pad_reflect_to(image: np.ndarray, min_h: int, min_w: int) -> np.ndarray:
    """Reflect-pad so both sides reach at least (min_h, min_w)."""
    h, w = image.shape
    pad_h = max(0, min_h - h)
    pad_w = max(0, min_w - w)
    if pad_h == 0 and pad_w == 0:
        return image
    return np.pad(
        image,
        ((pad_h // 2, pad_h - pad_h // 2), (pad_w // 2, pad_w - pad_w // 2)),
        mode="reflect",
    )


def denoise_image(
    weights: ModelWeights, image: np.ndarray, batch_size: int = 16
) -> np.ndarray:
    """Tile-and-blend denoising of one 2D image of any size."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    padded = pad_reflect_to(image, TILE, TILE)
    ph, pw = padded.shape
    oy = tile_offsets(ph)
    ox = tile_offsets(pw)
    win = triangle_window()
    weight2d = win[:, None] * win[None, :]

    acc = np.zeros((ph, pw), dtype=np.float64)
    wsum = np.zeros((ph, pw), dtype=np.float64)
    tiles = [(y, x) for y in oy for x in ox]
    for start in range(0, len(tiles), batch_size):
        chunk = tiles[start : start + batch_size]
        batch = np.stack([padded[y : y + TILE, x : x + TILE] for y, x in chunk])
        out = forward_batch(weights, batch[..., None])[..., 0]
        for (y, x), tile_out in zip(chunk, out):
            acc[y : y + TILE, x : x + TILE] += weight2d * tile_out
            wsum[y : y + TILE, x : x + TILE] += weight2d
    blended = acc / wsum
    # Undo the reflect padding: the original content sits centered.
    y0 = (ph - h) // 2
    x0 = (pw - w) // 2
    return blended[y0 : y0 + h, x0 : x0 + w]


def denoise_stack(
    weights: ModelWeights, p_l: ProjectionStack, angles_per_chunk: int = 16
) -> ProjectionStack:
    """Denoise every projection row of a transmission stack.

    Rows are processed in chunks so memory stays bounded while tiles from
    several rows still share one batched forward pass.
    """
    if p_l.domain is not Domain.TRANSMISSION:
        raise DomainTagError("denoise_stack expects a transmission stack")
    rows = p_l.values.astype(np.float64)
    n_angles, n_det = rows.shape

    ph, pw = max(1, TILE), max(n_det, TILE)
    oy = tile_offsets(ph)
    ox = tile_offsets(pw)
    win = triangle_window()
    weight2d = win[:, None] * win[None, :]

    denoised = np.empty_like(rows)
    y0 = (ph - 1) // 2
    x0 = (pw - n_det) // 2
    for a0 in range(0, n_angles, angles_per_chunk):
        chunk = range(a0, min(a0 + angles_per_chunk, n_angles))
        tiles, spans = [], []
        padded_rows = {}
        for a in chunk:
            padded_rows[a] = pad_reflect_to(rows[a][None, :], TILE, TILE)
            for y in oy:
                for x in ox:
                    tiles.append(padded_rows[a][y : y + TILE, x : x + TILE])
                    spans.append((a - a0, y, x))
        acc = np.zeros((len(chunk), ph, pw), dtype=np.float64)
        wsum = np.zeros((len(chunk), ph, pw), dtype=np.float64)
        for start in range(0, len(tiles), 16):
            batch = np.stack(tiles[start : start + 16])
            out = forward_batch(weights, batch[..., None])[..., 0]
            for (ai, y, x), tile_out in zip(spans[start : start + 16], out):
                acc[ai, y : y + TILE, x : x + TILE] += weight2d * tile_out
                wsum[ai, y : y + TILE, x : x + TILE] += weight2d
        blended = acc / wsum
        denoised[a0 : a0 + len(chunk)] = blended[:, y0, x0 : x0 + n_det]
    return p_l.with_values(np.clip(denoised, 0.0, T_MAX))
