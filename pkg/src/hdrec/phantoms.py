"""Synthetic test objects: a disk-pack sample and the classic ten-ellipse head.

Both generators are pure functions of their arguments (seed included), so two
calls with identical inputs produce bit-identical phantoms.
"""

from __future__ import annotations

import numpy as np

from . import rng
from .errors import ParameterError, PlacementError
from .types import Phantom

# Disk radii as a fraction of the inscribed-circle radius.
DISK_RADIUS_FRACTION = (0.06, 0.14)
PLACEMENT_ATTEMPTS_PER_DISK = 10

# Classic ten-ellipse head phantom: (value, a, b, x0, y0, phi_degrees) with
# half-axes and centers in [-1, 1] normalized coordinates.
HEAD_ELLIPSES = (
    (2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6050, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)

HEAD_PEAK_MU = 0.02


def _pixel_centers(width: int, height: int):
    """Pixel-center coordinates relative to the image center, x right / y up."""
    x = np.arange(width, dtype=np.float64) - (width - 1) / 2.0
    y = np.arange(height, dtype=np.float64) - (height - 1) / 2.0
    return np.meshgrid(x, y)


def inscribed_circle_mask(width: int, height: int) -> np.ndarray:
    """Boolean mask of pixel centers inside the inscribed circle."""
    xx, yy = _pixel_centers(width, height)
    r = min(width, height) / 2.0
    return xx * xx + yy * yy <= r * r


def make_disk_pack_phantom(
    width: int,
    height: int,
    n_disks: int,
    mu_matrix: float,
    mu_disk: float,
    seed: int,
) -> Phantom:
    """Non-overlapping disks of ``mu_disk`` in a circular matrix of ``mu_matrix``.

    Disk centers and radii are rejection-sampled inside the inscribed circle;
    after 10 * n_disks failed attempts a PlacementError reports how many disks
    were actually placed.  Background outside the inscribed circle is zero.
    """
    if n_disks < 0:
        raise ParameterError("n_disks must be >= 0")
    if mu_matrix < 0 or mu_disk < 0:
        raise ParameterError("attenuation values must be >= 0")

    xx, yy = _pixel_centers(width, height)
    mu = np.zeros((height, width), dtype=np.float64)
    mu[inscribed_circle_mask(width, height)] = mu_matrix

    r_in = min(width, height) / 2.0
    gen = rng.stream(seed, rng.TAG_PHANTOM)
    placed: list[tuple[float, float, float]] = []
    attempts_left = PLACEMENT_ATTEMPTS_PER_DISK * n_disks
    while len(placed) < n_disks:
        if attempts_left <= 0:
            raise PlacementError(
                f"placed only {len(placed)} of {n_disks} disks "
                f"within {PLACEMENT_ATTEMPTS_PER_DISK * n_disks} attempts"
            )
        attempts_left -= 1
        lo, hi = DISK_RADIUS_FRACTION
        radius = r_in * (lo + (hi - lo) * gen.random())
        # Uniform center over the disk of allowed centers (stay fully inside).
        max_c = r_in - radius
        ang = 2.0 * np.pi * gen.random()
        rad = max_c * np.sqrt(gen.random())
        cx, cy = rad * np.cos(ang), rad * np.sin(ang)
        if any(
            np.hypot(cx - px, cy - py) < radius + pr for px, py, pr in placed
        ):
            continue
        placed.append((cx, cy, radius))
        mu[(xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius] = mu_disk
    return Phantom(mu)


def make_shepp_logan(width: int) -> Phantom:
    """Ten-ellipse head phantom, square, rescaled so the peak equals 0.02/px."""
    if width < 32:
        raise ParameterError(f"head phantom needs width >= 32, got {width}")
    xx, yy = _pixel_centers(width, width)
    # Normalize so the phantom spans [-1, 1] across the image.
    xn = xx / (width / 2.0)
    yn = yy / (width / 2.0)
    img = np.zeros((width, width), dtype=np.float64)
    for value, a, b, x0, y0, phi_deg in HEAD_ELLIPSES:
        phi = np.deg2rad(phi_deg)
        c, s = np.cos(phi), np.sin(phi)
        xr = (xn - x0) * c + (yn - y0) * s
        yr = -(xn - x0) * s + (yn - y0) * c
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += value
    peak = img.max()
    if peak <= 0:
        raise ParameterError("head phantom grid too coarse: no positive values")
    img *= HEAD_PEAK_MU / peak
    return Phantom(img)
