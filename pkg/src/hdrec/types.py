"""Core value types: phantoms, projection stacks, dose schemes, quality reports.

All values are immutable after construction (arrays are flagged read-only) and
validated eagerly, so a constructed object can be shared across threads and
trusted downstream.  Array payloads are float32 to match the on-disk format
bit for bit; angles stay float64.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

# Transmission ceiling: Poisson counts divided by the blank-scan factor can
# exceed 1, so in-memory values may legitimately sit above unity.
T_MAX = 1.2

MIN_PHANTOM_SIDE = 8


class Domain(enum.Enum):
    TRANSMISSION = "Transmission"
    LINE_INTEGRAL = "LineIntegral"


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Phantom:
    """2D attenuation map; ``mu`` is per pixel-length, row-major."""

    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float32)
        if mu.ndim != 2:
            raise ParameterError("phantom mu must be a 2D array")
        h, w = mu.shape
        if w < MIN_PHANTOM_SIDE or h < MIN_PHANTOM_SIDE:
            raise ParameterError(
                f"phantom must be at least {MIN_PHANTOM_SIDE}x{MIN_PHANTOM_SIDE}, got {w}x{h}"
            )
        if not np.all(np.isfinite(mu)):
            raise ParameterError("phantom mu contains non-finite values")
        if np.any(mu < 0):
            raise ParameterError("phantom mu contains negative values")
        object.__setattr__(self, "mu", _freeze(mu))

    @property
    def width(self) -> int:
        return self.mu.shape[1]

    @property
    def height(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class ProjectionStack:
    """Angle-indexed sinogram, one detector row per angle.

    ``values``  -- (n_angles, n_det) float32
    ``angles``  -- radians, strictly increasing within [0, pi)
    ``domain``  -- transmission (I/I0) or line integral (-ln transmission)
    """

    angles: np.ndarray
    values: np.ndarray
    domain: Domain

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float32)
        if angles.ndim != 1:
            raise ParameterError("angles must be 1D")
        if values.ndim != 2:
            raise ParameterError("values must be 2D (n_angles, n_det)")
        if values.shape[0] != angles.shape[0]:
            raise ParameterError(
                f"angles length {angles.shape[0]} != rows {values.shape[0]}"
            )
        if angles.size and (angles[0] < 0 or angles[-1] >= np.pi):
            raise ParameterError("angles must lie in [0, pi)")
        if angles.size > 1 and np.any(np.diff(angles) <= 0):
            raise ParameterError("angles must be strictly increasing")
        if not isinstance(self.domain, Domain):
            raise ParameterError(f"unknown domain {self.domain!r}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("stack values contain non-finite entries")
        if self.domain is Domain.TRANSMISSION:
            ceiling = np.float32(T_MAX)
            if np.any(values < 0) or np.any(values > ceiling):
                raise ParameterError(
                    f"transmission values must lie in [0, {T_MAX}]"
                )
        else:
            if np.any(values < 0):
                raise ParameterError("line integrals must be >= 0")
        object.__setattr__(self, "angles", _freeze(angles))
        object.__setattr__(self, "values", _freeze(values))

    @property
    def n_angles(self) -> int:
        return self.values.shape[0]

    @property
    def n_det(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray, domain: Domain | None = None) -> "ProjectionStack":
        """New stack sharing this one's angles."""
        return ProjectionStack(self.angles.copy(), values, domain or self.domain)


@dataclass(frozen=True)
class AcquisitionScheme:
    """Per-angle blank-scan factors: a few normal-dose angles, the rest low."""

    b0_per_angle: np.ndarray
    normal_indices: np.ndarray
    b0_normal: float
    b0_low: float

    def __post_init__(self):
        per = np.asarray(self.b0_per_angle, dtype=np.float64)
        idx = np.asarray(self.normal_indices, dtype=np.int64)
        if per.ndim != 1:
            raise ParameterError("b0_per_angle must be 1D")
        if not (self.b0_normal >= self.b0_low > 0):
            raise ParameterError("need b0_normal >= b0_low > 0")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ParameterError("normal_indices must be sorted and unique")
            if idx[0] < 0 or idx[-1] >= per.size:
                raise ParameterError("normal_indices out of range")
        is_normal = np.zeros(per.size, dtype=bool)
        is_normal[idx] = True
        expected = np.where(is_normal, self.b0_normal, self.b0_low)
        if not np.array_equal(per, expected):
            raise ParameterError(
                "b0_per_angle entries must equal b0_normal at normal_indices and b0_low elsewhere"
            )
        object.__setattr__(self, "b0_per_angle", _freeze(per))
        object.__setattr__(self, "normal_indices", _freeze(idx))

    @property
    def n_angles(self) -> int:
        return self.b0_per_angle.size

    @property
    def n_pairs(self) -> int:
        return self.normal_indices.size


@dataclass(frozen=True)
class QualityReport:
    """Per-item SSIM/PSNR plus aggregates (population standard deviation)."""

    per_item: tuple
    mean_ssim: float = field(init=False)
    std_ssim: float = field(init=False)
    mean_psnr: float = field(init=False)
    std_psnr: float = field(init=False)

    def __post_init__(self):
        items = tuple((int(i), float(s), float(p)) for i, s, p in self.per_item)
        if not items:
            raise ParameterError("QualityReport needs at least one item")
        ssims = np.array([s for _, s, _ in items])
        psnrs = np.array([p for _, _, p in items])
        object.__setattr__(self, "per_item", items)
        object.__setattr__(self, "mean_ssim", float(ssims.mean()))
        object.__setattr__(self, "std_ssim", float(ssims.std()))
        object.__setattr__(self, "mean_psnr", float(psnrs.mean()))
        object.__setattr__(self, "std_psnr", float(psnrs.std()))
