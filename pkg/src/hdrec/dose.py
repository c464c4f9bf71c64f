"""Hybrid-dose acquisition simulation.

Low-dose measurements follow the scaled-Poisson model: counts are drawn with
mean b0 * transmission and divided by b0.  Sampling is pinned down to the
algorithm level so results reproduce bit-for-bit across platforms: every pixel
consumes exactly one Philox uniform, turned into a count by CDF inversion for
small means and by a rounded normal quantile for large ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import rng
from .errors import DomainTagError, ParameterError
from .types import AcquisitionScheme, Domain, ProjectionStack, T_MAX

# Mean threshold between exact CDF inversion and the normal approximation.
POISSON_INVERSION_CUTOFF = 30.0
# Inversion walk safety bound; P(K > cutoff + 50) is far below 1e-12.
_MAX_INVERSION_STEPS = 512


@dataclass(frozen=True)
class DoseBudget:
    """Total photons per detector pixel summed over all projections."""

    total_photons: float

    def __post_init__(self):
        if self.total_photons <= 0:
            raise ParameterError("total_photons must be > 0")


@dataclass(frozen=True)
class TrainingPair:
    """One sparse-angle training example: a noisy row and its clean target."""

    angle_index: int
    angle: float
    low: np.ndarray
    normal: np.ndarray


def poisson_counts(lam: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Poisson draws with one uniform consumed per element.

    Means below POISSON_INVERSION_CUTOFF use exact CDF inversion; larger means
    use round(lam + sqrt(lam) * ndtri(u)) clipped at zero.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < 0):
        raise ParameterError("Poisson mean must be >= 0")
    u = gen.random(lam.shape)
    counts = np.zeros(lam.shape, dtype=np.float64)

    small = lam < POISSON_INVERSION_CUTOFF
    if np.any(small):
        lam_s = lam[small]
        u_s = u[small]
        k = np.zeros(lam_s.shape, dtype=np.float64)
        pmf = np.exp(-lam_s)
        cdf = pmf.copy()
        active = u_s > cdf
        steps = 0
        while np.any(active) and steps < _MAX_INVERSION_STEPS:
            steps += 1
            k[active] += 1
            pmf[active] *= lam_s[active] / k[active]
            cdf[active] += pmf[active]
            active = u_s > cdf
        counts[small] = k

    large = ~small
    if np.any(large):
        lam_l = lam[large]
        z = ndtri(u[large])
        counts[large] = np.maximum(np.rint(lam_l + np.sqrt(lam_l) * z), 0.0)
    return counts


def _noisy_transmission_rows(
    values: np.ndarray, b0: float, seed: int, tag: int
) -> np.ndarray:
    """Scaled-Poisson draws row by row, one named stream per angle."""
    out = np.empty(values.shape, dtype=np.float64)
    for a in range(values.shape[0]):
        gen = rng.stream(seed, tag, a)
        out[a] = poisson_counts(b0 * values[a], gen) / b0
    return out


def simulate_low_dose(
    p_n: ProjectionStack, b0: float, seed: int
) -> ProjectionStack:
    """Replace each transmission value v by Poisson(b0*v)/b0, clamped to [0, T_MAX].

    Per-angle streams are derived from (seed, angle index), so the row for a
    given angle is independent of how many other angles are simulated.
    """
    if b0 <= 0:
        raise ParameterError("b0 must be > 0")
    if p_n.domain is not Domain.TRANSMISSION:
        raise DomainTagError("low-dose simulation expects a transmission stack")
    values = p_n.values.astype(np.float64)
    if np.any(values > 1.0):
        raise ParameterError("clean transmission must lie in [0, 1]")
    noisy = _noisy_transmission_rows(values, b0, seed, rng.TAG_LOW_DOSE)
    return p_n.with_values(np.clip(noisy, 0.0, T_MAX))


def build_hybrid_scheme(
    n_angles: int, n_pairs: int, b0_normal: float, b0_low: float
) -> AcquisitionScheme:
    """Evenly spaced normal-dose angles starting at index 0; the rest low-dose."""
    if not 1 <= n_pairs <= n_angles:
        raise ParameterError(f"need 1 <= n_pairs <= n_angles, got {n_pairs}/{n_angles}")
    if b0_normal < b0_low:
        raise ParameterError("b0_normal must be >= b0_low")
    normal_indices = np.unique(
        (np.arange(n_pairs, dtype=np.int64) * n_angles) // n_pairs
    )
    b0_per_angle = np.full(n_angles, float(b0_low))
    b0_per_angle[normal_indices] = float(b0_normal)
    return AcquisitionScheme(b0_per_angle, normal_indices, float(b0_normal), float(b0_low))


def total_photons(scheme: AcquisitionScheme) -> DoseBudget:
    """Sum of the per-angle blank-scan factors."""
    return DoseBudget(float(np.sum(scheme.b0_per_angle)))


def acquisition_photons(scheme: AcquisitionScheme) -> DoseBudget:
    """Photons actually spent by the hybrid acquisition.

    Paired angles are exposed twice (a low-dose shot feeding the full-view
    stack plus the normal-dose shot), so the bill is n_angles*b0_low on top of
    the normal shots -- this is the budget uniform baselines must match.
    """
    spent = scheme.n_angles * scheme.b0_low + scheme.n_pairs * scheme.b0_normal
    return DoseBudget(float(spent))


def uniform_equivalent_b0(budget: DoseBudget, n_angles: int) -> float:
    """Per-projection dose that spreads the budget uniformly."""
    if n_angles <= 0:
        raise ParameterError("n_angles must be > 0")
    return budget.total_photons / n_angles


def simulate_hybrid_acquisition(
    p_n: ProjectionStack,
    scheme: AcquisitionScheme,
    seed: int,
    renoise_normal: bool = False,
) -> tuple[list[TrainingPair], ProjectionStack]:
    """Simulate one hybrid scan: full-view low-dose stack plus training pairs.

    Every angle gets a low-dose draw at scheme.b0_low (this is the full-view
    noisy stack).  At each normal index the same low-dose row is paired with a
    target row: the clean transmission by default, or a fresh draw at
    scheme.b0_normal when ``renoise_normal`` is set.  Pair rows reuse the
    full-view realization, matching an acquisition where both exposures are
    taken at the same orientation.
    """
    if scheme.n_angles != p_n.n_angles:
        raise ParameterError(
            f"scheme covers {scheme.n_angles} angles, stack has {p_n.n_angles}"
        )
    p_l_full = simulate_low_dose(p_n, scheme.b0_low, seed)
    clean = p_n.values.astype(np.float64)
    pairs = []
    for idx in scheme.normal_indices:
        idx = int(idx)
        if renoise_normal:
            gen = rng.stream(seed, rng.TAG_NORMAL_DOSE, idx)
            target = poisson_counts(scheme.b0_normal * clean[idx], gen) / scheme.b0_normal
            target = np.clip(target, 0.0, T_MAX)
        else:
            target = clean[idx].copy()
        pairs.append(
            TrainingPair(
                angle_index=idx,
                angle=float(p_n.angles[idx]),
                low=p_l_full.values[idx].astype(np.float64),
                normal=target,
            )
        )
    return pairs, p_l_full


def write_scheme(scheme: AcquisitionScheme, path) -> None:
    lines = ["angle_index,b0"]
    lines += [f"{i},{repr(float(b))}" for i, b in enumerate(scheme.b0_per_angle)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
