"""Dose-allocation studies: hybrid grids, uniform baselines, and comparisons.

A sweep runs one hybrid point per (pair count, low dose) plus one uniform
baseline per low dose whose budget exactly matches its hybrid partner (the
first pair count in the plan).  Every point derives its own seed stream from
(plan seed, point index), so points can run in any order with identical
results and the emitted CSV is byte-stable across reruns.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .denoiser import DenoiserConfig, TrainConfig, denoise_stack, train
from .dose import (
    DoseBudget,
    build_hybrid_scheme,
    simulate_hybrid_acquisition,
    simulate_low_dose,
    total_photons,
    uniform_equivalent_b0,
)
from .errors import ParameterError
from .metrics import ssim, stack_report
from .phantoms import make_disk_pack_phantom, make_shepp_logan
from .pipeline import default_n_det, pairs_to_images
from .projector import Geometry, beer_transmit, log_normalize, make_angles, siddon_project, zero_count_floor
from .recon import ReconConfig, reconstruct
from .types import Phantom


@dataclass(frozen=True)
class PhantomSpec:
    kind: str = "disk"  # disk | shepp
    width: int = 128
    n_disks: int = 12
    mu_matrix: float = 0.005
    mu_disk: float = 0.02
    seed: int = 3

    def build(self) -> Phantom:
        if self.kind == "disk":
            return make_disk_pack_phantom(
                self.width, self.width, self.n_disks, self.mu_matrix, self.mu_disk, self.seed
            )
        if self.kind == "shepp":
            return make_shepp_logan(self.width)
        raise ParameterError(f"unknown phantom kind {self.kind!r}")


@dataclass(frozen=True)
class SweepPlan:
    phantom: PhantomSpec = PhantomSpec()
    n_angles: int = 360
    pair_counts: tuple = (4, 32, 128, 256)
    b0_grid: tuple = (10, 50, 100, 500, 1000)
    b0_normal: float = 5000.0
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    denoiser_cfg: DenoiserConfig = field(default_factory=DenoiserConfig)
    recon: ReconConfig = field(default_factory=lambda: ReconConfig(method="FBP_Parzen"))
    seed: int = 0

    def __post_init__(self):
        if not self.pair_counts or not self.b0_grid:
            raise ParameterError("pair_counts and b0_grid must be non-empty")


@dataclass(frozen=True)
class SweepPoint:
    n_pairs: int
    b0_low: float
    total_photons: float
    proj_mean_ssim: float
    proj_mean_psnr: float
    recon_ssim: float
    baseline: bool


@dataclass(frozen=True)
class SweepJob:
    index: int
    kind: str  # hybrid | uniform
    n_pairs: int
    b0_low: float
    budget: float


def enumerate_sweep_jobs(plan: SweepPlan) -> list[SweepJob]:
    """One hybrid job per (pair count, b0) plus one baseline per b0.

    Baseline budgets match the hybrid partner with the plan's first pair
    count, in scheme-sum accounting, exactly.
    """
    jobs = []
    index = 0
    for n_pairs in plan.pair_counts:
        for b0 in plan.b0_grid:
            scheme = build_hybrid_scheme(plan.n_angles, n_pairs, plan.b0_normal, b0)
            jobs.append(
                SweepJob(index, "hybrid", n_pairs, float(b0), total_photons(scheme).total_photons)
            )
            index += 1
    partner = plan.pair_counts[0]
    for b0 in plan.b0_grid:
        scheme = build_hybrid_scheme(plan.n_angles, partner, plan.b0_normal, b0)
        budget = total_photons(scheme).total_photons
        jobs.append(
            SweepJob(index, "uniform", 0, budget / plan.n_angles, budget)
        )
        index += 1
    return jobs


def _phantom_quality_range(phantom: Phantom) -> float:
    mu = phantom.mu.astype(np.float64)
    return float(mu.max() - mu.min()) or 1.0


def _run_hybrid_point(plan: SweepPlan, job: SweepJob, phantom, p_n, geometry):
    scheme = build_hybrid_scheme(plan.n_angles, job.n_pairs, plan.b0_normal, job.b0_low)
    seed = int(rng.stream(plan.seed, rng.TAG_SWEEP_POINT, job.index).integers(0, 2**31))
    pairs, p_l = simulate_hybrid_acquisition(p_n, scheme, seed)
    image_pairs = pairs_to_images(pairs, plan.train_cfg.patch_size)
    train_cfg = dataclasses.replace(plan.train_cfg, seed=seed)
    weights, _ = train(image_pairs, plan.denoiser_cfg, train_cfg)
    p_d = denoise_stack(weights, p_l)
    report = stack_report(p_d, p_n, 1.0)
    sino = log_normalize(p_d, zero_count_floor(scheme.b0_low))
    recon_image = reconstruct(sino, phantom.width, plan.recon)
    recon_s = ssim(recon_image, phantom.mu.astype(np.float64), _phantom_quality_range(phantom))
    return SweepPoint(
        n_pairs=job.n_pairs,
        b0_low=job.b0_low,
        total_photons=job.budget,
        proj_mean_ssim=report.mean_ssim,
        proj_mean_psnr=report.mean_psnr,
        recon_ssim=recon_s,
        baseline=False,
    )


def _run_uniform_point(plan: SweepPlan, job: SweepJob, phantom, p_n, geometry):
    seed = int(rng.stream(plan.seed, rng.TAG_SWEEP_POINT, job.index).integers(0, 2**31))
    p_l = simulate_low_dose(p_n, job.b0_low, seed)
    report = stack_report(p_l, p_n, 1.0)
    sino = log_normalize(p_l, zero_count_floor(job.b0_low))
    recon_image = reconstruct(sino, phantom.width, plan.recon)
    recon_s = ssim(recon_image, phantom.mu.astype(np.float64), _phantom_quality_range(phantom))
    return SweepPoint(
        n_pairs=0,
        b0_low=job.b0_low,
        total_photons=job.budget,
        proj_mean_ssim=report.mean_ssim,
        proj_mean_psnr=report.mean_psnr,
        recon_ssim=recon_s,
        baseline=True,
    )


def run_sweep(plan: SweepPlan, out_dir=None) -> tuple[list[SweepPoint], list[str]]:
    """Execute every job; per-point failures are recorded and the sweep continues.

    Returns (points sorted by budget, failure messages).  With ``out_dir``,
    writes points.csv / points.svg and a failures.txt when anything failed.
    """
    phantom = plan.phantom.build()
    geometry = Geometry(default_n_det(phantom.width), make_angles(plan.n_angles))
    p_n = beer_transmit(siddon_project(phantom, geometry))

    points: list[SweepPoint] = []
    failures: list[str] = []
    for job in enumerate_sweep_jobs(plan):
        try:
            if job.kind == "hybrid":
                points.append(_run_hybrid_point(plan, job, phantom, p_n, geometry))
            else:
                points.append(_run_uniform_point(plan, job, phantom, p_n, geometry))
        except Exception as exc:  # record and continue per sweep contract
            failures.append(f"job {job.index} ({job.kind}, pairs={job.n_pairs}, b0={job.b0_low}): {exc}")
    points.sort(key=lambda pt: (pt.total_photons, pt.baseline, pt.n_pairs, pt.b0_low))

    if out_dir is not None:
        from .curves import emit_curves

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        emit_curves(points, out_dir / "points")
        if failures:
            (out_dir / "failures.txt").write_text("\n".join(failures) + "\n", encoding="utf-8")
    return points, failures


@dataclass(frozen=True)
class CompareReport:
    budget: float
    uniform_b0: float
    b0_low: float
    ssim_uniform_fbp: float
    ssim_uniform_tv: float
    ssim_hybrid_fbp: float
    proj_mean_ssim_uniform: float
    proj_mean_ssim_denoised: float
    proj_mean_psnr_uniform: float
    proj_mean_psnr_denoised: float


def split_budget(budget: DoseBudget, n_angles: int, n_pairs: int, b0_normal: float) -> float:
    """Low dose per angle once n_pairs normal shots are carved out of a budget.

    Uses acquisition accounting (paired angles also receive a low-dose shot):
    budget = n_angles * b0_low + n_pairs * b0_normal.
    """
    b0_low = (budget.total_photons - n_pairs * b0_normal) / n_angles
    if b0_low <= 0:
        raise ParameterError(
            f"budget {budget.total_photons} cannot fund {n_pairs} normal shots at {b0_normal}"
        )
    if b0_low > b0_normal:
        raise ParameterError("split leaves low dose above normal dose")
    return b0_low


def compare_uniform_vs_hybrid(
    phantom: Phantom,
    budget: DoseBudget,
    n_angles: int,
    n_pairs: int,
    b0_normal: float,
    denoiser_cfg: DenoiserConfig,
    train_cfg: TrainConfig,
    recon_cfg: ReconConfig,
    tv_cfg: ReconConfig,
    seed: int,
) -> CompareReport:
    """Same budget, three reconstructions: uniform FBP, uniform TV, hybrid+denoise FBP."""
    b0_low = split_budget(budget, n_angles, n_pairs, b0_normal)
    geometry = Geometry(default_n_det(phantom.width), make_angles(n_angles))
    p_n = beer_transmit(siddon_project(phantom, geometry))
    mu = phantom.mu.astype(np.float64)
    data_range = _phantom_quality_range(phantom)

    uniform_b0 = uniform_equivalent_b0(budget, n_angles)
    p_l_uniform = simulate_low_dose(p_n, uniform_b0, seed + 1)
    sino_uniform = log_normalize(p_l_uniform, zero_count_floor(uniform_b0))
    rec_uniform_fbp = reconstruct(sino_uniform, phantom.width, recon_cfg)
    rec_uniform_tv = reconstruct(sino_uniform, phantom.width, tv_cfg)

    scheme = build_hybrid_scheme(n_angles, n_pairs, b0_normal, b0_low)
    pairs, p_l = simulate_hybrid_acquisition(p_n, scheme, seed)
    weights, _ = train(pairs_to_images(pairs, train_cfg.patch_size), denoiser_cfg, train_cfg)
    p_d = denoise_stack(weights, p_l)
    sino_d = log_normalize(p_d, zero_count_floor(b0_low))
    rec_hybrid = reconstruct(sino_d, phantom.width, recon_cfg)

    rep_u = stack_report(p_l_uniform, p_n, 1.0)
    rep_d = stack_report(p_d, p_n, 1.0)
    return CompareReport(
        budget=budget.total_photons,
        uniform_b0=uniform_b0,
        b0_low=b0_low,
        ssim_uniform_fbp=ssim(rec_uniform_fbp, mu, data_range),
        ssim_uniform_tv=ssim(rec_uniform_tv, mu, data_range),
        ssim_hybrid_fbp=ssim(rec_hybrid, mu, data_range),
        proj_mean_ssim_uniform=rep_u.mean_ssim,
        proj_mean_ssim_denoised=rep_d.mean_ssim,
        proj_mean_psnr_uniform=rep_u.mean_psnr,
        proj_mean_psnr_denoised=rep_d.mean_psnr,
    )
