#!/usr/bin/env python3
"""Dose-allocation study: hybrid pair counts vs a uniform baseline.

Reduced-scale version of the full photon-budget sweep (the default SweepPlan
grids are the full study; this script trims them so a laptop core finishes in
minutes).  Emits points.csv and points.svg under ./sweep_out.
"""

import sys
from pathlib import Path

from hdrec.denoiser import DenoiserConfig, TrainConfig
from hdrec.recon import ReconConfig
from hdrec.sweep import PhantomSpec, SweepPlan, run_sweep


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("sweep_out")
    plan = SweepPlan(
        phantom=PhantomSpec(kind="disk", width=64, n_disks=6, mu_matrix=0.008, mu_disk=0.02, seed=5),
        n_angles=120,
        pair_counts=(4, 16),
        b0_grid=(50.0, 100.0, 500.0),
        b0_normal=2000.0,
        train_cfg=TrainConfig(
            learning_rate=3e-3,
            patch_size=32,
            patches_per_pair=24,
            epochs=15,
            beta=0.1,
            seed=0,
        ),
        denoiser_cfg=DenoiserConfig(
            n_scales=2, base_channels=6, residual_units_per_stage=2, kernel=3, seed=0
        ),
        recon=ReconConfig(method="FBP_Parzen"),
        seed=0,
    )
    points, failures = run_sweep(plan, out)
    for line in failures:
        print(f"FAILED: {line}", file=sys.stderr)
    for p in sorted(points, key=lambda p: (p.baseline, p.n_pairs, p.total_photons)):
        tag = "uniform" if p.baseline else f"pairs={p.n_pairs}"
        print(
            f"{tag:>9}  b0={p.b0_low:8.2f}  photons={p.total_photons:10.0f}  "
            f"proj_ssim={p.proj_mean_ssim:.4f}  recon_ssim={p.recon_ssim:.4f}"
        )
    print(f"curves written to {out}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
