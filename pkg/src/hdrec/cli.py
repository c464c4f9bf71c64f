"""Command-line surface.

Subcommands: phantom, project, simulate, train, denoise, reconstruct, metrics,
sweep, compare.  Every subcommand takes --seed, --out-dir, and optionally
--config pointing at a TOML file whose [<subcommand>] table supplies defaults
(explicit flags win).  Exit codes: 0 success, 2 validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import io
from .denoiser import (
    DenoiserConfig,
    TrainConfig,
    denoise_stack,
    load_weights,
    save_weights,
    train,
    write_history,
)
from .dose import (
    DoseBudget,
    TrainingPair,
    build_hybrid_scheme,
    simulate_hybrid_acquisition,
    simulate_low_dose,
    write_scheme,
)
from .errors import NumericalError, ParseError
from .metrics import stack_report
from .phantoms import make_disk_pack_phantom, make_shepp_logan
from .pipeline import default_n_det, pairs_to_images
from .projector import Geometry, beer_transmit, log_normalize, make_angles, siddon_project, zero_count_floor
from .recon import ReconConfig, reconstruct
from .sweep import (
    PhantomSpec,
    SweepPlan,
    compare_uniform_vs_hybrid,
    run_sweep,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _outdir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_table(args, name: str) -> dict:
    if not getattr(args, "config", None):
        return {}
    with open(args.config, "rb") as fh:
        data = tomllib.load(fh)
    table = data.get(name, {})
    if not isinstance(table, dict):
        raise ParseError(f"[{name}] in {args.config} must be a table")
    return table


def _merge(args, table: dict, key: str, default):
    """Precedence: explicit flag > config file > default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in table:
        return table[key]
    return default


def _train_cfg(args, table: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=float(_merge(args, table, "learning_rate", 1e-4)),
        batch_size=int(_merge(args, table, "batch_size", 16)),
        patch_size=int(_merge(args, table, "patch_size", 128)),
        patches_per_pair=int(_merge(args, table, "patches_per_pair", 64)),
        epochs=int(_merge(args, table, "epochs", 50)),
        alpha=float(_merge(args, table, "alpha", 1.0)),
        beta=float(_merge(args, table, "beta", 0.1)),
        split_fraction=float(_merge(args, table, "split_fraction", 0.8)),
        seed=int(args.seed),
    )


def _denoiser_cfg(args, table: dict) -> DenoiserConfig:
    return DenoiserConfig(
        n_scales=int(_merge(args, table, "n_scales", 4)),
        base_channels=int(_merge(args, table, "base_channels", 32)),
        residual_units_per_stage=int(_merge(args, table, "residual_units", 2)),
        kernel=int(_merge(args, table, "kernel", 3)),
        seed=int(args.seed),
    )


def _recon_cfg(args, table: dict) -> ReconConfig:
    return ReconConfig(
        method=str(_merge(args, table, "method", "FBP_Parzen")),
        tv_iterations=int(_merge(args, table, "tv_iterations", 100)),
        tv_weight=float(_merge(args, table, "tv_weight", 0.2)),
        tv_step=float(_merge(args, table, "tv_step", 0.02)),
        sirt_sweeps_per_iter=int(_merge(args, table, "sirt_sweeps", 1)),
    )


def cmd_phantom(args) -> int:
    table = _config_table(args, "phantom")
    out = _outdir(args)
    kind = _merge(args, table, "kind", "disk")
    width = int(_merge(args, table, "width", 128))
    if kind == "disk":
        phantom = make_disk_pack_phantom(
            width,
            int(_merge(args, table, "height", width)),
            int(_merge(args, table, "n_disks", 12)),
            float(_merge(args, table, "mu_matrix", 0.005)),
            float(_merge(args, table, "mu_disk", 0.02)),
            int(args.seed),
        )
    elif kind == "shepp":
        phantom = make_shepp_logan(width)
    else:
        raise ParseError(f"unknown phantom kind {kind!r}")
    io.write_phantom(phantom, out / "phantom.hdr")
    print(out / "phantom.hdr")
    return EXIT_OK


def cmd_project(args) -> int:
    table = _config_table(args, "project")
    out = _outdir(args)
    phantom = io.read_phantom(_merge(args, table, "phantom", None))
    n_angles = int(_merge(args, table, "n_angles", 360))
    n_det = int(_merge(args, table, "n_det", 0)) or default_n_det(phantom.width)
    geometry = Geometry(n_det, make_angles(n_angles))
    sino = siddon_project(phantom, geometry)
    io.write_stack(sino, out / "sino.hdr")
    io.write_stack(beer_transmit(sino), out / "transmission.hdr")
    print(out / "transmission.hdr")
    return EXIT_OK


def cmd_simulate(args) -> int:
    table = _config_table(args, "simulate")
    out = _outdir(args)
    p_n = io.read_stack(_merge(args, table, "stack", None))
    n_pairs = int(_merge(args, table, "n_pairs", 0))
    b0_low = float(_merge(args, table, "b0", 100.0))
    if n_pairs > 0:
        scheme = build_hybrid_scheme(
            p_n.n_angles, n_pairs, float(_merge(args, table, "b0_normal", 5000.0)), b0_low
        )
        pairs, p_l = simulate_hybrid_acquisition(p_n, scheme, int(args.seed))
        io.write_stack(p_l, out / "p_l.hdr")
        write_scheme(scheme, out / "scheme.csv")
        from .types import ProjectionStack

        lows = np.stack([p.low for p in pairs])
        normals = np.stack([p.normal for p in pairs])
        angles = np.array([p.angle for p in pairs])
        io.write_stack(ProjectionStack(angles, lows, p_l.domain), out / "pairs_low.hdr")
        io.write_stack(ProjectionStack(angles, normals, p_l.domain), out / "pairs_normal.hdr")
        print(out / "p_l.hdr")
    else:
        p_l = simulate_low_dose(p_n, b0_low, int(args.seed))
        io.write_stack(p_l, out / "p_l.hdr")
        print(out / "p_l.hdr")
    return EXIT_OK


def cmd_train(args) -> int:
    table = _config_table(args, "train")
    out = _outdir(args)
    low = io.read_stack(_merge(args, table, "pairs_low", None))
    normal = io.read_stack(_merge(args, table, "pairs_normal", None))
    train_cfg = _train_cfg(args, table)
    denoiser_cfg = _denoiser_cfg(args, table)
    pairs = [
        TrainingPair(
            angle_index=i,
            angle=float(low.angles[i]),
            low=low.values[i].astype(np.float64),
            normal=normal.values[i].astype(np.float64),
        )
        for i in range(low.n_angles)
    ]
    image_pairs = pairs_to_images(pairs, train_cfg.patch_size)
    weights, history = train(image_pairs, denoiser_cfg, train_cfg)
    save_weights(weights, out / "weights.hdr")
    write_history(history, out / "history.csv")
    print(out / "weights.hdr")
    return EXIT_OK


def cmd_denoise(args) -> int:
    table = _config_table(args, "denoise")
    out = _outdir(args)
    weights = load_weights(_merge(args, table, "weights", None))
    p_l = io.read_stack(_merge(args, table, "stack", None))
    p_d = denoise_stack(weights, p_l)
    io.write_stack(p_d, out / "p_d.hdr")
    print(out / "p_d.hdr")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    table = _config_table(args, "reconstruct")
    out = _outdir(args)
    stack = io.read_stack(_merge(args, table, "stack", None))
    cfg = _recon_cfg(args, table)
    size = int(_merge(args, table, "size", 128))
    from .types import Domain

    if stack.domain is Domain.TRANSMISSION:
        b0 = float(_merge(args, table, "b0", 100.0))
        stack = log_normalize(stack, zero_count_floor(b0))
    log_path = out / "tv_residuals.csv" if cfg.method == "TV" else None
    image = reconstruct(stack, size, cfg, log_path=log_path)
    io.write_image(image, out / "recon.hdr")
    print(out / "recon.hdr")
    return EXIT_OK


def cmd_metrics(args) -> int:
    table = _config_table(args, "metrics")
    out = _outdir(args)
    a = io.read_stack(_merge(args, table, "a", None))
    b = io.read_stack(_merge(args, table, "b", None))
    data_range = float(_merge(args, table, "data_range", 1.0))
    report = stack_report(a, b, data_range)
    io.write_quality_report(report, out / "quality.csv")
    print(f"mean_ssim={report.mean_ssim!r} mean_psnr={report.mean_psnr!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    table = _config_table(args, "sweep")
    out = _outdir(args)
    phantom = PhantomSpec(
        kind=str(_merge(args, table, "phantom_kind", "disk")),
        width=int(_merge(args, table, "width", 128)),
        n_disks=int(_merge(args, table, "n_disks", 12)),
        mu_matrix=float(_merge(args, table, "mu_matrix", 0.005)),
        mu_disk=float(_merge(args, table, "mu_disk", 0.02)),
        seed=int(_merge(args, table, "phantom_seed", 3)),
    )
    plan = SweepPlan(
        phantom=phantom,
        n_angles=int(_merge(args, table, "n_angles", 360)),
        pair_counts=tuple(_merge(args, table, "pair_counts", (4, 32, 128, 256))),
        b0_grid=tuple(_merge(args, table, "b0_grid", (10, 50, 100, 500, 1000))),
        b0_normal=float(_merge(args, table, "b0_normal", 5000.0)),
        train_cfg=_train_cfg(args, table),
        denoiser_cfg=_denoiser_cfg(args, table),
        recon=_recon_cfg(args, table),
        seed=int(args.seed),
    )
    points, failures = run_sweep(plan, out)
    for line in failures:
        print(f"FAILED {line}", file=sys.stderr)
    print(out / "points.csv")
    return EXIT_OK if not failures else EXIT_NUMERICAL


def cmd_compare(args) -> int:
    table = _config_table(args, "compare")
    out = _outdir(args)
    phantom = PhantomSpec(
        kind=str(_merge(args, table, "phantom_kind", "disk")),
        width=int(_merge(args, table, "width", 128)),
        n_disks=int(_merge(args, table, "n_disks", 12)),
        mu_matrix=float(_merge(args, table, "mu_matrix", 0.005)),
        mu_disk=float(_merge(args, table, "mu_disk", 0.02)),
        seed=int(_merge(args, table, "phantom_seed", 3)),
    ).build()
    n_angles = int(_merge(args, table, "n_angles", 360))
    n_pairs = int(_merge(args, table, "n_pairs", 4))
    b0_normal = float(_merge(args, table, "b0_normal", 5000.0))
    budget_raw = _merge(args, table, "budget", 0.0)
    if float(budget_raw) > 0:
        budget = DoseBudget(float(budget_raw))
    else:
        b0_low = float(_merge(args, table, "b0_low", 100.0))
        budget = DoseBudget(n_angles * b0_low + n_pairs * b0_normal)
    report = compare_uniform_vs_hybrid(
        phantom,
        budget,
        n_angles,
        n_pairs,
        b0_normal,
        _denoiser_cfg(args, table),
        _train_cfg(args, table),
        _recon_cfg(args, table),
        ReconConfig(method="TV"),
        int(args.seed),
    )
    lines = [f"{k},{repr(v)}" for k, v in dataclasses.asdict(report).items()]
    (out / "compare.csv").write_text("field,value\n" + "\n".join(lines) + "\n", encoding="utf-8")
    print(out / "compare.csv")
    return EXIT_OK


_COMMANDS = {
    "phantom": cmd_phantom,
    "project": cmd_project,
    "simulate": cmd_simulate,
    "train": cmd_train,
    "denoise": cmd_denoise,
    "reconstruct": cmd_reconstruct,
    "metrics": cmd_metrics,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default=".")
        p.add_argument("--config", default=None, help="TOML config file")

    p = sub.add_parser("phantom", help="generate a test object")
    common(p)
    p.add_argument("--kind", default=None, choices=["disk", "shepp"])
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--n-disks", dest="n_disks", type=int, default=None)
    p.add_argument("--mu-matrix", dest="mu_matrix", type=float, default=None)
    p.add_argument("--mu-disk", dest="mu_disk", type=float, default=None)

    p = sub.add_parser("project", help="forward-project a phantom")
    common(p)
    p.add_argument("--phantom", default=None)
    p.add_argument("--n-angles", dest="n_angles", type=int, default=None)
    p.add_argument("--n-det", dest="n_det", type=int, default=None)

    p = sub.add_parser("simulate", help="low-dose or hybrid acquisition")
    common(p)
    p.add_argument("--stack", default=None, help="clean transmission stack")
    p.add_argument("--b0", type=float, default=None)
    p.add_argument("--n-pairs", dest="n_pairs", type=int, default=None)
    p.add_argument("--b0-normal", dest="b0_normal", type=float, default=None)

    p = sub.add_parser("train", help="train the projection denoiser")
    common(p)
    p.add_argument("--pairs-low", dest="pairs_low", default=None)
    p.add_argument("--pairs-normal", dest="pairs_normal", default=None)
    for flag, typ in [
        ("--learning-rate", float),
        ("--batch-size", int),
        ("--patch-size", int),
        ("--patches-per-pair", int),
        ("--epochs", int),
        ("--alpha", float),
        ("--beta", float),
        ("--n-scales", int),
        ("--base-channels", int),
        ("--residual-units", int),
        ("--kernel", int),
    ]:
        p.add_argument(flag, dest=flag[2:].replace("-", "_"), type=typ, default=None)

    p = sub.add_parser("denoise", help="apply trained weights to a stack")
    common(p)
    p.add_argument("--weights", default=None)
    p.add_argument("--stack", default=None)

    p = sub.add_parser("reconstruct", help="FBP or TV reconstruction")
    common(p)
    p.add_argument("--stack", default=None)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--method", default=None, choices=["FBP_Parzen", "FBP_Ramp", "TV"])
    p.add_argument("--b0", type=float, default=None, help="for transmission input flooring")
    p.add_argument("--tv-iterations", dest="tv_iterations", type=int, default=None)
    p.add_argument("--tv-weight", dest="tv_weight", type=float, default=None)
    p.add_argument("--tv-step", dest="tv_step", type=float, default=None)

    p = sub.add_parser("metrics", help="per-angle SSIM/PSNR of stack a vs b")
    common(p)
    p.add_argument("--a", default=None)
    p.add_argument("--b", default=None)
    p.add_argument("--data-range", dest="data_range", type=float, default=None)

    def experiment_flags(p):
        p.add_argument("--n-angles", dest="n_angles", type=int, default=None)
        p.add_argument("--width", type=int, default=None)
        p.add_argument("--phantom-kind", dest="phantom_kind", default=None)
        p.add_argument("--n-disks", dest="n_disks", type=int, default=None)
        p.add_argument("--mu-matrix", dest="mu_matrix", type=float, default=None)
        p.add_argument("--mu-disk", dest="mu_disk", type=float, default=None)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--patch-size", dest="patch_size", type=int, default=None)
        p.add_argument("--patches-per-pair", dest="patches_per_pair", type=int, default=None)
        p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--n-scales", dest="n_scales", type=int, default=None)
        p.add_argument("--base-channels", dest="base_channels", type=int, default=None)
        p.add_argument("--residual-units", dest="residual_units", type=int, default=None)
        p.add_argument("--b0-normal", dest="b0_normal", type=float, default=None)

    p = sub.add_parser("sweep", help="dose-allocation sweep")
    common(p)
    experiment_flags(p)

    p = sub.add_parser("compare", help="uniform vs hybrid at one budget")
    common(p)
    experiment_flags(p)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--n-pairs", dest="n_pairs", type=int, default=None)
    p.add_argument("--b0-low", dest="b0_low", type=float, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
