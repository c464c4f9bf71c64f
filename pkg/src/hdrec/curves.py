"""Sweep-point export: CSV plus a static SVG line chart (log photon axis)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .sweep import SweepPoint

CSV_HEADER = ["series", "n_pairs", "b0_low", "total_photons", "proj_ssim", "proj_psnr", "recon_ssim"]

_SERIES_COLORS = (
    "#2a9d2a",
    "#1f6fd0",
    "#d8a400",
    "#e07020",
    "#9040c0",
    "#20a0a0",
)


def _series_name(point: SweepPoint) -> str:
    return "uniform" if point.baseline else f"pairs{point.n_pairs}"


def points_to_csv(points: list[SweepPoint], path) -> None:
    if not points:
        raise ParameterError("no sweep points to export")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for p in points:
            writer.writerow(
                [
                    _series_name(p),
                    p.n_pairs,
                    repr(p.b0_low),
                    repr(p.total_photons),
                    repr(p.proj_mean_ssim),
                    repr(p.proj_mean_psnr),
                    repr(p.recon_ssim),
                ]
            )


def load_points(path) -> list[SweepPoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise ParameterError(f"{path}: bad sweep CSV header")
    points = []
    for series, n_pairs, b0_low, budget, pssim, ppsnr, rssim in rows[1:]:
        points.append(
            SweepPoint(
                n_pairs=int(n_pairs),
                b0_low=float(b0_low),
                total_photons=float(budget),
                proj_mean_ssim=float(pssim),
                proj_mean_psnr=float(ppsnr),
                recon_ssim=float(rssim),
                baseline=(series == "uniform"),
            )
        )
    return points


def _svg_chart(points: list[SweepPoint], value_of, ylabel: str) -> str:
    width, height = 640, 420
    ml, mr, mt, mb = 70, 20, 20, 50
    xs = np.log10([p.total_photons for p in points])
    ys = np.array([value_of(p) for p in points])
    x0, x1 = xs.min(), xs.max()
    y0, y1 = ys.min(), ys.max()
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 0.05, y1 + 0.05

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * (width - ml - mr)

    def sy(v):
        return height - mb - (v - y0) / (y1 - y0) * (height - mt - mb)

    series: dict[str, list[SweepPoint]] = {}
    for p in points:
        series.setdefault(_series_name(p), []).append(p)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" height="{height - mt - mb}" '
        'fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        'font-size="13">total photons (log10)</text>',
        f'<text x="16" y="{height / 2:.1f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {height / 2:.1f})">{ylabel}</text>',
    ]
    for tick in np.linspace(x0, x1, 5):
        parts.append(
            f'<text x="{sx(tick):.1f}" y="{height - mb + 16}" text-anchor="middle" '
            f'font-size="11">{tick:.2f}</text>'
        )
    for tick in np.linspace(y0, y1, 5):
        parts.append(
            f'<text x="{ml - 6}" y="{sy(tick) + 4:.1f}" text-anchor="end" '
            f'font-size="11">{tick:.3f}</text>'
        )
    for i, (name, pts) in enumerate(sorted(series.items())):
        color = _SERIES_COLORS[i % len(_SERIES_COLORS)]
        pts = sorted(pts, key=lambda p: p.total_photons)
        coords = " ".join(
            f"{sx(np.log10(p.total_photons)):.2f},{sy(value_of(p)):.2f}" for p in pts
        )
        if len(pts) > 1:
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        for p in pts:
            parts.append(
                f'<circle cx="{sx(np.log10(p.total_photons)):.2f}" '
                f'cy="{sy(value_of(p)):.2f}" r="3.5" fill="{color}"/>'
            )
        parts.append(
            f'<text x="{width - mr - 8}" y="{mt + 16 + 14 * i}" text-anchor="end" '
            f'font-size="12" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def emit_curves(points: list[SweepPoint], base_path) -> tuple[Path, Path]:
    """Write <base>.csv and <base>.svg; returns both paths."""
    if not points:
        raise ParameterError("no sweep points to export")
    base = Path(base_path)
    csv_path = base.with_suffix(".csv")
    svg_path = base.with_suffix(".svg")
    points_to_csv(points, csv_path)
    svg_path.write_text(
        _svg_chart(points, lambda p: p.proj_mean_ssim, "projection SSIM"),
        encoding="utf-8",
    )
    return csv_path, svg_path
