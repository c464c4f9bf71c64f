"""On-disk formats.

Stacks and phantoms are stored as a UTF-8 ``key=value`` header next to a raw
payload of 32-bit little-endian floats (row-major).  The payload sits at
``<header path>.f32``.  Headers carry full-precision decimal angles, so a
write/read round trip is bit-exact on every field.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import (
    InvariantViolationError,
    LengthMismatchError,
    MalformedHeaderError,
    ParameterError,
    UnknownDomainError,
)
from .types import Domain, Phantom, ProjectionStack, QualityReport

STACK_MAGIC = "HDREC1"
PHANTOM_MAGIC = "HDRECP"


def payload_path(path) -> Path:
    return Path(str(path) + ".f32")


def _write_header(path: Path, fields: dict) -> None:
    lines = [f"{k}={v}" for k, v in fields.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_header(path: Path) -> dict:
    fields = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedHeaderError(f"{path}: header is not UTF-8") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if "=" not in line:
            raise MalformedHeaderError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    return fields


def _read_payload(path: Path, expected: int) -> np.ndarray:
    raw = payload_path(path).read_bytes()
    if len(raw) % 4:
        raise LengthMismatchError(f"{path}: payload size {len(raw)} not a multiple of 4")
    values = np.frombuffer(raw, dtype="<f4")
    if values.size != expected:
        raise LengthMismatchError(
            f"{path}: payload holds {values.size} floats, header implies {expected}"
        )
    return values


def _require(fields: dict, key: str, path) -> str:
    if key not in fields:
        raise MalformedHeaderError(f"{path}: missing header key '{key}'")
    return fields[key]


def _parse_int(fields: dict, key: str, path) -> int:
    raw = _require(fields, key, path)
    try:
        return int(raw)
    except ValueError as exc:
        raise MalformedHeaderError(f"{path}: key '{key}' is not an integer: {raw!r}") from exc


def write_stack(stack: ProjectionStack, path) -> None:
    path = Path(path)
    angles = ",".join(repr(float(a)) for a in stack.angles)
    _write_header(
        path,
        {
            "magic": STACK_MAGIC,
            "domain": stack.domain.value,
            "n_angles": stack.n_angles,
            "n_det": stack.n_det,
            "angles": angles,
        },
    )
    payload_path(path).write_bytes(
        np.ascontiguousarray(stack.values, dtype="<f4").tobytes()
    )


def read_stack(path) -> ProjectionStack:
    path = Path(path)
    fields = _read_header(path)
    if fields.get("magic") != STACK_MAGIC:
        raise MalformedHeaderError(
            f"{path}: bad magic {fields.get('magic')!r}, expected {STACK_MAGIC}"
        )
    domain_raw = _require(fields, "domain", path)
    try:
        domain = Domain(domain_raw)
    except ValueError as exc:
        raise UnknownDomainError(f"{path}: unknown domain tag {domain_raw!r}") from exc
    n_angles = _parse_int(fields, "n_angles", path)
    n_det = _parse_int(fields, "n_det", path)
    angles_raw = _require(fields, "angles", path)
    try:
        angles = np.array(
            [float(a) for a in angles_raw.split(",")] if angles_raw else [],
            dtype=np.float64,
        )
    except ValueError as exc:
        raise MalformedHeaderError(f"{path}: unparseable angles list") from exc
    if angles.size != n_angles:
        raise LengthMismatchError(
            f"{path}: header lists {angles.size} angles but n_angles={n_angles}"
        )
    values = _read_payload(path, n_angles * n_det).reshape(n_angles, n_det)
    try:
        return ProjectionStack(angles, values, domain)
    except ParameterError as exc:
        raise InvariantViolationError(f"{path}: {exc}") from exc


def write_phantom(phantom: Phantom, path) -> None:
    path = Path(path)
    _write_header(
        path,
        {
            "magic": PHANTOM_MAGIC,
            "width": phantom.width,
            "height": phantom.height,
        },
    )
    payload_path(path).write_bytes(
        np.ascontiguousarray(phantom.mu, dtype="<f4").tobytes()
    )


def read_phantom(path) -> Phantom:
    path = Path(path)
    fields = _read_header(path)
    if fields.get("magic") != PHANTOM_MAGIC:
        raise MalformedHeaderError(
            f"{path}: bad magic {fields.get('magic')!r}, expected {PHANTOM_MAGIC}"
        )
    width = _parse_int(fields, "width", path)
    height = _parse_int(fields, "height", path)
    values = _read_payload(path, width * height).reshape(height, width)
    try:
        return Phantom(values)
    except ParameterError as exc:
        raise InvariantViolationError(f"{path}: {exc}") from exc


def write_image(image: np.ndarray, path) -> None:
    """Persist a reconstructed image in the phantom file layout.

    Unlike phantoms, reconstructions may carry negative values (filter
    ringing), so this skips the Phantom non-negativity check.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ParameterError("image must be 2D")
    path = Path(path)
    _write_header(
        path,
        {
            "magic": PHANTOM_MAGIC,
            "width": image.shape[1],
            "height": image.shape[0],
        },
    )
    payload_path(path).write_bytes(np.ascontiguousarray(image, dtype="<f4").tobytes())


def read_image(path) -> np.ndarray:
    """Read a phantom-layout file as a bare array (no invariant checks)."""
    path = Path(path)
    fields = _read_header(path)
    if fields.get("magic") != PHANTOM_MAGIC:
        raise MalformedHeaderError(
            f"{path}: bad magic {fields.get('magic')!r}, expected {PHANTOM_MAGIC}"
        )
    width = _parse_int(fields, "width", path)
    height = _parse_int(fields, "height", path)
    return _read_payload(path, width * height).reshape(height, width).copy()


def write_quality_report(report: QualityReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "ssim", "psnr"])
        for index, ssim_v, psnr_v in report.per_item:
            writer.writerow([index, repr(ssim_v), repr(psnr_v)])


def read_quality_report(path) -> QualityReport:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["index", "ssim", "psnr"]:
        raise MalformedHeaderError(f"{path}: bad quality CSV header")
    items = [(int(i), float(s), float(p)) for i, s, p in rows[1:]]
    return QualityReport(tuple(items))
