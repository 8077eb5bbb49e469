"""Shape files, CSV tables, boundary SVGs and run manifests."""
from __future__ import annotations

import csv
import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ShapeFileError
from .geometry import SupportShape, boundary_point, uniform_thetas


def format_shape(shape: SupportShape) -> str:
    lines = [f"width {shape.width:.17g}"]
    for k, a, b in zip(shape.ks, shape.a, shape.b):
        lines.append(f"{int(k)} {a:.17g} {b:.17g}")
    return "\n".join(lines) + "\n"


def parse_shape(text: str) -> SupportShape:
    """Parse ``width <real>`` followed by ``k a_k b_k`` lines (odd ``k >= 3``); ``#`` starts a comment."""
    width = None
    coeffs: dict[int, tuple[float, float]] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if width is None:
            if len(parts) != 2 or parts[0] != "width":
                raise ShapeFileError(f"line {no}: expected 'width <real>' header")
            try:
                width = float(parts[1])
            except ValueError:
                raise ShapeFileError(f"line {no}: bad width {parts[1]!r}") from None
            if not width > 0 or not np.isfinite(width):
                raise ShapeFileError(f"line {no}: width must be positive")
            continue
        if len(parts) != 3:
            raise ShapeFileError(f"line {no}: expected 'k a_k b_k'")
        try:
            k = int(parts[0])
            a, b = float(parts[1]), float(parts[2])
        except ValueError:
            raise ShapeFileError(f"line {no}: cannot parse {line!r}") from None
        if k < 3 or k % 2 == 0:
            raise ShapeFileError(f"line {no}: harmonic {k} must be odd and >= 3")
        if k in coeffs:
            raise ShapeFileError(f"line {no}: duplicate harmonic {k}")
        if not (np.isfinite(a) and np.isfinite(b)):
            raise ShapeFileError(f"line {no}: non-finite coefficient")
        coeffs[k] = (a, b)
    if width is None:
        raise ShapeFileError("empty shape file")
    return SupportShape.from_dict(coeffs, width)


def read_shape(path) -> SupportShape:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ShapeFileError(f"cannot read {path}: {exc}") from exc
    return parse_shape(text)


def write_shape(shape: SupportShape, path) -> Path:
    path = Path(path)
    path.write_text(format_shape(shape))
    return path


def write_csv(path, header: list[str], rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(r)
    return path


def boundary_svg(shape: SupportShape, n_points: int = 720, size: int = 480) -> str:
    """Closed polyline through ``n_points`` boundary points, y axis pointing up."""
    pts = boundary_point(shape, uniform_thetas(n_points))
    ext = 1.1 * float(np.abs(pts).max())
    scale = size / (2 * ext)
    xs = (pts[:, 0] + ext) * scale
    ys = (ext - pts[:, 1]) * scale
    coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">\n'
        f'  <polygon points="{coords}" fill="none" stroke="black" stroke-width="1.5"/>\n'
        "</svg>\n"
    )


def write_svg(shape: SupportShape, path, n_points: int = 720) -> Path:
    path = Path(path)
    path.write_text(boundary_svg(shape, n_points))
    return path


def _versions() -> dict[str, str]:
    import scipy

    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "cweig": __version__}


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    outputs: list[str] = field(default_factory=list)
    started: float = field(default_factory=time.time)

    def add(self, path) -> Path:
        self.outputs.append(str(path))
        return Path(path)

    def write(self, out_dir) -> Path:
        """Written last; lists every artifact recorded with :meth:`add`."""
        path = Path(out_dir) / "manifest.json"
        data = {
            "command": self.command,
            "config": self.config,
            "versions": _versions(),
            "seed": self.seed,
            "wall_time_s": round(time.time() - self.started, 3),
            "outputs": self.outputs,
        }
        path.write_text(json.dumps(data, indent=2, default=str) + "\n")
        return path
