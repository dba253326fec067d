"""Uniformity statistics, radial distribution checks and heatmap export."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .adaptive_control import InsufficientData
from .geometry import CellGrid
from .ideal_process import DomainError, IdealParams, radial_cdf


@dataclass(frozen=True)
class UniformityReport:
    means: tuple[float, ...]
    areas: tuple[float, ...]
    densities: tuple[float, ...]
    grand_density: float
    max_relative_deviation: float
    chi_square: float
    ks: float | None = None


def uniformity_report(
    means: Sequence[float],
    areas: Sequence[float] | None = None,
    radial_samples: Sequence[float] | None = None,
    params: IdealParams | None = None,
) -> UniformityReport:
    """Compare per-cell occupancy densities against the pooled density.

    With unequal cell areas the comparison is per unit area. The chi-square
    statistic uses ``grand_density * area`` as the expected occupancy.
    """
    m = np.asarray(means, dtype=float)
    a = np.ones_like(m) if areas is None else np.asarray(areas, dtype=float)
    if m.ndim != 1 or m.size < 2:
        raise InsufficientData("need at least two cells")
    if a.shape != m.shape:
        raise ValueError("means and areas differ in length")
    if np.any(a <= 0) or np.any(m < 0):
        raise ValueError("areas must be positive and means nonnegative")
    grand = m.sum() / a.sum()
    if not grand > 0:
        raise InsufficientData("all cells have zero occupancy")
    dens = m / a
    expected = grand * a
    ks = ks_radial(radial_samples, params) if radial_samples is not None and params is not None else None
    return UniformityReport(
        tuple(m.tolist()),
        tuple(a.tolist()),
        tuple(dens.tolist()),
        float(grand),
        float(np.max(np.abs(dens - grand)) / grand),
        float(np.sum((m - expected) ** 2 / expected)),
        ks,
    )


def ks_radial(samples: Sequence[float], params: IdealParams) -> float:
    """Sup distance between the empirical CDF of ``samples`` and the area-uniform radial CDF."""
    r = np.sort(np.asarray(samples, dtype=float))
    if r.size == 0:
        raise DomainError("no samples")
    f = radial_cdf(r, params)  # raises DomainError outside [gamma, rho]
    n = r.size
    # ties: the ECDF jumps once per distinct value, so compare at run ends
    hi = np.searchsorted(r, r, side="right") / n
    lo = np.searchsorted(r, r, side="left") / n
    return float(max(np.max(hi - f), np.max(f - lo)))


def coefficient_of_variation(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=float)
    mu = v.mean()
    if not mu > 0:
        raise InsufficientData("mean is not positive")
    return float(v.std() / mu)


# ------------------------------------------------------------------ heatmaps


@dataclass(frozen=True)
class Heatmap:
    """Per-cell scalar plus the layout needed to draw it.

    ``positions`` holds each cell's (row, col) with row 0 at the top; cells
    missing from the layout are drawn as 0.
    """

    values: tuple[float, ...]
    shape: tuple[int, int]
    positions: tuple[tuple[int, int], ...]
    label: str = "mean_occupancy"

    def __post_init__(self):
        if not self.values:
            raise ValueError("empty heatmap")
        if any(not (v >= 0) for v in self.values):
            raise ValueError("heatmap values must be nonnegative")
        if len(self.positions) != len(self.values):
            raise ValueError("one position per value")

    @property
    def scale(self) -> float:
        """Value mapped to full scale."""
        return max(self.values)

    @classmethod
    def for_grid(cls, grid: CellGrid, values: Sequence[float], label: str = "mean_occupancy") -> "Heatmap":
        values = tuple(float(v) for v in values)
        shape = grid.shape()
        if shape is None:  # wedges: one row, in angular order
            return cls(values, (1, len(values)), tuple((0, i) for i in range(len(values))), label)
        rows, cols = shape
        pos = []
        for c in grid.cells:
            r, k = grid.tile_position(c)
            pos.append((rows - 1 - r, k))  # north up
        return cls(values, shape, tuple(pos), label)


def gray_levels(values: Sequence[float]) -> np.ndarray:
    """Map values linearly onto 0..255 with the maximum at 255, rounding half up."""
    v = np.asarray(values, dtype=float)
    top = v.max() if v.size else 0.0
    if not top > 0:
        return np.zeros(v.shape, dtype=np.uint8)
    return np.floor(v / top * 255.0 + 0.5).astype(np.uint8)


def rasterize(heatmap: Heatmap) -> np.ndarray:
    rows, cols = heatmap.shape
    out = np.zeros((rows, cols), dtype=np.uint8)
    for (r, c), g in zip(heatmap.positions, gray_levels(heatmap.values)):
        out[r, c] = g
    return out


def write_pgm(path: str | Path, raster: np.ndarray) -> None:
    raster = np.asarray(raster, dtype=np.uint8)
    if raster.ndim != 2:
        raise ValueError("raster must be 2-D")
    h, w = raster.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(raster.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+255\s", data)
    if m is None:
        raise ValueError("not an 8-bit P5 graymap")
    w, h = int(m.group(1)), int(m.group(2))
    return np.frombuffer(data[m.end() : m.end() + w * h], dtype=np.uint8).reshape(h, w)


def write_tsv(path: str | Path, header: Sequence[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else "nan"
    return str(x)
