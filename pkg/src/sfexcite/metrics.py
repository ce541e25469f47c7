"""Space-filling evaluation: largest-empty-ball radius and Jensen-Shannon
divergence of a point set against the uniform reference on a region."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .core import ConfigurationError, Region
from .sampling import scale_to_region, sobol

DEFAULT_N_E = 10_000
DEFAULT_BINS_PER_AXIS = 10


@dataclass(frozen=True)
class EvaluationSet:
    """Sobol probe points covering the region of interest."""

    points: np.ndarray
    region: Region

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if not np.all(self.region.contains_rows(pts)):
            raise ConfigurationError("evaluation points must lie inside the region")
        object.__setattr__(self, "points", pts)
        pts.setflags(write=False)

    def __len__(self) -> int:
        return self.points.shape[0]


def evaluation_set(region: Region, n_e: int = DEFAULT_N_E) -> EvaluationSet:
    return EvaluationSet(scale_to_region(sobol(region.dim, n_e), region), region)


def largest_ball_radius(design: np.ndarray, eval_set: EvaluationSet) -> float:
    """Radius of the largest empty ball: max over probes of the distance to
    the nearest design point."""
    design = np.atleast_2d(np.asarray(design, dtype=float))
    if design.shape[0] < 1 or len(eval_set) < 1:
        raise ConfigurationError("both point sets must be non-empty")
    if design.shape[1] != eval_set.points.shape[1]:
        raise ConfigurationError(
            f"design dimension {design.shape[1]} != evaluation dimension "
            f"{eval_set.points.shape[1]}"
        )
    return float(cdist(eval_set.points, design).min(axis=1).max())


def radius_progress(design: np.ndarray, eval_set: EvaluationSet,
                    chunk: int = 32) -> np.ndarray:
    """R(k) on the first k design rows for k = 1..N, one incremental pass.

    Maintains the per-probe nearest-neighbor distance, folding design rows
    in chunks; equivalent to recomputing the radius on every prefix.
    """
    design = np.atleast_2d(np.asarray(design, dtype=float))
    N = design.shape[0]
    if N < 1:
        raise ConfigurationError("design must be non-empty")
    nn = np.full(len(eval_set), np.inf)
    out = np.empty(N)
    for start in range(0, N, chunk):
        block = design[start : start + chunk]
        d = cdist(eval_set.points, block)
        for j in range(block.shape[0]):
            nn = np.minimum(nn, d[:, j])
            out[start + j] = nn.max()
    return out


def _histogram_mass(design: np.ndarray, region: Region, bins_per_axis: int) -> np.ndarray:
    """Relative frequency per grid cell, flattened; outside points are
    clipped to the boundary cells."""
    design = np.atleast_2d(np.asarray(design, dtype=float))
    unit = (design - region.lower) / region.extent
    idx = np.floor(unit * bins_per_axis).astype(int)
    idx = np.clip(idx, 0, bins_per_axis - 1)
    dim = region.dim
    flat = np.zeros(bins_per_axis**dim)
    lin = np.ravel_multi_index(idx.T, (bins_per_axis,) * dim)
    np.add.at(flat, lin, 1.0)
    return flat / design.shape[0]


def _kl_bits(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def jsd_mass(p: np.ndarray, q: np.ndarray) -> float:
    """Base-2 Jensen-Shannon divergence between two mass vectors, in [0, 1]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = 0.5 * (p + q)
    return 0.5 * _kl_bits(p, m) + 0.5 * _kl_bits(q, m)


def jsd_to_uniform(design: np.ndarray, region: Region,
                   bins_per_axis: int = DEFAULT_BINS_PER_AXIS) -> float:
    """JSD between the design's cell-histogram and the uniform reference."""
    if bins_per_axis < 1:
        raise ConfigurationError("bins_per_axis must be >= 1")
    design = np.atleast_2d(np.asarray(design, dtype=float))
    if design.shape[0] < 1:
        raise ConfigurationError("design must be non-empty")
    p = _histogram_mass(design, region, bins_per_axis)
    q = np.full_like(p, 1.0 / p.shape[0])
    return jsd_mass(p, q)


@dataclass(frozen=True)
class MetricValues:
    R: float
    JSD: float
    R_progress: np.ndarray

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({
            "R": self.R,
            "JSD": self.JSD,
            "R_progress": self.R_progress.tolist(),
        }, indent=2))

    def progress_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "R"])
            for k, r in enumerate(self.R_progress, start=1):
                writer.writerow([k, repr(float(r))])


def score_design(design: np.ndarray, region: Region, eval_set: EvaluationSet,
                 bins_per_axis: int = DEFAULT_BINS_PER_AXIS) -> MetricValues:
    progress = radius_progress(design, eval_set)
    return MetricValues(
        R=float(progress[-1]),
        JSD=jsd_to_uniform(design, region, bins_per_axis),
        R_progress=progress,
    )
