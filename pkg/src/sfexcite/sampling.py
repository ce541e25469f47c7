"""Low-discrepancy point generation for supporting and evaluation sets."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from .core import ConfigurationError, Region

MAX_SOBOL_DIM = 32


def _gray_inverse(indices: np.ndarray) -> np.ndarray:
    """Inverse of the binary Gray code g(i) = i ^ (i >> 1)."""
    out = indices.copy()
    shift = 1
    while shift < 64:
        out ^= out >> shift
        shift *= 2
    return out


def sobol(dim: int, n: int) -> np.ndarray:
    """First n points of the unscrambled Sobol sequence in natural order.

    scipy generates the sequence in Gray-code order, where generated point k
    is the natural-order point with index gray(k); permuting a full 2^m block
    with the inverse Gray code recovers natural order, of which the first n
    points are returned. Deterministic for fixed (dim, n), starts at the
    origin.
    """
    if not 1 <= dim <= MAX_SOBOL_DIM:
        raise ConfigurationError(f"sobol supports 1 <= dim <= {MAX_SOBOL_DIM}, got {dim}")
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    m = max(int(np.ceil(np.log2(n))), 0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        block = qmc.Sobol(d=dim, scramble=False).random_base2(m)
    order = _gray_inverse(np.arange(2**m, dtype=np.uint64)).astype(np.intp)
    return block[order][:n]


@dataclass(frozen=True)
class SupportingSet:
    """Sobol-distributed target points inside the region of interest."""

    points: np.ndarray
    region: Region

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 1:
            raise ConfigurationError("supporting set needs at least one point")
        if not np.all(self.region.contains_rows(pts)):
            raise ConfigurationError("supporting points must lie inside the region of interest")
        object.__setattr__(self, "points", pts)
        pts.setflags(write=False)

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"psi_{i + 1}" for i in range(self.points.shape[1])])
            for row in self.points:
                writer.writerow([repr(float(v)) for v in row])


def scale_to_region(unit_points: np.ndarray, region: Region) -> np.ndarray:
    """Affine map of [0, 1]^d points into an axis-aligned box."""
    return region.lower + unit_points * region.extent


def supporting_set(region_of_interest: Region, n_psi: int) -> SupportingSet:
    """Sobol points affinely rescaled into the region of interest."""
    if n_psi < 1:
        raise ConfigurationError(f"n_psi must be >= 1, got {n_psi}")
    pts = scale_to_region(sobol(region_of_interest.dim, n_psi), region_of_interest)
    return SupportingSet(pts, region_of_interest)


def default_n_psi(n: int) -> int:
    """Default supporting-set size: five points per designed sample."""
    return 5 * n
