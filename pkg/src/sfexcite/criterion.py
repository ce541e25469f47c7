"""Space-filling objective: sum of nearest-neighbor distances from the
supporting points to the (committed + predicted) regressor rows."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .core import ConfigurationError
from .sampling import SupportingSet


@dataclass
class NnCache:
    """Per-supporting-point nearest-neighbor distance to all committed rows.

    Collapses the committed part of the design into one scalar per
    supporting point so that horizon evaluations only scan L rows.
    """

    committed_nn_dist: np.ndarray
    committed_count: int = 0

    @classmethod
    def empty(cls, n_psi: int) -> "NnCache":
        return cls(np.full(n_psi, np.inf), 0)

    def copy(self) -> "NnCache":
        return NnCache(self.committed_nn_dist.copy(), self.committed_count)

    @property
    def total(self) -> float:
        return float(np.sum(self.committed_nn_dist))


def cache_commit(cache: NnCache, new_row: np.ndarray, psi: SupportingSet) -> NnCache:
    """New cache with one more committed row folded into the distances."""
    new_row = np.asarray(new_row, dtype=float)
    if new_row.shape[0] != psi.points.shape[1]:
        raise ConfigurationError(
            f"row dimension {new_row.shape[0]} != psi dimension {psi.points.shape[1]}"
        )
    if cache.committed_nn_dist.shape[0] != len(psi):
        raise ConfigurationError("cache size does not match supporting set")
    d = np.linalg.norm(psi.points - new_row, axis=1)
    return NnCache(np.minimum(cache.committed_nn_dist, d), cache.committed_count + 1)


def criterion_value(regressors: np.ndarray, psi: SupportingSet,
                    cache: NnCache | None = None) -> float:
    """J = sum over psi of the nearest-neighbor distance to the design rows.

    With a cache, ``regressors`` holds only the rows not yet committed and
    the min is taken against the cached committed distances.
    """
    regressors = np.atleast_2d(np.asarray(regressors, dtype=float))
    if cache is None and regressors.shape[0] < 1:
        raise ConfigurationError("criterion needs at least one design row")
    if regressors.size and regressors.shape[1] != psi.points.shape[1]:
        raise ConfigurationError(
            f"regressor dimension {regressors.shape[1]} != psi dimension "
            f"{psi.points.shape[1]}"
        )
    if regressors.shape[0]:
        nn = cdist(psi.points, regressors).min(axis=1)
    else:
        nn = np.full(len(psi), np.inf)
    if cache is not None:
        if cache.committed_nn_dist.shape[0] != len(psi):
            raise ConfigurationError("cache size does not match supporting set")
        nn = np.minimum(nn, cache.committed_nn_dist)
    return float(np.sum(nn))


def criterion_value_and_gradient(horizon_rows: np.ndarray, rows_jac: np.ndarray,
                                 psi: SupportingSet, cache: NnCache,
                                 zero_tol: float = 1e-12):
    """Criterion over cache + horizon rows and its gradient w.r.t. the
    candidate inputs.

    For each supporting point the argmin row is frozen (lowest index on
    ties); points whose nearest neighbor is a committed row contribute no
    gradient, and exact-hit points (distance below zero_tol) contribute the
    zero subgradient. Returns (J, gradient of shape rows_jac.shape[2:]).
    """
    horizon_rows = np.atleast_2d(horizon_rows)
    d_h = cdist(psi.points, horizon_rows)            # (n_psi, L)
    idx = np.argmin(d_h, axis=1)                     # lowest index wins ties
    d_best = d_h[np.arange(len(psi)), idx]
    committed = cache.committed_nn_dist
    use_horizon = d_best < committed                 # committed row wins ties
    J = float(np.sum(np.where(use_horizon, d_best, committed)))

    grad = np.zeros(rows_jac.shape[2:])
    active = use_horizon & (d_best > zero_tol)
    if np.any(active):
        # d|x - psi|/dx = (x - psi)/|x - psi|, accumulated per horizon row
        diffs = (horizon_rows[idx[active]] - psi.points[active]) / d_best[active, None]
        g_rows = np.zeros((horizon_rows.shape[0], horizon_rows.shape[1]))
        np.add.at(g_rows, idx[active], diffs)
        grad = np.tensordot(g_rows, rows_jac, axes=([0, 1], [0, 1]))
    return J, grad
