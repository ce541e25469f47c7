"""Receding-horizon excitation design: multi-start projected-gradient
optimization of the space-filling criterion, committing one input per step."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .core import ConfigurationError, InitialState, NarxConfig, Region
from .criterion import NnCache, cache_commit, criterion_value_and_gradient
from .process import Plant
from .sampling import SupportingSet
from .surrogate import (
    DEFAULT_MAX_MODELS,
    DEFAULT_SIGMA_FACTOR,
    LagState,
    Surrogate,
    lolimot_fit_xy,
    rollout_horizon,
    rollout_horizon_jacobian,
)

ARMIJO_C = 1e-4
BACKTRACK_MAX = 25
STATE_TOL = 1e-9


class DesignerError(RuntimeError):
    """Raised when the horizon optimization cannot produce a feasible result."""


class DesignMode(str, Enum):
    OFFLINE_FIXED = "offline-fixed"
    ONLINE_ADAPTIVE = "online-adaptive"


@dataclass(frozen=True)
class DesignerConfig:
    N: int
    L: int
    mode: DesignMode = DesignMode.OFFLINE_FIXED
    restarts: int = 5
    max_grad_steps: int = 50
    rel_tol: float = 1e-6
    state_penalty_weight: float = 1e3
    rng_seed: int = 0
    lolimot_max_models: int = DEFAULT_MAX_MODELS
    lolimot_sigma_factor: float = DEFAULT_SIGMA_FACTOR

    def __post_init__(self):
        if self.N < 1 or self.L < 1 or self.restarts < 1:
            raise ConfigurationError("N, L, and restarts must all be >= 1")
        if self.state_penalty_weight < 0:
            raise ConfigurationError("state_penalty_weight must be >= 0")


@dataclass
class DesignRun:
    """Committed signal plus full provenance of one design run."""

    inputs: np.ndarray
    predicted_outputs: np.ndarray
    measured_outputs: np.ndarray | None
    J_trace: np.ndarray
    violation_count: int
    surrogate_snapshots: list
    config: DesignerConfig
    completed: bool = True

    def to_csv(self, path: str | Path) -> None:
        n_u = self.inputs.shape[1]
        n_y = self.predicted_outputs.shape[1]
        header = [f"u_{i + 1}" for i in range(n_u)]
        header += [f"yhat_{i + 1}" for i in range(n_y)]
        if self.measured_outputs is not None:
            header += [f"y_{i + 1}" for i in range(n_y)]
        header.append("J")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for k in range(self.inputs.shape[0]):
                row = [repr(float(v)) for v in self.inputs[k]]
                row += [repr(float(v)) for v in self.predicted_outputs[k]]
                if self.measured_outputs is not None:
                    row += [repr(float(v)) for v in self.measured_outputs[k]]
                row.append(repr(float(self.J_trace[k])))
                writer.writerow(row)

    def to_json(self, path: str | Path) -> None:
        record = {
            "mode": self.config.mode.value,
            "N": self.config.N,
            "L": self.config.L,
            "restarts": self.config.restarts,
            "max_grad_steps": self.config.max_grad_steps,
            "state_penalty_weight": self.config.state_penalty_weight,
            "rng_seed": self.config.rng_seed,
            "completed": self.completed,
            "violation_count": self.violation_count,
            "J_final": float(self.J_trace[-1]) if self.J_trace.size else None,
            "surrogate_snapshots": self.surrogate_snapshots,
        }
        Path(path).write_text(json.dumps(record, indent=2))


class HorizonContext:
    """Read-only context for one horizon optimization.

    Distances are computed on regressor rows affinely normalized with the
    admissible-region bounds so that all channels are commensurable.
    """

    def __init__(self, surrogate: Surrogate, state: LagState, cache: NnCache,
                 psi_scaled: np.ndarray, u_region: Region, x_region: Region,
                 penalty_weight: float):
        self.surrogate = surrogate
        self.state = state
        self.cache = cache
        self.psi_scaled = psi_scaled
        self.u_region = u_region
        self.x_region = x_region
        self.penalty_weight = penalty_weight
        self.x_lo = x_region.lower
        self.x_scale = 1.0 / x_region.extent
        self._psi_set = _RawPoints(psi_scaled)

    def scale_rows(self, rows: np.ndarray) -> np.ndarray:
        return (rows - self.x_lo) * self.x_scale

    def objective(self, candidate: np.ndarray) -> float:
        rows, _ = rollout_horizon(self.surrogate, self.state, candidate)
        scaled = self.scale_rows(rows)
        nn = cdist(self.psi_scaled, scaled).min(axis=1)
        J = float(np.sum(np.minimum(nn, self.cache.committed_nn_dist)))
        return J + self._penalty(scaled)

    def objective_and_gradient(self, candidate: np.ndarray):
        rows, _, rows_jac = rollout_horizon_jacobian(
            self.surrogate, self.state, candidate
        )
        scaled = self.scale_rows(rows)
        jac_scaled = rows_jac * self.x_scale[None, :, None, None]
        J, grad = criterion_value_and_gradient(
            scaled, jac_scaled, self._psi_set, self.cache
        )
        pen, pen_grad = self._penalty_and_gradient(scaled, jac_scaled)
        return J + pen, grad + pen_grad

    def _violation(self, scaled_rows: np.ndarray) -> np.ndarray:
        # hinge in normalized coordinates; admissible box maps to [0, 1]^p
        return np.maximum(0.0, -scaled_rows) + np.maximum(0.0, scaled_rows - 1.0)

    def _penalty(self, scaled_rows: np.ndarray) -> float:
        if self.penalty_weight == 0.0:
            return 0.0
        h = self._violation(scaled_rows)
        return self.penalty_weight * float(np.sum(h * h))

    def _penalty_and_gradient(self, scaled_rows: np.ndarray, jac_scaled: np.ndarray):
        if self.penalty_weight == 0.0:
            return 0.0, 0.0
        h = self._violation(scaled_rows)
        pen = self.penalty_weight * float(np.sum(h * h))
        sign = np.where(scaled_rows > 1.0, 1.0, np.where(scaled_rows < 0.0, -1.0, 0.0))
        dpen_drows = 2.0 * self.penalty_weight * h * sign
        grad = np.tensordot(dpen_drows, jac_scaled, axes=([0, 1], [0, 1]))
        return pen, grad


class _RawPoints:
    """Minimal stand-in exposing pre-scaled points as a supporting set."""

    def __init__(self, points: np.ndarray):
        self.points = points

    def __len__(self) -> int:
        return self.points.shape[0]


def _projected_descent(ctx: HorizonContext, candidate: np.ndarray,
                       max_steps: int, rel_tol: float):
    """Projected gradient descent with backtracking line search.

    Inputs are kept feasible by clamping to the input box after every step.
    Returns (candidate, objective); objective is inf when every evaluation
    was non-finite.
    """
    lo, hi = ctx.u_region.lower, ctx.u_region.upper
    cand = np.clip(candidate, lo, hi)
    f, g = ctx.objective_and_gradient(cand)
    if not np.isfinite(f):
        return cand, np.inf
    alpha = None
    for _ in range(max_steps):
        g_max = np.max(np.abs(g))
        if g_max == 0.0:
            break
        if alpha is None:
            alpha = float(np.max(hi - lo)) / g_max  # first trial spans the box
        accepted = False
        for _ in range(BACKTRACK_MAX):
            trial = np.clip(cand - alpha * g, lo, hi)
            step = cand - trial
            if not np.any(step):
                break
            f_trial = ctx.objective(trial)
            if np.isfinite(f_trial) and f_trial <= f - ARMIJO_C * np.sum(g * step):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        improvement = f - f_trial
        cand = trial
        f, g = ctx.objective_and_gradient(cand)
        alpha *= 2.0
        if improvement <= rel_tol * max(abs(f), 1.0):
            break
    return cand, f


def optimize_horizon(ctx: HorizonContext, init_candidates,
                     max_grad_steps: int = 50, rel_tol: float = 1e-6):
    """Best horizon sequence over all initializations.

    Every initialization must already satisfy the input constraints; the
    returned sequence always does, by projection.
    """
    best_cand, best_f = None, np.inf
    for cand0 in init_candidates:
        cand0 = np.asarray(cand0, dtype=float)
        if not np.all(ctx.u_region.contains_rows(cand0)):
            raise ConfigurationError("initial candidate outside the input region")
        f0 = ctx.objective(cand0)
        if f0 == 0.0:
            return cand0, 0.0  # supporting set fully covered
        cand, f = _projected_descent(ctx, cand0, max_grad_steps, rel_tol)
        if f < best_f:
            best_cand, best_f = cand, f
    if best_cand is None:
        raise DesignerError("all horizon candidates produced non-finite objectives")
    return best_cand, best_f


def design(config: DesignerConfig, surrogate: Surrogate,
           plant: Plant | None, psi: SupportingSet,
           u_region: Region, x_region: Region,
           init: InitialState) -> DesignRun:
    """Run the full receding-horizon design loop.

    Offline mode advances on surrogate predictions with a fixed model;
    online mode queries the plant after each commit and refits an adaptive
    LOLIMOT network on all measured data (falling back to the given
    surrogate until p + 1 observations exist).
    """
    narx = surrogate.config
    if config.mode is DesignMode.ONLINE_ADAPTIVE and plant is None:
        raise ConfigurationError("online-adaptive mode requires a plant")
    if psi.points.shape[1] != narx.p:
        raise ConfigurationError("supporting set dimension does not match regressors")
    online = config.mode is DesignMode.ONLINE_ADAPTIVE

    rng = np.random.default_rng(config.rng_seed)
    x_lo, x_scale = x_region.lower, 1.0 / x_region.extent
    psi_scaled = (psi.points - x_lo) * x_scale
    psi_scaled_set = _RawPoints(psi_scaled)
    cache = NnCache.empty(len(psi))
    state = LagState(narx, init)
    model: Surrogate = surrogate

    inputs = np.empty((config.N, narx.n_u))
    preds = np.empty((config.N, narx.n_y))
    measured = np.empty((config.N, narx.n_y)) if online else None
    J_trace = np.empty(config.N)
    violations = 0
    committed_rows: list[np.ndarray] = []
    measured_list: list[np.ndarray] = []
    snapshots = [{"k": 0, "surrogate": model.to_dict()}]
    prev_solution = None
    completed = True
    k = 0

    def random_candidate():
        return u_region.lower + rng.random((config.L, narx.n_u)) * u_region.extent

    try:
        for k in range(config.N):
            candidates = []
            if prev_solution is not None:
                shifted = np.vstack([prev_solution[1:], prev_solution[-1:]])
                candidates.append(shifted)
            while len(candidates) < config.restarts:
                candidates.append(random_candidate())

            ctx = HorizonContext(model, state, cache, psi_scaled,
                                 u_region, x_region, config.state_penalty_weight)
            best, _ = optimize_horizon(ctx, candidates,
                                       config.max_grad_steps, config.rel_tol)
            prev_solution = best
            u_k = best[0]

            row = state.row(u_k)
            y_pred = model.predict(row)
            inputs[k] = u_k
            preds[k] = y_pred
            if online:
                y_meas = np.atleast_1d(np.asarray(plant.step(row), dtype=float))
                if not np.all(np.isfinite(y_meas)):
                    raise DesignerError(f"plant diverged at step {k + 1}")
                measured[k] = y_meas
                y_next = y_meas
            else:
                y_next = y_pred

            row_scaled = (row - x_lo) * x_scale
            if np.any(row_scaled < -STATE_TOL) or np.any(row_scaled > 1.0 + STATE_TOL):
                violations += 1
            cache = cache_commit(cache, row_scaled, psi_scaled_set)
            J_trace[k] = cache.total
            committed_rows.append(row)
            state.advance(u_k, y_next)

            if online:
                measured_list.append(y_next)
                if len(committed_rows) >= narx.p + 1:
                    model = lolimot_fit_xy(
                        np.asarray(committed_rows), np.asarray(measured_list),
                        x_region, narx,
                        max_models=config.lolimot_max_models,
                        sigma_factor=config.lolimot_sigma_factor,
                        full_gradient=True,  # exact descent directions
                    )
    except DesignerError:
        completed = False
        inputs = inputs[:k]
        preds = preds[:k]
        measured = measured[:k] if measured is not None else None
        J_trace = J_trace[:k]

    snapshots.append({"k": int(min(k + 1, config.N)), "surrogate": model.to_dict()})
    return DesignRun(
        inputs=inputs,
        predicted_outputs=preds,
        measured_outputs=measured,
        J_trace=J_trace,
        violation_count=violations,
        surrogate_snapshots=snapshots,
        config=config,
        completed=completed,
    )
