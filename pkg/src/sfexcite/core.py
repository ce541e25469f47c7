"""Shared domain types: NARX geometry, operating regions, datasets."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class ConfigurationError(ValueError):
    """Raised when dimensions, bounds, or parameters are inconsistent."""


@dataclass(frozen=True)
class NarxConfig:
    """Signal geometry of a NARX structure.

    The regression vector stacks, per channel, the current input together
    with ``m - 1`` lagged inputs, followed by ``m`` lagged outputs:

        x(k) = [u_1(k) .. u_1(k-m+1), ..., u_nu(k) .. u_nu(k-m+1),
                y_1(k-1) .. y_1(k-m), ..., y_ny(k-1) .. y_ny(k-m)]

    so that the one-step predictor maps x(k) -> y(k). Channel-major,
    then lag-major (newest first).
    """

    n_u: int = 1
    n_y: int = 1
    m: int = 1
    T_s: float = 1.0

    def __post_init__(self):
        if self.n_u < 1 or self.n_y < 1 or self.m < 1:
            raise ConfigurationError(
                f"n_u, n_y, m must be >= 1, got ({self.n_u}, {self.n_y}, {self.m})"
            )
        if not self.T_s > 0:
            raise ConfigurationError(f"T_s must be > 0, got {self.T_s}")

    @property
    def p(self) -> int:
        """Regressor dimension m * (n_u + n_y)."""
        return self.m * (self.n_u + self.n_y)

    def to_dict(self) -> dict:
        return {"n_u": self.n_u, "n_y": self.n_y, "m": self.m, "T_s": self.T_s}


@dataclass(frozen=True)
class Region:
    """Axis-aligned box with per-axis bounds, lower[i] < upper[i]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ConfigurationError("region bounds must be 1-d arrays of equal length")
        if not np.all(lo < hi):
            raise ConfigurationError("region requires lower[i] < upper[i] on every axis")
        lo.setflags(write=False)
        hi.setflags(write=False)

    @classmethod
    def unit(cls, dim: int) -> "Region":
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def cube(cls, dim: int, lo: float, hi: float) -> "Region":
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def extent(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, v, atol: float = 0.0) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(
            np.all(v >= self.lower - atol) and np.all(v <= self.upper + atol)
        )

    def contains_rows(self, rows: np.ndarray, atol: float = 0.0) -> np.ndarray:
        """Per-row containment mask for an (n, dim) array."""
        rows = np.asarray(rows, dtype=float)
        return np.all(
            (rows >= self.lower - atol) & (rows <= self.upper + atol), axis=1
        )

    def clip(self, rows: np.ndarray) -> np.ndarray:
        return np.clip(rows, self.lower, self.upper)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


class DatasetOrigin(str, Enum):
    MEASURED = "measured"
    PREDICTED = "surrogate-predicted"


@dataclass(frozen=True)
class InitialState:
    """Regressor-space vector holding the pre-experiment lags.

    Layout matches the regression vector: per input channel the lags
    u(0) .. u(1-m), per output channel the lags y(0) .. y(1-m).
    """

    x0: np.ndarray

    def __post_init__(self):
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.ndim != 1:
            raise ConfigurationError("initial state must be a flat vector")
        object.__setattr__(self, "x0", x0)
        x0.setflags(write=False)

    @classmethod
    def constant(cls, config: NarxConfig, u0: float = 0.0, y0: float = 0.5) -> "InitialState":
        """All input lags at u0 and all output lags at y0."""
        x0 = np.concatenate(
            [np.full(config.m * config.n_u, u0), np.full(config.m * config.n_y, y0)]
        )
        return cls(x0)

    def input_lags(self, config: NarxConfig) -> np.ndarray:
        """(n_u, m) array, lag index 0 = u(0) (newest)."""
        return self.x0[: config.m * config.n_u].reshape(config.n_u, config.m)

    def output_lags(self, config: NarxConfig) -> np.ndarray:
        """(n_y, m) array, lag index 0 = y(0) (newest)."""
        return self.x0[config.m * config.n_u :].reshape(config.n_y, config.m)


@dataclass(frozen=True)
class Dataset:
    """Time-indexed excitation data: inputs (N, n_u) and outputs (N, n_y).

    Row j holds the input u(j) applied during step j and the resulting
    output y(j).
    """

    inputs: np.ndarray
    outputs: np.ndarray
    origin: DatasetOrigin = DatasetOrigin.MEASURED

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if u.ndim != 2 or y.ndim != 2:
            raise ConfigurationError("inputs and outputs must be 2-d arrays")
        if u.shape[0] != y.shape[0]:
            raise ConfigurationError(
                f"inputs ({u.shape[0]} rows) and outputs ({y.shape[0]} rows) disagree"
            )
        object.__setattr__(self, "inputs", u)
        object.__setattr__(self, "outputs", y)
        u.setflags(write=False)
        y.setflags(write=False)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def to_csv(self, path: str | Path) -> None:
        n_u, n_y = self.inputs.shape[1], self.outputs.shape[1]
        header = [f"u_{i + 1}" for i in range(n_u)] + [f"y_{i + 1}" for i in range(n_y)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for u_row, y_row in zip(self.inputs, self.outputs):
                writer.writerow([repr(float(v)) for v in u_row] + [repr(float(v)) for v in y_row])

    @classmethod
    def from_csv(cls, path: str | Path, n_u: int, n_y: int,
                 origin: DatasetOrigin = DatasetOrigin.MEASURED) -> "Dataset":
        data = np.genfromtxt(path, delimiter=",", skip_header=1, ndmin=2)
        if data.shape[1] < n_u + n_y:
            raise ConfigurationError(
                f"CSV has {data.shape[1]} columns, expected at least {n_u + n_y}"
            )
        return cls(data[:, :n_u], data[:, n_u : n_u + n_y], origin)

    def provenance_record(self, config: NarxConfig, init: InitialState) -> dict:
        return {
            "config": config.to_dict(),
            "init": init.x0.tolist(),
            "origin": self.origin.value,
            "n_rows": len(self),
        }

    def to_json(self, path: str | Path, config: NarxConfig, init: InitialState) -> None:
        record = self.provenance_record(config, init)
        record["inputs"] = self.inputs.tolist()
        record["outputs"] = self.outputs.tolist()
        Path(path).write_text(json.dumps(record, indent=2))


def build_regressors(config: NarxConfig, dataset: Dataset, init: InitialState) -> np.ndarray:
    """Regressor matrix (N, p) for a dataset.

    Row j stacks the current input u(j) with m-1 lagged inputs and m lagged
    outputs; lags reaching before step 1 are filled from the initial state.
    This pairing (current input, previous outputs) is the one the one-step
    predictor consumes to produce y(j).
    """
    if len(dataset) < 1:
        raise ConfigurationError("dataset must contain at least one row")
    if dataset.inputs.shape[1] != config.n_u or dataset.outputs.shape[1] != config.n_y:
        raise ConfigurationError(
            f"dataset channels ({dataset.inputs.shape[1]}, {dataset.outputs.shape[1]}) "
            f"do not match config ({config.n_u}, {config.n_y})"
        )
    if init.x0.shape[0] != config.p:
        raise ConfigurationError(
            f"initial state dimension {init.x0.shape[0]} != p = {config.p}"
        )

    N, m = len(dataset), config.m
    # Prepend lags so that padded index m-1+j corresponds to time step j.
    # Input lags needed: u(j) .. u(j-m+1); init supplies u(0) .. u(2-m).
    u_init = init.input_lags(config)[:, : m - 1][:, ::-1].T if m > 1 else np.empty((0, config.n_u))
    y_init = init.output_lags(config)[:, ::-1].T
    u_pad = np.vstack([u_init, dataset.inputs])
    y_pad = np.vstack([y_init, dataset.outputs])

    rows = np.empty((N, config.p), dtype=float)
    for j in range(N):
        # u(j) down to u(j-m+1): padded indices (m-1+j) down to j
        u_block = u_pad[j : j + m][::-1]       # (m, n_u), newest first
        # y(j-1) down to y(j-m): padded indices (m-2+j) down to (j-1)
        y_block = y_pad[j : j + m][::-1]       # (m, n_y), newest first
        rows[j, : m * config.n_u] = u_block.T.ravel()
        rows[j, m * config.n_u :] = y_block.T.ravel()
    return rows


def regressor_row(config: NarxConfig, u_now: np.ndarray,
                  u_lags: np.ndarray, y_lags: np.ndarray) -> np.ndarray:
    """Single regressor row from the current input and lag buffers.

    ``u_lags`` is (n_u, m-1) and ``y_lags`` is (n_y, m), both newest first.
    """
    u_now = np.atleast_1d(np.asarray(u_now, dtype=float))
    u_part = np.column_stack([u_now.reshape(config.n_u, 1), u_lags]) if config.m > 1 \
        else u_now.reshape(config.n_u, 1)
    return np.concatenate([u_part.ravel(), y_lags.ravel()])
