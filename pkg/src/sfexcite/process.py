"""Ground-truth plant simulators producing measured outputs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    ConfigurationError,
    Dataset,
    DatasetOrigin,
    InitialState,
    NarxConfig,
    regressor_row,
)

ATAN4 = float(np.arctan(4.0))


class SimulationDivergedError(RuntimeError):
    """Raised when a plant rollout produces NaN or infinite state."""


def hammerstein_nonlinearity(x: float) -> float:
    """Static input nonlinearity g(x) = (atan(8x - 4) + atan(4)) / (2 atan(4))."""
    return (np.arctan(8.0 * x - 4.0) + ATAN4) / (2.0 * ATAN4)


def hammerstein_step(u_prev: float, y_prev: float) -> float:
    """First-order Hammerstein recursion y = 0.2 g(u) + 0.8 y_prev."""
    return 0.2 * hammerstein_nonlinearity(u_prev) + 0.8 * y_prev


@dataclass(frozen=True)
class Plant:
    """Deterministic one-step map from a regressor row to the next output."""

    step: Callable[[np.ndarray], np.ndarray]
    config: NarxConfig
    initial: InitialState
    name: str = "plant"


def hammerstein_plant(y0: float = 0.5, u0: float = 0.0, T_s: float = 1.0) -> Plant:
    """SISO first-order Hammerstein benchmark plant."""
    config = NarxConfig(n_u=1, n_y=1, m=1, T_s=T_s)

    def step(x: np.ndarray) -> np.ndarray:
        # regressor layout for m=1: (u(k), y(k-1))
        return np.array([hammerstein_step(x[0], x[1])])

    return Plant(step=step, config=config,
                 initial=InitialState.constant(config, u0=u0, y0=y0),
                 name="hammerstein")


PLANTS: dict[str, Callable[..., Plant]] = {"hammerstein": hammerstein_plant}


def make_plant(name: str, **kwargs) -> Plant:
    try:
        factory = PLANTS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown plant '{name}', available: {sorted(PLANTS)}"
        ) from None
    return factory(**kwargs)


def simulate(plant: Plant, inputs: np.ndarray, init: InitialState | None = None) -> Dataset:
    """Roll the plant forward over an input sequence.

    Output row k is the plant's response to input row k given the lag state
    accumulated so far; the result is flagged as measured data.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    if inputs.ndim == 2 and inputs.shape[1] != plant.config.n_u and inputs.shape[0] == plant.config.n_u:
        inputs = inputs.T
    if inputs.size == 0:
        raise ConfigurationError("simulate requires a non-empty input sequence")
    if inputs.shape[1] != plant.config.n_u:
        raise ConfigurationError(
            f"inputs have {inputs.shape[1]} channels, plant expects {plant.config.n_u}"
        )
    init = plant.initial if init is None else init
    cfg = plant.config

    u_lags = init.input_lags(cfg)[:, : cfg.m - 1].copy()  # (n_u, m-1), newest first
    y_lags = init.output_lags(cfg).copy()                 # (n_y, m), newest first
    outputs = np.empty((inputs.shape[0], cfg.n_y), dtype=float)
    for k, u_now in enumerate(inputs):
        x = regressor_row(cfg, u_now, u_lags, y_lags)
        y = np.atleast_1d(np.asarray(plant.step(x), dtype=float))
        if not np.all(np.isfinite(y)):
            raise SimulationDivergedError(f"non-finite plant output at step {k + 1}")
        outputs[k] = y
        if cfg.m > 1:
            u_lags = np.column_stack([u_now.reshape(cfg.n_u, 1), u_lags[:, :-1]])
        y_lags = np.column_stack([y.reshape(cfg.n_y, 1), y_lags[:, :-1]])
    return Dataset(inputs, outputs, DatasetOrigin.MEASURED)
