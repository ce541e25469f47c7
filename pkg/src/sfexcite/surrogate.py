"""One-step NARX predictors: fixed first-order LTI and adaptive LOLIMOT."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import (
    ConfigurationError,
    Dataset,
    InitialState,
    NarxConfig,
    Region,
    build_regressors,
    regressor_row,
)

LOLIMOT_RIDGE = 1e-8
DEFAULT_MAX_MODELS = 10
DEFAULT_SIGMA_FACTOR = 1.0 / 3.0


class Surrogate:
    """One-step predictor interface: x (p,) -> y (n_y,) with Jacobian."""

    config: NarxConfig
    trainable: bool = False

    def predict(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """(n_y, p) matrix of dy/dx."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class LtiFirstOrder(Surrogate):
    """First-order SISO model y(k) = a y(k-1) + b u(k), regressor (u, y_lag)."""

    a: float
    b: float
    config: NarxConfig = field(default_factory=NarxConfig)
    derivation: dict | None = None
    trainable: bool = False

    def __post_init__(self):
        if not (self.config.n_u == self.config.n_y == self.config.m == 1):
            raise ConfigurationError("LtiFirstOrder requires n_u = n_y = m = 1")
        if not 0.0 < self.a < 1.0:
            raise ConfigurationError(f"pole a must be in (0, 1), got {self.a}")

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.b * x[0] + self.a * x[1]])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.array([[self.b, self.a]])

    @property
    def static_gain(self) -> float:
        return self.b / (1.0 - self.a)

    def to_dict(self) -> dict:
        return {"kind": "lti-first-order", "a": self.a, "b": self.b,
                "derivation": self.derivation}


def lti_from_time_constant(T: float, K: float, T_s: float) -> LtiFirstOrder:
    """Forward-Euler discretization: a = 1 - T_s/T, b = K T_s/T."""
    if T <= 0 or T_s <= 0:
        raise ConfigurationError("T and T_s must be positive")
    if T_s >= T:
        raise ConfigurationError(f"T_s = {T_s} must be smaller than T = {T}")
    a = 1.0 - T_s / T
    b = K * T_s / T
    return LtiFirstOrder(a=a, b=b, config=NarxConfig(T_s=T_s),
                         derivation={"T": T, "K": K, "T_s": T_s})


# ---------------------------------------------------------------------------
# LOLIMOT local model network
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lolimot(Surrogate):
    """Local model network: axis-aligned partitions of the operating region,
    one affine model per partition, blended by normalized Gaussian validity
    functions centered on the partitions.
    """

    config: NarxConfig
    region: Region
    lowers: np.ndarray          # (n_models, p)
    uppers: np.ndarray          # (n_models, p)
    params: np.ndarray          # (n_models, n_y, p + 1), column 0 = intercept
    sigma_factor: float = DEFAULT_SIGMA_FACTOR
    max_models: int = DEFAULT_MAX_MODELS
    full_gradient: bool = False
    trainable: bool = True

    @property
    def n_models(self) -> int:
        return self.lowers.shape[0]

    def _centers_sigmas(self):
        centers = 0.5 * (self.lowers + self.uppers)
        sigmas = self.sigma_factor * (self.uppers - self.lowers)
        return centers, sigmas

    def validity(self, X: np.ndarray) -> np.ndarray:
        """Normalized validity weights, shape (n_points, n_models)."""
        X = np.atleast_2d(X)
        centers, sigmas = self._centers_sigmas()
        z = (X[:, None, :] - centers[None, :, :]) / sigmas[None, :, :]
        log_g = -0.5 * np.sum(z * z, axis=2)
        log_g -= log_g.max(axis=1, keepdims=True)  # overflow guard
        g = np.exp(log_g)
        return g / g.sum(axis=1, keepdims=True)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        w = self.validity(X)                                   # (n, M)
        phi = np.hstack([np.ones((X.shape[0], 1)), X])         # (n, p+1)
        local = np.einsum("nk,mok->nmo", phi, self.params)     # (n, M, n_y)
        return np.einsum("nm,nmo->no", w, local)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.predict_batch(x[None, :])[0]

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        w = self.validity(x[None, :])[0]                       # (M,)
        slopes = self.params[:, :, 1:]                         # (M, n_y, p)
        jac = np.einsum("m,mop->op", w, slopes)
        if self.full_gradient:
            centers, sigmas = self._centers_sigmas()
            z = (x[None, :] - centers) / sigmas                # (M, p)
            dlog_g = -z / sigmas                               # d log g_m / dx
            dw = w[:, None] * (dlog_g - np.sum(w[:, None] * dlog_g, axis=0))
            phi = np.concatenate([[1.0], x])
            local = self.params @ phi                          # (M, n_y)
            jac = jac + np.einsum("mo,mp->op", local, dw)
        return jac

    def to_dict(self) -> dict:
        return {
            "kind": "lolimot",
            "n_models": self.n_models,
            "sigma_factor": self.sigma_factor,
            "max_models": self.max_models,
            "full_gradient": self.full_gradient,
            "lowers": self.lowers.tolist(),
            "uppers": self.uppers.tolist(),
            "params": self.params.tolist(),
            "region": self.region.to_dict(),
        }


def _wls_affine(X: np.ndarray, Y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted least squares of an affine model, ridge fallback when
    the weighted design matrix is rank deficient. Returns (n_y, p+1)."""
    phi = np.hstack([np.ones((X.shape[0], 1)), X])
    sw = np.sqrt(np.maximum(w, 0.0))[:, None]
    A = sw * phi
    B = sw * Y
    theta, _, rank, _ = np.linalg.lstsq(A, B, rcond=None)
    if rank < phi.shape[1]:
        AtA = A.T @ A + LOLIMOT_RIDGE * np.eye(phi.shape[1])
        theta = np.linalg.solve(AtA, A.T @ B)
    return theta.T


def _validity_for(lowers, uppers, sigma_factor, X):
    centers = 0.5 * (lowers + uppers)
    sigmas = sigma_factor * (uppers - lowers)
    z = (X[:, None, :] - centers[None, :, :]) / sigmas[None, :, :]
    log_g = -0.5 * np.sum(z * z, axis=2)
    log_g -= log_g.max(axis=1, keepdims=True)
    g = np.exp(log_g)
    return g / g.sum(axis=1, keepdims=True)


def _global_sse(lowers, uppers, sigma_factor, params, X, Y):
    w = _validity_for(lowers, uppers, sigma_factor, X)
    phi = np.hstack([np.ones((X.shape[0], 1)), X])
    local = np.einsum("nk,mok->nmo", phi, np.asarray(params))
    pred = np.einsum("nm,nmo->no", w, local)
    resid = Y - pred
    return float(np.sum(resid * resid)), w, resid


def lolimot_fit_xy(X: np.ndarray, Y: np.ndarray, region: Region,
                   config: NarxConfig,
                   max_models: int = DEFAULT_MAX_MODELS,
                   sigma_factor: float = DEFAULT_SIGMA_FACTOR,
                   full_gradient: bool = False) -> Lolimot:
    """Greedy LOLIMOT tree construction on a prepared regressor matrix.

    Starts from one affine model over the whole region; repeatedly splits the
    worst partition at its axis midpoint, keeping the axis with the lowest
    global squared error, until max_models is reached or no split improves.
    """
    X = np.asarray(X, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] != X.shape[0]:
        Y = Y.T
    p = X.shape[1]
    if X.shape[0] < p + 1:
        raise ConfigurationError(
            f"LOLIMOT needs at least p + 1 = {p + 1} samples, got {X.shape[0]}"
        )
    if region.dim != p:
        raise ConfigurationError("region dimension does not match regressors")

    lowers = region.lower[None, :].copy()
    uppers = region.upper[None, :].copy()
    params = [_wls_affine(X, Y, np.ones(X.shape[0]))]
    best_sse, w, resid = _global_sse(lowers, uppers, sigma_factor, params, X, Y)

    while lowers.shape[0] < max_models:
        # worst partition by its validity-weighted squared-error share
        local_sse = np.einsum("nm,n->m", w, np.sum(resid * resid, axis=1))
        worst = int(np.argmax(local_sse))
        best_split = None
        for axis in range(p):
            lo_a = np.vstack([np.delete(lowers, worst, axis=0),
                              lowers[worst], lowers[worst]])
            up_a = np.vstack([np.delete(uppers, worst, axis=0),
                              uppers[worst], uppers[worst]])
            mid = 0.5 * (lowers[worst, axis] + uppers[worst, axis])
            up_a[-2, axis] = mid
            lo_a[-1, axis] = mid
            pars_a = [params[i] for i in range(len(params)) if i != worst]
            w_a = _validity_for(lo_a, up_a, sigma_factor, X)
            pars_a.append(_wls_affine(X, Y, w_a[:, -2]))
            pars_a.append(_wls_affine(X, Y, w_a[:, -1]))
            sse_a, w_trial, resid_trial = _global_sse(lo_a, up_a, sigma_factor, pars_a, X, Y)
            if best_split is None or sse_a < best_split[0] - 1e-15:
                best_split = (sse_a, lo_a, up_a, pars_a, w_trial, resid_trial)
        if best_split is None or best_split[0] >= best_sse:
            break
        best_sse, lowers, uppers, params, w, resid = best_split

    return Lolimot(config=config, region=region, lowers=lowers, uppers=uppers,
                   params=np.array(params), sigma_factor=sigma_factor,
                   max_models=max_models, full_gradient=full_gradient)


def lolimot_fit(data: Dataset, config: NarxConfig,
                max_models: int = DEFAULT_MAX_MODELS,
                sigma_factor: float = DEFAULT_SIGMA_FACTOR,
                region: Region | None = None,
                init: InitialState | None = None,
                full_gradient: bool = False) -> Lolimot:
    """Fit a LOLIMOT network to a dataset in NARX form."""
    init = InitialState.constant(config) if init is None else init
    X = build_regressors(config, data, init)
    if region is None:
        span = X.max(axis=0) - X.min(axis=0)
        pad = np.where(span > 0, 0.05 * span, 0.5)
        region = Region(X.min(axis=0) - pad, X.max(axis=0) + pad)
    return lolimot_fit_xy(X, data.outputs, region, config, max_models,
                          sigma_factor, full_gradient)


def lolimot_update(model: Lolimot, data: Dataset,
                   init: InitialState | None = None) -> Lolimot:
    """Refit-from-scratch update on the full accumulated dataset."""
    if len(data) == 0:
        raise ConfigurationError("lolimot_update requires non-empty data")
    return lolimot_fit(data, model.config, model.max_models, model.sigma_factor,
                       model.region, init, model.full_gradient)


# ---------------------------------------------------------------------------
# Rollout over a prediction horizon
# ---------------------------------------------------------------------------

class LagState:
    """Mutable lag buffers (newest first) driving the NARX recursion."""

    def __init__(self, config: NarxConfig, init: InitialState):
        self.config = config
        self.u_lags = init.input_lags(config)[:, : config.m - 1].copy()
        self.y_lags = init.output_lags(config).copy()

    def copy(self) -> "LagState":
        out = object.__new__(LagState)
        out.config = self.config
        out.u_lags = self.u_lags.copy()
        out.y_lags = self.y_lags.copy()
        return out

    def row(self, u_now: np.ndarray) -> np.ndarray:
        return regressor_row(self.config, u_now, self.u_lags, self.y_lags)

    def advance(self, u_now: np.ndarray, y_now: np.ndarray) -> None:
        cfg = self.config
        if cfg.m > 1:
            self.u_lags = np.column_stack(
                [np.asarray(u_now, dtype=float).reshape(cfg.n_u, 1), self.u_lags[:, :-1]]
            )
        self.y_lags = np.column_stack(
            [np.asarray(y_now, dtype=float).reshape(cfg.n_y, 1), self.y_lags[:, :-1]]
        )


def _as_candidate(candidate: np.ndarray, n_u: int) -> np.ndarray:
    cand = np.asarray(candidate, dtype=float)
    if cand.ndim == 1:
        cand = cand[:, None]
    if cand.ndim != 2 or cand.shape[1] != n_u:
        raise ConfigurationError(
            f"candidate must be (L, n_u = {n_u}), got shape {cand.shape}"
        )
    if cand.shape[0] < 1:
        raise ConfigurationError("candidate horizon must have length >= 1")
    return cand


def _committed_state(surrogate: Surrogate, committed: Dataset | None,
                     init: InitialState) -> LagState:
    state = LagState(surrogate.config, init)
    if committed is not None and len(committed) > 0:
        for u_now, y_now in zip(committed.inputs, committed.outputs):
            state.advance(u_now, y_now)
    return state


def rollout(surrogate: Surrogate, committed: Dataset | None,
            candidate: np.ndarray, init: InitialState) -> np.ndarray:
    """Predicted regressor matrix over committed data plus a candidate horizon.

    Committed rows reuse the outputs stored in ``committed`` (cached
    predictions, or measurements in online mode); horizon rows iterate the
    surrogate's one-step prediction with outputs feeding back into the lags.
    Returns (k + L - 1, p) where k - 1 is the committed length.
    """
    cfg = surrogate.config
    cand = _as_candidate(candidate, cfg.n_u)
    if committed is not None and len(committed) > 0:
        committed_rows = build_regressors(cfg, committed, init)
    else:
        committed_rows = np.empty((0, cfg.p))
    state = _committed_state(surrogate, committed, init)
    horizon_rows, _ = rollout_horizon(surrogate, state, cand)
    return np.vstack([committed_rows, horizon_rows])


def rollout_horizon(surrogate: Surrogate, state: LagState,
                    candidate: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Horizon rows (L, p) and predictions (L, n_y) from a lag state."""
    cfg = surrogate.config
    L = candidate.shape[0]
    rows = np.empty((L, cfg.p))
    preds = np.empty((L, cfg.n_y))
    st = state.copy()
    for t in range(L):
        rows[t] = st.row(candidate[t])
        preds[t] = surrogate.predict(rows[t])
        st.advance(candidate[t], preds[t])
    return rows, preds


def rollout_jacobian(surrogate: Surrogate, committed: Dataset | None,
                     candidate: np.ndarray, init: InitialState) -> np.ndarray:
    """Derivative of the horizon regressor rows w.r.t. the candidate inputs.

    Returns (L, p, L, n_u); entry [t, :, s, :] is d row_t / d candidate_s and
    vanishes for s > t (causality). Chain rule through the feedback recursion
    using the surrogate's one-step Jacobian.
    """
    cfg = surrogate.config
    cand = _as_candidate(candidate, cfg.n_u)
    state = _committed_state(surrogate, committed, init)
    _, _, jac = rollout_horizon_jacobian(surrogate, state, cand)
    return jac


def rollout_horizon_jacobian(surrogate: Surrogate, state: LagState,
                             candidate: np.ndarray):
    """Horizon rows, predictions, and d rows / d candidate from a lag state."""
    cfg = surrogate.config
    L, n_u, n_y, m, p = candidate.shape[0], cfg.n_u, cfg.n_y, cfg.m, cfg.p
    rows = np.empty((L, p))
    preds = np.empty((L, n_y))
    rows_jac = np.zeros((L, p, L, n_u))
    preds_jac = np.zeros((L, n_y, L, n_u))
    st = state.copy()
    for t in range(L):
        rows[t] = st.row(candidate[t])
        # input block: channel-major, lag-major; lag l of channel c is
        # candidate[t - l, c] when t - l >= 0 (committed otherwise)
        for c in range(n_u):
            for l in range(m):
                if t - l >= 0:
                    rows_jac[t, c * m + l, t - l, c] = 1.0
        # output block: lag l of channel c is preds[t - 1 - l, c]
        for c in range(n_y):
            for l in range(m):
                if t - 1 - l >= 0:
                    rows_jac[t, m * n_u + c * m + l] = preds_jac[t - 1 - l, c]
        preds[t] = surrogate.predict(rows[t])
        step_jac = surrogate.jacobian(rows[t])      # (n_y, p)
        preds_jac[t] = np.tensordot(step_jac, rows_jac[t], axes=([1], [0]))
        st.advance(candidate[t], preds[t])
    return rows, preds, rows_jac
