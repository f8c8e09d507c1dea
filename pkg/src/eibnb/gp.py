"""Gaussian-process surrogate: constant-mean model with a Gaussian
(power-exponential, exponent 2) correlation, fit by profile maximum
likelihood, with BLUP prediction and mean-squared-error estimates.

The correlation matrix is always regularized as R + delta*I (nugget) and
all linear algebra goes through a Cholesky factorization; no explicit
inverses are formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize

DEFAULT_NUGGET = 1e-6
MAX_NUGGET = 1e-2
DEFAULT_THETA_BOX = (1e-2, 1e3)
# Sentinel for the profile likelihood of constant-response data, where
# sigma^2 -> 0 degenerates the Gaussian density.  Large but finite so
# derivative-free optimizers can still rank points.
DEGENERATE_NLL = 1e300
_CONST_Y_TOL = 1e-14


class IllConditionedError(RuntimeError):
    """Correlation matrix could not be factorized at the given nugget."""


class FitError(RuntimeError):
    """No restart produced a factorizable correlation matrix."""


@dataclass(frozen=True)
class DesignData:
    """Design matrix in the unit cube and the observed responses."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (n, d) with matching y of length n")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 design points")
        if np.any(X < 0.0) or np.any(X > 1.0):
            raise ValueError("design coordinates must lie in [0,1]")
        diff = np.max(np.abs(X[:, None, :] - X[None, :, :]), axis=2)
        np.fill_diagonal(diff, np.inf)
        if np.any(diff <= 1e-12):
            raise ValueError("design rows must be distinct (1e-12 per coordinate)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class GPParams:
    mu: float
    sigma2: float
    theta: np.ndarray
    delta: float

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if np.any(theta <= 0.0):
            raise ValueError("theta must be positive in every coordinate")
        if self.sigma2 < 0.0:
            raise ValueError("sigma2 must be nonnegative")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("nugget must be in [0, 1)")
        object.__setattr__(self, "theta", theta)


@dataclass
class GPFit:
    """Fitted surrogate with factorized correlation and precomputed
    prediction vectors.  Immutable after construction; predictions from
    one fit are safe to run concurrently."""

    data: DesignData
    params: GPParams
    corr_factor: tuple = field(repr=False)
    resid_weights: np.ndarray = field(repr=False)
    ones_weights: np.ndarray = field(repr=False)
    degenerate: bool = False
    nll: float = math.nan


def correlation_matrix(X: np.ndarray, theta: np.ndarray, delta: float) -> np.ndarray:
    """R + delta*I with R_ij = exp(-sum_k theta_k (x_ik - x_jk)^2)."""
    X = np.asarray(X, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0.0):
        raise ValueError("theta must be positive")
    sq = (X[:, None, :] - X[None, :, :]) ** 2
    R = np.exp(-np.tensordot(sq, theta, axes=([2], [0])))
    return R + delta * np.eye(X.shape[0])


def _closed_form_estimates(
    y: np.ndarray, cho: tuple
) -> tuple[float, float, np.ndarray, np.ndarray]:
    """mu_hat, sigma2_hat and the two solve vectors (R+dI)^{-1}(y-1mu),
    (R+dI)^{-1}1 from a Cholesky factor."""
    n = y.shape[0]
    ones = np.ones(n)
    Riy = cho_solve(cho, y)
    Ri1 = cho_solve(cho, ones)
    denom = ones @ Ri1
    mu = float(ones @ Riy / denom)
    resid = y - mu
    Rir = Riy - mu * Ri1
    sigma2 = float(resid @ Rir / n)
    return mu, max(sigma2, 0.0), Rir, Ri1


def profile_neg_log_likelihood(
    data: DesignData, theta: np.ndarray, delta: float
) -> float:
    """Negative profile log-likelihood of y ~ N(1*mu, sigma2*(R+dI)) with
    mu, sigma2 at their closed-form optima."""
    Rd = correlation_matrix(data.X, theta, delta)
    try:
        cho = cho_factor(Rd, lower=True)
    except LinAlgError as exc:
        raise IllConditionedError(
            f"factorization failed at delta={delta}"
        ) from exc
    _, sigma2, _, _ = _closed_form_estimates(data.y, cho)
    if sigma2 <= _CONST_Y_TOL:
        return DEGENERATE_NLL
    n = data.n
    logdet = 2.0 * float(np.sum(np.log(np.diag(cho[0]))))
    return 0.5 * (n * math.log(2 * math.pi) + n * math.log(sigma2) + logdet + n)


def _build_fit(
    data: DesignData, theta: np.ndarray, delta: float, degenerate: bool = False
) -> GPFit:
    Rd = correlation_matrix(data.X, theta, delta)
    try:
        cho = cho_factor(Rd, lower=True)
    except LinAlgError as exc:
        raise IllConditionedError(
            f"factorization failed at delta={delta}"
        ) from exc
    mu, sigma2, Rir, Ri1 = _closed_form_estimates(data.y, cho)
    if degenerate:
        sigma2, Rir = 0.0, np.zeros_like(Rir)
    params = GPParams(mu=mu, sigma2=sigma2, theta=theta, delta=delta)
    try:
        nll = DEGENERATE_NLL if degenerate else profile_neg_log_likelihood(
            data, theta, delta
        )
    except IllConditionedError:
        nll = math.nan
    return GPFit(
        data=data,
        params=params,
        corr_factor=cho,
        resid_weights=Rir,
        ones_weights=Ri1,
        degenerate=degenerate,
        nll=nll,
    )


def _log_theta_starts(
    dim: int, log_lo: float, log_hi: float, restarts: int, rng: np.random.Generator
) -> np.ndarray:
    """Latin-hypercube starts in log-theta space, midpoint start first."""
    starts = np.empty((restarts, dim))
    starts[0] = 0.5 * (log_lo + log_hi)
    if restarts > 1:
        m = restarts - 1
        u = np.empty((m, dim))
        for k in range(dim):
            u[:, k] = (rng.permutation(m) + rng.random(m)) / m
        starts[1:] = log_lo + u * (log_hi - log_lo)
    return starts


def fit_mle(
    data: DesignData,
    theta_box: tuple[float, float] = DEFAULT_THETA_BOX,
    delta: float = DEFAULT_NUGGET,
    restarts: int = 5,
    rng: np.random.Generator | None = None,
) -> GPFit:
    """Multistart derivative-free ML fit over log(theta).

    On factorization failure the nugget is escalated by factors of 10 up
    to MAX_NUGGET; if every restart fails at every nugget, raises FitError.
    Constant responses short-circuit to a degenerate fit (sigma2 = 0).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    if theta_box[0] <= 0.0 or theta_box[1] <= theta_box[0]:
        raise ValueError("theta_box must be a positive increasing interval")

    if float(np.ptp(data.y)) <= 1e-12 * max(1.0, abs(float(data.y[0]))):
        theta_mid = np.full(data.dim, math.sqrt(theta_box[0] * theta_box[1]))
        return _build_fit(data, theta_mid, delta, degenerate=True)

    log_lo, log_hi = math.log(theta_box[0]), math.log(theta_box[1])
    starts = _log_theta_starts(data.dim, log_lo, log_hi, restarts, rng)

    deltas = [delta]
    while deltas[-1] < MAX_NUGGET and deltas[-1] > 0:
        deltas.append(min(deltas[-1] * 10.0, MAX_NUGGET))
    if delta == 0.0:
        deltas = [0.0]

    for dlt in deltas:
        def objective(log_theta: np.ndarray) -> float:
            theta = np.exp(np.clip(log_theta, log_lo, log_hi))
            try:
                return profile_neg_log_likelihood(data, theta, dlt)
            except IllConditionedError:
                return DEGENERATE_NLL

        best_val, best_theta = np.inf, None
        for x0 in starts:
            res = minimize(
                objective,
                x0,
                method="Nelder-Mead",
                options={"xatol": 1e-4, "fatol": 1e-8, "maxiter": 200 * data.dim},
            )
            if res.fun < best_val:
                best_val = float(res.fun)
                best_theta = np.exp(np.clip(res.x, log_lo, log_hi))
        if best_theta is None or best_val >= DEGENERATE_NLL:
            continue
        try:
            return _build_fit(data, best_theta, dlt)
        except IllConditionedError:
            continue
    raise FitError("all restarts failed factorization at every nugget level")


def _validate_points(X: np.ndarray, dim: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != dim:
        raise ValueError(f"expected dimension {dim}, got {X.shape[1]}")
    if np.any(X < 0.0) or np.any(X > 1.0):
        raise ValueError("prediction point outside [0,1]^d")
    return X


def predict_many(fit: GPFit, Xstar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """BLUP mean and MSE at a batch of points, shape (m, d) -> (m,), (m,)."""
    Xstar = _validate_points(Xstar, fit.data.dim)
    theta = fit.params.theta
    sq = (Xstar[:, None, :] - fit.data.X[None, :, :]) ** 2
    r = np.exp(-np.tensordot(sq, theta, axes=([2], [0])))  # (m, n)
    yhat = fit.params.mu + r @ fit.resid_weights
    if fit.params.sigma2 == 0.0:
        return yhat, np.zeros(Xstar.shape[0])
    Rir = cho_solve(fit.corr_factor, r.T)  # (n, m)
    rRr = np.einsum("mn,nm->m", r, Rir)
    one_Rr = fit.ones_weights @ r.T
    denom = float(np.sum(fit.ones_weights))
    s2 = fit.params.sigma2 * (1.0 - rRr + (1.0 - one_Rr) ** 2 / denom)
    return yhat, np.maximum(s2, 0.0)


def predict(fit: GPFit, xstar: np.ndarray) -> tuple[float, float]:
    """BLUP mean and MSE at a single point in [0,1]^d."""
    yhat, s2 = predict_many(fit, np.asarray(xstar, dtype=float).reshape(1, -1))
    return float(yhat[0]), float(s2[0])
