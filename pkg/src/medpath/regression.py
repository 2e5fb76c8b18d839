"""Least squares, IRLS-based GLMs, and the normal CDF/quantile pair.

These are the estimation primitives everything else leans on: marginal
fits for the copula SEM, path-coefficient regressions for the mediation
tests, and the probability transforms used by every copula evaluation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import erfc, xlogy

from .errors import (
    DomainError,
    InputError,
    InsufficientDataError,
    NonConvergenceError,
    SingularDesignError,
)

__all__ = [
    "LinearFit",
    "GlmFit",
    "fit_ols",
    "fit_glm",
    "normal_cdf",
    "normal_quantile",
    "normal_pdf",
    "normal_logpdf",
]

FAMILIES = ("gaussian", "bernoulli", "poisson")
CANONICAL_LINKS = {"gaussian": "identity", "bernoulli": "logit", "poisson": "log"}

_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------------------
# Normal distribution special functions
# ---------------------------------------------------------------------------

def normal_cdf(x):
    """Standard normal CDF, computed through the complementary error function."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(-x / _SQRT2)
    return float(out) if out.ndim == 0 else out


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / _SQRT2PI
    return float(out) if out.ndim == 0 else out


def normal_logpdf(x):
    x = np.asarray(x, dtype=float)
    out = -0.5 * x * x - np.log(_SQRT2PI)
    return float(out) if out.ndim == 0 else out


# Rational approximation coefficients (Acklam's inverse normal CDF).
_ICDF_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ICDF_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ICDF_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ICDF_D = (
    7.784695709041462e-03, 3.224671290700398e-01,
    2.445134137142996e00, 3.754408661907416e00,
)
_ICDF_PLOW = 0.02425


def _icdf_tail(p):
    q = np.sqrt(-2.0 * np.log(p))
    c1, c2, c3, c4, c5, c6 = _ICDF_C
    d1, d2, d3, d4 = _ICDF_D
    num = ((((c1 * q + c2) * q + c3) * q + c4) * q + c5) * q + c6
    den = (((d1 * q + d2) * q + d3) * q + d4) * q + 1.0
    return num / den


def _icdf_central(p):
    q = p - 0.5
    r = q * q
    a1, a2, a3, a4, a5, a6 = _ICDF_A
    b1, b2, b3, b4, b5 = _ICDF_B
    num = (((((a1 * r + a2) * r + a3) * r + a4) * r + a5) * r + a6) * q
    den = ((((b1 * r + b2) * r + b3) * r + b4) * r + b5) * r + 1.0
    return num / den


def normal_quantile(p):
    """Standard normal quantile.

    Rational approximation refined by one Halley step against the
    erfc-based CDF; round-trips with normal_cdf to better than 1e-12
    for p in [1e-10, 1 - 1e-10].
    """
    p_arr = np.asarray(p, dtype=float)
    scalar = p_arr.ndim == 0
    p_arr = np.atleast_1d(p_arr)
    if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise DomainError("normal_quantile requires p strictly inside (0, 1)")

    x = np.empty_like(p_arr)
    lo = p_arr < _ICDF_PLOW
    hi = p_arr > 1.0 - _ICDF_PLOW
    mid = ~(lo | hi)
    if np.any(lo):
        x[lo] = _icdf_tail(p_arr[lo])
    if np.any(hi):
        x[hi] = -_icdf_tail(1.0 - p_arr[hi])
    if np.any(mid):
        x[mid] = _icdf_central(p_arr[mid])

    # One Halley refinement using the exact CDF.
    err = 0.5 * erfc(-x / _SQRT2) - p_arr
    u = err * _SQRT2PI * np.exp(0.5 * x * x)
    x = x - u / (1.0 + 0.5 * x * u)
    return float(x[0]) if scalar else x


# ---------------------------------------------------------------------------
# Ordinary least squares
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearFit:
    """OLS result with per-coefficient asymptotic standard errors."""

    coefficients: np.ndarray
    standard_errors: np.ndarray
    residual_sd: float
    n: int
    design_rank: int
    coef_cov: np.ndarray


def _qr_rank(r: np.ndarray, n: int, q: int) -> int:
    d = np.abs(np.diag(r))
    if d.size == 0:
        return 0
    tol = d.max() * max(n, q) * np.finfo(float).eps
    return int(np.sum(d > tol))


def fit_ols(design: np.ndarray, response: np.ndarray) -> LinearFit:
    """Least squares fit of response on design (intercept is caller's business).

    Standard errors come from sigma^2 (X'X)^-1 with the residual mean
    square on n - q degrees of freedom.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, q = x.shape
    if len(y) != n:
        raise InputError("design and response lengths differ")
    if n <= q:
        raise InsufficientDataError(f"need n > q, got n={n}, q={q}")
    r_qr = np.linalg.qr(x, mode="reduced")
    qmat, rmat = r_qr
    rank = _qr_rank(rmat, n, q)
    if rank < q:
        raise SingularDesignError(f"design has rank {rank} < {q} columns")
    coef = solve_triangular(rmat, qmat.T @ y)
    resid = y - x @ coef
    rss = float(resid @ resid)
    sigma2 = rss / (n - q)
    rinv = solve_triangular(rmat, np.eye(q))
    xtx_inv = rinv @ rinv.T
    cov = sigma2 * xtx_inv
    se = np.sqrt(np.diag(cov))
    return LinearFit(
        coefficients=coef,
        standard_errors=se,
        residual_sd=float(np.sqrt(sigma2)),
        n=n,
        design_rank=rank,
        coef_cov=cov,
    )


# ---------------------------------------------------------------------------
# Generalized linear models (canonical links only)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GlmFit:
    """IRLS maximum-likelihood fit of a one-parameter exponential family GLM."""

    coefficients: np.ndarray
    standard_errors: np.ndarray
    family: str
    link: str
    dispersion: float
    converged: bool
    iterations: int
    deviance: float
    coef_cov: np.ndarray
    n: int


def _check_family_link(family: str, link: str | None) -> str:
    if family not in FAMILIES:
        raise InputError(f"unknown family {family!r}")
    canonical = CANONICAL_LINKS[family]
    if link is None:
        return canonical
    if link != canonical:
        raise InputError(
            f"only canonical links supported: {family} requires {canonical!r}"
        )
    return link


def _check_response(family: str, y: np.ndarray) -> None:
    if family == "bernoulli":
        if not np.all((y == 0.0) | (y == 1.0)):
            raise InputError("bernoulli response must be 0/1")
    elif family == "poisson":
        if np.any(y < 0) or not np.all(y == np.floor(y)):
            raise InputError("poisson response must be non-negative integers")


def _glm_mu(family: str, eta: np.ndarray) -> np.ndarray:
    if family == "gaussian":
        return eta
    if family == "bernoulli":
        # Numerically safe logistic.
        out = np.empty_like(eta)
        pos = eta >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
        ex = np.exp(eta[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out
    return np.exp(np.clip(eta, -700, 700))


def _glm_weights(family: str, mu: np.ndarray) -> np.ndarray:
    # Canonical link: IRLS weight equals the variance function.
    if family == "gaussian":
        return np.ones_like(mu)
    if family == "bernoulli":
        return mu * (1.0 - mu)
    return mu


def _glm_deviance(family: str, y: np.ndarray, mu: np.ndarray) -> float:
    if family == "gaussian":
        return float(np.sum((y - mu) ** 2))
    if family == "bernoulli":
        val = xlogy(y, y) - xlogy(y, mu) + xlogy(1 - y, 1 - y) - xlogy(1 - y, 1 - mu)
        return float(2.0 * np.sum(val))
    return float(2.0 * np.sum(xlogy(y, y) - xlogy(y, mu) - (y - mu)))


def _wls_solve(x: np.ndarray, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    sw = np.sqrt(w)
    qmat, rmat = np.linalg.qr(sw[:, None] * x, mode="reduced")
    rank = _qr_rank(rmat, *x.shape)
    if rank < x.shape[1]:
        raise SingularDesignError("weighted design is rank deficient")
    return solve_triangular(rmat, qmat.T @ (sw * z))


def fit_glm(
    design: np.ndarray,
    response: np.ndarray,
    family: str,
    link: str | None = None,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> GlmFit:
    """IRLS fit of a GLM with its canonical link.

    Iterates weighted least squares (QR based) until the relative deviance
    change drops below tol. Steps that would increase the deviance are
    halved, so the deviance path is non-increasing.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, q = x.shape
    if len(y) != n:
        raise InputError("design and response lengths differ")
    if n <= q:
        raise InsufficientDataError(f"need n > q, got n={n}, q={q}")
    link = _check_family_link(family, link)
    _check_response(family, y)

    # Standard family-specific starting means.
    if family == "gaussian":
        mu = np.full(n, y.mean()) if n else y
        eta = mu
    elif family == "bernoulli":
        mu = (y + 0.5) / 2.0
        eta = np.log(mu / (1.0 - mu))
    else:
        mu = y + 0.5
        eta = np.log(mu)

    beta = np.zeros(q)
    # The family start seeds the first working response only; the deviance
    # baseline begins at the first fitted iterate.
    dev = math.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = _glm_weights(family, mu)
        if np.any(w < 1e-300):
            w = np.maximum(w, 1e-300)
        z = eta + (y - mu) / w
        beta_new = _wls_solve(x, z, w)

        # Step-halving keeps the deviance monotone.
        step = beta_new - beta
        dev_new = None
        for _ in range(32):
            cand = beta + step
            eta_c = x @ cand
            mu_c = _glm_mu(family, eta_c)
            dev_c = _glm_deviance(family, y, mu_c)
            if np.isfinite(dev_c) and dev_c <= dev * (1 + 1e-12) + 1e-12:
                beta, eta, mu, dev_new = cand, eta_c, mu_c, dev_c
                break
            step *= 0.5
        if dev_new is None:
            break
        if math.isfinite(dev) and abs(dev - dev_new) <= tol * (abs(dev) + tol):
            dev = dev_new
            converged = True
            break
        dev = dev_new

    w = _glm_weights(family, mu)
    if family == "gaussian":
        dispersion = float(np.sum((y - mu) ** 2) / (n - q))  # Pearson estimate
    else:
        dispersion = 1.0
    xtwx = x.T @ (w[:, None] * x)
    try:
        info_inv = np.linalg.inv(xtwx)
    except np.linalg.LinAlgError as exc:
        raise SingularDesignError("Fisher information is singular") from exc
    cov = dispersion * info_inv
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    fit = GlmFit(
        coefficients=beta,
        standard_errors=se,
        family=family,
        link=link,
        dispersion=dispersion,
        converged=converged,
        iterations=iterations,
        deviance=dev,
        coef_cov=cov,
        n=n,
    )
    if not converged:
        raise NonConvergenceError(
            f"IRLS did not converge in {max_iter} iterations", last_fit=fit
        )
    return fit
