"""Mediation hypothesis tests: Sobel, classical bootstrap, adaptive bootstrap.

The mediated effect is the product of the exposure-to-mediator and
mediator-to-outcome coefficients; its null is composite, and the product
estimator degenerates when both coefficients vanish. The adaptive bootstrap
switches between the regular recentred bootstrap statistic and the raw
product statistic using thresholded indicators, which restores calibration
at the singular point while matching the classical bootstrap elsewhere.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import (
    EstimationError,
    InputError,
    InsufficientDataError,
    NonConvergenceError,
    SingularDesignError,
)
from .regression import fit_glm, fit_ols, normal_cdf

__all__ = [
    "AbConfig",
    "TestStatistics",
    "BootstrapDraw",
    "MediationReport",
    "estimate_paths",
    "sobel_test",
    "sobel_mediation_test",
    "classical_bootstrap_test",
    "ab_indicators",
    "ab_statistic",
    "ab_test",
]

logger = logging.getLogger(__name__)

_MAX_REDRAWS = 10


@dataclass(frozen=True)
class AbConfig:
    """Bootstrap test configuration.

    contrast is the exposure change (s_star -> s) that scales the reported
    effects. lam is the indicator threshold; use threshold_rule="sqrt_n" to
    switch to 2 sqrt(n) / log(n).
    """

    B: int = 199
    lam: float = 2.0
    seed: int = 0
    contrast: tuple[float, float] = (0.0, 1.0)
    threshold_rule: str = "fixed"

    def __post_init__(self):
        if self.B < 1:
            raise InputError("B must be at least 1")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise InputError("lam must be a positive real")
        if self.threshold_rule not in ("fixed", "sqrt_n"):
            raise InputError("threshold_rule must be 'fixed' or 'sqrt_n'")

    def threshold(self, n: int) -> float:
        if self.threshold_rule == "sqrt_n":
            return 2.0 * math.sqrt(n) / math.log(n)
        return self.lam


@dataclass(frozen=True)
class TestStatistics:
    """Path estimates with their standardized test statistics."""

    alpha_hat: float
    beta_hat: float
    gamma_hat: float
    se_alpha: float
    se_beta: float
    se_gamma: float
    T_alpha: float
    T_beta: float
    n: int
    cov_beta_gamma: float = 0.0


@dataclass(frozen=True)
class BootstrapDraw:
    """One resample's estimates, indicators and adaptive statistic."""

    alpha_star: float
    beta_star: float
    T_alpha_star: float
    T_beta_star: float
    indicator_alpha: bool
    indicator_beta: bool
    U: float


@dataclass(frozen=True)
class MediationReport:
    """Point estimates and p-values for the three mediation effects."""

    NIE: float
    NDE: float
    NTE: float
    p_value_NIE: float
    p_value_NDE: float
    p_value_NTE: float
    method: str
    n: int
    B: int | None
    lam: float | None
    seed: int | None
    scale: str
    redraws: int = 0

    def to_json_dict(self) -> dict:
        # Exactly the published report keys, nothing else.
        return {
            "NIE": self.NIE,
            "NDE": self.NDE,
            "NTE": self.NTE,
            "p_value_NIE": self.p_value_NIE,
            "p_value_NDE": self.p_value_NDE,
            "p_value_NTE": self.p_value_NTE,
            "method": self.method,
            "n": self.n,
            "B": self.B,
            "lambda": self.lam,
            "seed": self.seed,
            "scale": self.scale,
        }


def _designs(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    ones = np.ones(data.n)
    d_m = np.column_stack([ones, data.exposure, data.confounders])
    d_y = np.column_stack([ones, data.mediator, data.exposure, data.confounders])
    return d_m, d_y


def estimate_paths(data: Dataset, outcome_family: str = "gaussian") -> TestStatistics:
    """Fit the two path regressions and form the standardized statistics.

    The mediator model is linear; the outcome model follows outcome_family
    (mediator enters first, exposure second, confounders after).
    """
    if data.n <= data.n_confounders + 3:
        raise InsufficientDataError("need n > p + 3 observations")
    d_m, d_y = _designs(data)
    fit_m = fit_ols(d_m, data.mediator)
    if outcome_family == "gaussian":
        fit_y = fit_ols(d_y, data.outcome)
    else:
        fit_y = fit_glm(d_y, data.outcome, outcome_family)
    alpha_hat = float(fit_m.coefficients[1])
    se_alpha = float(fit_m.standard_errors[1])
    beta_hat = float(fit_y.coefficients[1])
    gamma_hat = float(fit_y.coefficients[2])
    se_beta = float(fit_y.standard_errors[1])
    se_gamma = float(fit_y.standard_errors[2])
    return TestStatistics(
        alpha_hat=alpha_hat,
        beta_hat=beta_hat,
        gamma_hat=gamma_hat,
        se_alpha=se_alpha,
        se_beta=se_beta,
        se_gamma=se_gamma,
        T_alpha=alpha_hat / se_alpha if se_alpha > 0 else math.inf * np.sign(alpha_hat),
        T_beta=beta_hat / se_beta if se_beta > 0 else math.inf * np.sign(beta_hat),
        n=data.n,
        cov_beta_gamma=float(fit_y.coef_cov[1, 2]),
    )


def _two_sided_p(z: float) -> float:
    if not math.isfinite(z):
        return 0.0 if z != 0 else 1.0
    return float(2.0 * normal_cdf(-abs(z)))


def sobel_test(stats: TestStatistics) -> tuple[float, float]:
    """Sobel z statistic and two-sided p-value for the product effect."""
    num = stats.alpha_hat * stats.beta_hat
    denom = math.sqrt(
        stats.alpha_hat**2 * stats.se_beta**2 + stats.beta_hat**2 * stats.se_alpha**2
    )
    if denom == 0.0:
        if num == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, num), 0.0
    z = num / denom
    return z, _two_sided_p(z)


def sobel_mediation_test(
    data: Dataset,
    outcome_family: str = "gaussian",
    contrast: tuple[float, float] = (0.0, 1.0),
) -> MediationReport:
    """Full Sobel-style report: product, direct, and total effects.

    The total-effect variance uses the delta method with the covariance of
    the outcome-equation coefficients; the two path regressions are treated
    as independent.
    """
    stats = estimate_paths(data, outcome_family)
    delta = contrast[1] - contrast[0]
    nie = stats.alpha_hat * stats.beta_hat * delta
    nde = stats.gamma_hat * delta
    _, p_nie = sobel_test(stats)
    z_nde = stats.gamma_hat / stats.se_gamma if stats.se_gamma > 0 else math.inf
    var_nte = (
        stats.beta_hat**2 * stats.se_alpha**2
        + stats.alpha_hat**2 * stats.se_beta**2
        + stats.se_gamma**2
        + 2.0 * stats.alpha_hat * stats.cov_beta_gamma
    )
    total = stats.alpha_hat * stats.beta_hat + stats.gamma_hat
    if var_nte > 0:
        p_nte = _two_sided_p(total / math.sqrt(var_nte))
    else:
        p_nte = 1.0 if total == 0 else 0.0
    return MediationReport(
        NIE=nie,
        NDE=nde,
        NTE=nie + nde,
        p_value_NIE=p_nie,
        p_value_NDE=_two_sided_p(z_nde),
        p_value_NTE=p_nte,
        method="sobel",
        n=data.n,
        B=None,
        lam=None,
        seed=None,
        scale="natural" if outcome_family == "gaussian" else "link",
    )


def ab_indicators(T_obs: float, T_star: float, lam: float) -> bool:
    """True iff both the observed and bootstrap statistics sit under the threshold."""
    return abs(T_star) <= lam and abs(T_obs) <= lam


def ab_statistic(
    alpha_star: float,
    beta_star: float,
    alpha_hat: float,
    beta_hat: float,
    ind_alpha: bool,
    ind_beta: bool,
) -> float:
    """Adaptive bootstrap statistic for one resample.

    Off the singular set the usual recentred product difference applies. On
    it (both indicators active) the statistic is the product of the two
    recentred coefficients: conditional on the data this is distributed as
    the product-of-independent-normals limit that governs the product
    estimator at the singular point, which is what restores calibration
    there. A raw bootstrap product would be stochastically too large and
    drive the size to zero.
    """
    if ind_alpha and ind_beta:
        return (alpha_star - alpha_hat) * (beta_star - beta_hat)
    return alpha_star * beta_star - alpha_hat * beta_hat


# ---------------------------------------------------------------------------
# Shared bootstrap engine
# ---------------------------------------------------------------------------

def _quick_ols(x: np.ndarray, y: np.ndarray):
    """Normal-equations OLS returning coefficients and selected SEs; fast path
    for resample fits. Raises SingularDesignError when the Gram matrix is
    singular."""
    g = x.T @ x
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularDesignError("resample design is singular") from exc
    coef = ginv @ (x.T @ y)
    resid = y - x @ coef
    n, q = x.shape
    dof = n - q
    if dof <= 0:
        raise InsufficientDataError("resample too small")
    sigma2 = float(resid @ resid) / dof
    se = np.sqrt(np.maximum(np.diag(ginv) * sigma2, 0.0))
    cond = np.abs(np.diag(g))
    if np.any(~np.isfinite(coef)) or np.any(cond == 0):
        raise SingularDesignError("resample design is singular")
    return coef, se


def _resample_paths(
    d_m: np.ndarray,
    d_y: np.ndarray,
    mediator: np.ndarray,
    outcome: np.ndarray,
    idx: np.ndarray,
    outcome_family: str,
):
    coef_m, se_m = _quick_ols(d_m[idx], mediator[idx])
    if outcome_family == "gaussian":
        coef_y, se_y = _quick_ols(d_y[idx], outcome[idx])
    else:
        fit = fit_glm(d_y[idx], outcome[idx], outcome_family)
        coef_y, se_y = fit.coefficients, fit.standard_errors
    return (
        float(coef_m[1]),
        float(coef_y[1]),
        float(coef_y[2]),
        float(se_m[1]),
        float(se_y[1]),
    )


def _bootstrap_draws(data: Dataset, outcome_family: str, config: AbConfig):
    """B successful resample fits; degenerate resamples are redrawn (bounded)."""
    d_m, d_y = _designs(data)
    n = data.n
    out = np.empty((config.B, 5))
    redraws = 0
    for b in range(1, config.B + 1):
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, b)))
        for attempt in range(_MAX_REDRAWS + 1):
            idx = rng.integers(0, n, n)
            try:
                out[b - 1] = _resample_paths(
                    d_m, d_y, data.mediator, data.outcome, idx, outcome_family
                )
                break
            except (SingularDesignError, NonConvergenceError, EstimationError):
                redraws += 1
                if attempt == _MAX_REDRAWS:
                    raise EstimationError(
                        f"bootstrap replicate {b}: {_MAX_REDRAWS} redraws exhausted"
                    ) from None
    if redraws:
        logger.info("bootstrap: %d degenerate resamples redrawn", redraws)
    return out, redraws


def _percentile_p(count: int, B: int) -> float:
    return (1.0 + count) / (B + 1.0)


def _effects(stats: TestStatistics, contrast: tuple[float, float]):
    delta = contrast[1] - contrast[0]
    nie = stats.alpha_hat * stats.beta_hat * delta
    nde = stats.gamma_hat * delta
    return nie, nde, nie + nde


def classical_bootstrap_test(
    data: Dataset, outcome_family: str = "gaussian", config: AbConfig = AbConfig()
) -> MediationReport:
    """Percentile bootstrap of the recentred product, direct, and total effects."""
    if config.B < 19:
        raise InputError("bootstrap tests need B >= 19")
    stats = estimate_paths(data, outcome_family)
    draws, redraws = _bootstrap_draws(data, outcome_family, config)
    prod_hat = stats.alpha_hat * stats.beta_hat
    total_hat = prod_hat + stats.gamma_hat

    d_nie = draws[:, 0] * draws[:, 1] - prod_hat
    d_nde = draws[:, 2] - stats.gamma_hat
    d_nte = draws[:, 0] * draws[:, 1] + draws[:, 2] - total_hat
    p_nie = _percentile_p(int(np.sum(np.abs(d_nie) >= abs(prod_hat))), config.B)
    p_nde = _percentile_p(int(np.sum(np.abs(d_nde) >= abs(stats.gamma_hat))), config.B)
    p_nte = _percentile_p(int(np.sum(np.abs(d_nte) >= abs(total_hat))), config.B)

    nie, nde, nte = _effects(stats, config.contrast)
    return MediationReport(
        NIE=nie,
        NDE=nde,
        NTE=nte,
        p_value_NIE=p_nie,
        p_value_NDE=p_nde,
        p_value_NTE=p_nte,
        method="classical_bootstrap",
        n=data.n,
        B=config.B,
        lam=config.lam,
        seed=config.seed,
        scale="natural" if outcome_family == "gaussian" else "link",
        redraws=redraws,
    )


def ab_draws(
    data: Dataset, outcome_family: str = "gaussian", config: AbConfig = AbConfig()
) -> list[BootstrapDraw]:
    """The adaptive bootstrap draws behind ab_test, exposed for inspection."""
    stats = estimate_paths(data, outcome_family)
    raw, _ = _bootstrap_draws(data, outcome_family, config)
    return _assemble_draws(stats, raw, config)[0]


def _assemble_draws(stats: TestStatistics, raw: np.ndarray, config: AbConfig):
    lam = config.threshold(stats.n)
    alpha_star = raw[:, 0]
    beta_star = raw[:, 1]
    se_a = raw[:, 3].copy()
    se_b = raw[:, 4].copy()
    # Closed-form resample SEs when available, bootstrap-spread fallback otherwise.
    bad_a = ~np.isfinite(se_a) | (se_a <= 0)
    bad_b = ~np.isfinite(se_b) | (se_b <= 0)
    if np.any(bad_a):
        se_a[bad_a] = max(float(np.std(alpha_star, ddof=1)), 1e-300)
    if np.any(bad_b):
        se_b[bad_b] = max(float(np.std(beta_star, ddof=1)), 1e-300)
    # Centered bootstrap statistics: conditionally pivotal, so the indicator
    # stays Op(1) under the null while |T_obs| alone screens the signal.
    t_a_star = (alpha_star - stats.alpha_hat) / se_a
    t_b_star = (beta_star - stats.beta_hat) / se_b

    draws = []
    for i in range(raw.shape[0]):
        ind_a = ab_indicators(stats.T_alpha, float(t_a_star[i]), lam)
        ind_b = ab_indicators(stats.T_beta, float(t_b_star[i]), lam)
        u = ab_statistic(
            float(alpha_star[i]),
            float(beta_star[i]),
            stats.alpha_hat,
            stats.beta_hat,
            ind_a,
            ind_b,
        )
        draws.append(
            BootstrapDraw(
                alpha_star=float(alpha_star[i]),
                beta_star=float(beta_star[i]),
                T_alpha_star=float(t_a_star[i]),
                T_beta_star=float(t_b_star[i]),
                indicator_alpha=ind_a,
                indicator_beta=ind_b,
                U=u,
            )
        )
    u_values = np.array([d.U for d in draws])
    return draws, u_values


def ab_test(
    data: Dataset, outcome_family: str = "gaussian", config: AbConfig = AbConfig()
) -> MediationReport:
    """Adaptive bootstrap test of the mediated effect.

    The product p-value compares the adaptive statistics against the
    observed product; direct and total effects are tested exactly as in the
    classical bootstrap.
    """
    if config.B < 19:
        raise InputError("bootstrap tests need B >= 19")
    stats = estimate_paths(data, outcome_family)
    raw, redraws = _bootstrap_draws(data, outcome_family, config)
    _, u_values = _assemble_draws(stats, raw, config)

    prod_hat = stats.alpha_hat * stats.beta_hat
    total_hat = prod_hat + stats.gamma_hat
    p_nie = _percentile_p(int(np.sum(np.abs(u_values) >= abs(prod_hat))), config.B)
    d_nde = raw[:, 2] - stats.gamma_hat
    d_nte = raw[:, 0] * raw[:, 1] + raw[:, 2] - total_hat
    p_nde = _percentile_p(int(np.sum(np.abs(d_nde) >= abs(stats.gamma_hat))), config.B)
    p_nte = _percentile_p(int(np.sum(np.abs(d_nte) >= abs(total_hat))), config.B)

    nie, nde, nte = _effects(stats, config.contrast)
    return MediationReport(
        NIE=nie,
        NDE=nde,
        NTE=nte,
        p_value_NIE=p_nie,
        p_value_NDE=p_nde,
        p_value_NTE=p_nte,
        method="adaptive_bootstrap",
        n=data.n,
        B=config.B,
        lam=config.lam,
        seed=config.seed,
        scale="natural" if outcome_family == "gaussian" else "link",
        redraws=redraws,
    )


def run_mediation_test(
    data: Dataset,
    method: str,
    outcome_family: str = "gaussian",
    config: AbConfig = AbConfig(),
) -> MediationReport:
    """Dispatch on method name: 'sobel', 'boot' (classical), or 'ab'."""
    if method == "sobel":
        return sobel_mediation_test(data, outcome_family, config.contrast)
    if method in ("boot", "classical", "classical_bootstrap"):
        return classical_bootstrap_test(data, outcome_family, config)
    if method in ("ab", "adaptive", "adaptive_bootstrap"):
        return ab_test(data, outcome_family, config)
    raise InputError(f"unknown method {method!r}")
