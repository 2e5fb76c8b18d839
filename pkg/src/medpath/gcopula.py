"""Gaussian copula SEM over the mediation triangle.

A trivariate Gaussian copula carries the DAG dependence (through the
correlation matrix implied by the path coefficients at unit error scale),
while each node gets its own exponential-dispersion marginal whose mean may
depend on confounders. Mixed continuous/discrete data are generated by
monotone quantile transforms of latent normals; the likelihood covers the
all-continuous case and the discrete-exposure case in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.stats import poisson as poisson_dist

from .dag import DagCoefficients, DagCovariance, dag_covariance, theta_matrix
from .data import Dataset
from .errors import (
    DomainError,
    EstimationError,
    InputError,
    UnsupportedModelError,
)
from .regression import (
    GlmFit,
    fit_glm,
    normal_cdf,
    normal_logpdf,
    normal_quantile,
)

__all__ = [
    "MarginalSpec",
    "SemSpec",
    "SemTemplate",
    "LatentSample",
    "FittedSem",
    "simulate_latent",
    "marginal_cdf",
    "marginal_quantile",
    "discrete_interval",
    "simulate_dataset",
    "loglik",
    "loglik_gradient",
    "fit_ifm",
    "fit_full_mle",
]

_CONTINUOUS_FAMILIES = ("gaussian",)


@dataclass(frozen=True)
class MarginalSpec:
    """One node's exponential-dispersion marginal.

    confounder_coeffs holds the intercept first, then one coefficient per
    confounder column; the mean is the inverse canonical link of the linear
    predictor. kind follows the family: gaussian is continuous, bernoulli
    and poisson are discrete.
    """

    family: str
    confounder_coeffs: np.ndarray
    dispersion: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaussian", "bernoulli", "poisson"):
            raise InputError(f"unknown family {self.family!r}")
        coeffs = np.atleast_1d(np.asarray(self.confounder_coeffs, dtype=float))
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise InputError("confounder_coeffs must be a non-empty vector")
        object.__setattr__(self, "confounder_coeffs", coeffs)
        if not (math.isfinite(self.dispersion) and self.dispersion > 0):
            raise InputError("dispersion must be positive")
        if self.family != "gaussian" and self.dispersion != 1.0:
            raise InputError(f"{self.family} dispersion is fixed at 1")

    @property
    def link(self) -> str:
        return {"gaussian": "identity", "bernoulli": "logit", "poisson": "log"}[
            self.family
        ]

    @property
    def kind(self) -> str:
        return "continuous" if self.family in _CONTINUOUS_FAMILIES else "discrete"

    def mean(self, confounders) -> np.ndarray:
        """Marginal mean(s) for one confounder row or an (n, p) matrix."""
        w = np.asarray(confounders, dtype=float)
        single = w.ndim <= 1
        w2 = w.reshape(1, -1) if single else w
        if w2.shape[1] != self.confounder_coeffs.size - 1:
            raise InputError(
                f"expected {self.confounder_coeffs.size - 1} confounders, "
                f"got {w2.shape[1]}"
            )
        eta = self.confounder_coeffs[0] + w2 @ self.confounder_coeffs[1:]
        if self.family == "gaussian":
            mu = eta
        elif self.family == "bernoulli":
            mu = 1.0 / (1.0 + np.exp(-eta))
        else:
            mu = np.exp(eta)
        return mu[0] if single and mu.size == 1 else mu

    def to_config(self) -> dict:
        return {
            "family": self.family,
            "link": self.link,
            "coefficients": [float(c) for c in self.confounder_coeffs],
            "dispersion": float(self.dispersion),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "MarginalSpec":
        return cls(
            family=cfg["family"],
            confounder_coeffs=np.asarray(cfg["coefficients"], dtype=float),
            dispersion=float(cfg.get("dispersion", 1.0)),
        )


def _cdf_given_mean(spec: MarginalSpec, x: np.ndarray, mu: np.ndarray) -> np.ndarray:
    if spec.family == "gaussian":
        return normal_cdf((x - mu) / math.sqrt(spec.dispersion))
    if spec.family == "bernoulli":
        return np.where(x < 1.0, 1.0 - mu, 1.0) * (x >= 0.0)
    return poisson_dist.cdf(x, mu)


def _logpdf_given_mean(spec: MarginalSpec, x: np.ndarray, mu: np.ndarray) -> np.ndarray:
    if spec.family != "gaussian":
        raise UnsupportedModelError("density requested for a discrete marginal")
    sd = math.sqrt(spec.dispersion)
    return normal_logpdf((x - mu) / sd) - math.log(sd)


def _check_support(spec: MarginalSpec, value: float) -> None:
    if spec.family == "gaussian":
        if not math.isfinite(value):
            raise DomainError("gaussian marginal requires a finite value")
    elif spec.family == "bernoulli":
        if value not in (0.0, 1.0):
            raise DomainError("bernoulli support is {0, 1}")
    else:
        if value < 0 or value != math.floor(value):
            raise DomainError("poisson support is the non-negative integers")


def marginal_cdf(spec: MarginalSpec, value: float, confounders=()) -> float:
    """Marginal CDF at value, for one observation's confounder vector."""
    _check_support(spec, float(value))
    mu = spec.mean(np.asarray(confounders, dtype=float).reshape(1, -1))
    return float(_cdf_given_mean(spec, np.asarray(float(value)), np.asarray(mu)[0]))


def marginal_quantile(spec: MarginalSpec, p: float, confounders=()) -> float:
    """Generalized inverse CDF at p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise DomainError("quantile requires p strictly inside (0, 1)")
    mu = float(np.asarray(spec.mean(np.asarray(confounders, dtype=float).reshape(1, -1)))[0])
    if spec.family == "gaussian":
        return mu + math.sqrt(spec.dispersion) * normal_quantile(p)
    if spec.family == "bernoulli":
        return 0.0 if p <= 1.0 - mu else 1.0
    return float(poisson_dist.ppf(p, mu))


def discrete_interval(
    spec: MarginalSpec, s: int, confounders=()
) -> tuple[float, float]:
    """Latent-normal interval equivalent to observing a discrete value s."""
    if spec.kind != "discrete":
        raise InputError("discrete_interval requires a discrete marginal")
    _check_support(spec, float(s))
    mu = float(np.asarray(spec.mean(np.asarray(confounders, dtype=float).reshape(1, -1)))[0])
    f_hi = float(_cdf_given_mean(spec, np.asarray(float(s)), np.asarray(mu)))
    f_lo = 0.0 if s <= 0 else float(
        _cdf_given_mean(spec, np.asarray(float(s - 1)), np.asarray(mu))
    )
    lower = -math.inf if f_lo <= 0.0 else normal_quantile(f_lo)
    upper = math.inf if f_hi >= 1.0 else normal_quantile(f_hi)
    return lower, upper


@dataclass(frozen=True)
class SemSpec:
    """Full copula SEM: path coefficients plus one marginal per node.

    The dependence matrix is derived from the coefficients at unit error
    scale, so it carries correlations only.
    """

    coeffs: DagCoefficients
    exposure: MarginalSpec
    mediator: MarginalSpec
    outcome: MarginalSpec
    dependence: DagCovariance = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dependence", dag_covariance(self.coeffs))

    @property
    def marginals(self) -> tuple[MarginalSpec, MarginalSpec, MarginalSpec]:
        return (self.exposure, self.mediator, self.outcome)

    def to_config(self) -> dict:
        return {
            "coefficients": {
                "alpha": self.coeffs.alpha,
                "beta": self.coeffs.beta,
                "gamma": self.coeffs.gamma,
            },
            "marginals": {
                "exposure": self.exposure.to_config(),
                "mediator": self.mediator.to_config(),
                "outcome": self.outcome.to_config(),
            },
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "SemSpec":
        c = cfg["coefficients"]
        m = cfg["marginals"]
        return cls(
            coeffs=DagCoefficients(
                float(c["alpha"]), float(c["beta"]), float(c["gamma"])
            ),
            exposure=MarginalSpec.from_config(m["exposure"]),
            mediator=MarginalSpec.from_config(m["mediator"]),
            outcome=MarginalSpec.from_config(m["outcome"]),
        )


@dataclass(frozen=True)
class SemTemplate:
    """Model shape for fitting: marginal families only, values left open."""

    exposure_family: str = "gaussian"
    mediator_family: str = "gaussian"
    outcome_family: str = "gaussian"


@dataclass(frozen=True)
class LatentSample:
    """Latent normal draws; starred versions are scaled to unit variance."""

    z_s: np.ndarray
    z_m: np.ndarray
    z_y: np.ndarray
    z_m_star: np.ndarray
    z_y_star: np.ndarray

    def __len__(self):
        return len(self.z_s)


def simulate_latent(coeffs: DagCoefficients, n: int, seed: int) -> LatentSample:
    """Draw n latent triples from the recursive unit-error system."""
    if n < 1:
        raise InputError("n must be at least 1")
    rng = np.random.default_rng(seed)
    z_s = rng.standard_normal(n)
    z_m = coeffs.alpha * z_s + rng.standard_normal(n)
    z_y = coeffs.gamma * z_s + coeffs.beta * z_m + rng.standard_normal(n)
    dep = dag_covariance(coeffs)
    return LatentSample(
        z_s=z_s,
        z_m=z_m,
        z_y=z_y,
        z_m_star=z_m / dep.tau_m,
        z_y_star=z_y / dep.tau_y,
    )


def _observed_from_latent(
    spec: MarginalSpec, z: np.ndarray, confounders: np.ndarray
) -> np.ndarray:
    mu = np.atleast_1d(spec.mean(confounders))
    if spec.family == "gaussian":
        return mu + math.sqrt(spec.dispersion) * z
    u = normal_cdf(z)
    if spec.family == "bernoulli":
        return (u > 1.0 - mu).astype(float)
    return poisson_dist.ppf(u, mu)


def simulate_dataset(spec: SemSpec, confounders: np.ndarray, seed: int) -> Dataset:
    """Simulate observed (S, M, Y) given confounder rows; n = row count."""
    w = np.asarray(confounders, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    n = w.shape[0]
    latent = simulate_latent(spec.coeffs, n, seed)
    s = _observed_from_latent(spec.exposure, latent.z_s, w)
    m = _observed_from_latent(spec.mediator, latent.z_m_star, w)
    y = _observed_from_latent(spec.outcome, latent.z_y_star, w)
    return Dataset(exposure=s, mediator=m, outcome=y, confounders=w)


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------

def _continuous_scores(spec: MarginalSpec, x: np.ndarray, w: np.ndarray):
    mu = np.atleast_1d(spec.mean(w))
    sd = math.sqrt(spec.dispersion)
    z = (x - mu) / sd
    logf = normal_logpdf(z) - math.log(sd)
    return z, logf


def _check_likelihood_pattern(spec: SemSpec) -> None:
    if spec.mediator.kind != "continuous" or spec.outcome.kind != "continuous":
        raise UnsupportedModelError(
            "likelihood supports continuous mediator and outcome only"
        )


def loglik(spec: SemSpec, data: Dataset) -> float:
    """Joint log likelihood of the dataset under the copula SEM.

    All-continuous observations use the Gaussian copula density times the
    marginal densities; a discrete exposure is handled by differencing the
    conditional latent-normal CDF across its interval.
    """
    _check_likelihood_pattern(spec)
    r = spec.dependence.gamma_corr
    w = data.confounders
    z_m, logf_m = _continuous_scores(spec.mediator, data.mediator, w)
    z_y, logf_y = _continuous_scores(spec.outcome, data.outcome, w)

    if spec.exposure.kind == "continuous":
        z_s, logf_s = _continuous_scores(spec.exposure, data.exposure, w)
        z = np.column_stack([z_s, z_m, z_y])
        rinv = np.linalg.inv(r)
        _, logdet = np.linalg.slogdet(r)
        quad = np.einsum("ij,jk,ik->i", z, rinv, z)
        log_mvn = -1.5 * math.log(2 * math.pi) - 0.5 * logdet - 0.5 * quad
        log_phi = normal_logpdf(z_s) + normal_logpdf(z_m) + normal_logpdf(z_y)
        return float(np.sum(log_mvn - log_phi + logf_s + logf_m + logf_y))

    # Discrete exposure: condition the exposure's latent on the two scores.
    rho_my = r[1, 2]
    det = 1.0 - rho_my**2
    a = (r[0, 1] - r[0, 2] * rho_my) / det
    b = (r[0, 2] - r[0, 1] * rho_my) / det
    cond_var = 1.0 - (a * r[0, 1] + b * r[0, 2])
    cond_sd = math.sqrt(max(cond_var, 1e-12))
    cond_mean = a * z_m + b * z_y

    log_c23 = -0.5 * math.log(det) - (
        rho_my**2 * (z_m**2 + z_y**2) - 2.0 * rho_my * z_m * z_y
    ) / (2.0 * det)

    mu_s = np.atleast_1d(spec.exposure.mean(w))
    s = data.exposure
    f_hi = _cdf_given_mean(spec.exposure, s, mu_s)
    f_lo = np.where(s <= 0, 0.0, _cdf_given_mean(spec.exposure, s - 1.0, mu_s))
    upper = np.where(f_hi >= 1.0, math.inf, normal_quantile(np.clip(f_hi, 1e-300, 1 - 1e-16)))
    lower = np.where(f_lo <= 0.0, -math.inf, normal_quantile(np.clip(f_lo, 1e-300, 1 - 1e-16)))
    prob = normal_cdf((upper - cond_mean) / cond_sd) - normal_cdf(
        (lower - cond_mean) / cond_sd
    )
    prob = np.clip(prob, 1e-300, 1.0)
    return float(np.sum(log_c23 + logf_m + logf_y + np.log(prob)))


def _corr_and_derivs(coeffs: DagCoefficients):
    theta = theta_matrix(coeffs)
    amat = np.eye(3) + theta + theta @ theta
    gamma = amat @ amat.T
    d = np.sqrt(np.diag(gamma))
    corr = gamma / np.outer(d, d)
    np.fill_diagonal(corr, 1.0)

    d_theta = {
        "alpha": np.zeros((3, 3)),
        "beta": np.zeros((3, 3)),
        "gamma": np.zeros((3, 3)),
    }
    d_theta["alpha"][1, 0] = 1.0
    d_theta["beta"][2, 1] = 1.0
    d_theta["gamma"][2, 0] = 1.0

    d_corr = []
    for key in ("alpha", "beta", "gamma"):
        da = amat @ d_theta[key] @ amat
        dg = da @ amat.T + amat @ da.T
        diag = np.diag(dg) / np.diag(gamma)
        dr = dg / np.outer(d, d) - 0.5 * corr * (diag[:, None] + diag[None, :])
        np.fill_diagonal(dr, 0.0)
        d_corr.append(dr)
    return corr, d_corr


def loglik_gradient(spec: SemSpec, data: Dataset) -> np.ndarray:
    """Analytic gradient of loglik in (alpha, beta, gamma); continuous case only."""
    if any(m.kind != "continuous" for m in spec.marginals):
        raise UnsupportedModelError("analytic gradient requires continuous marginals")
    w = data.confounders
    z_s, _ = _continuous_scores(spec.exposure, data.exposure, w)
    z_m, _ = _continuous_scores(spec.mediator, data.mediator, w)
    z_y, _ = _continuous_scores(spec.outcome, data.outcome, w)
    z = np.column_stack([z_s, z_m, z_y])
    corr, d_corr = _corr_and_derivs(spec.coeffs)
    rinv = np.linalg.inv(corr)
    s_n = z.T @ z
    g = 0.5 * (rinv @ s_n @ rinv - data.n * rinv)
    return np.array([float(np.sum(g * dr)) for dr in d_corr])


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FittedSem:
    """Fitted copula SEM with stage-wise diagnostics.

    standard_errors covers (alpha, beta, gamma) from the inverse observed
    information of the dependence stage; no two-stage correction is applied,
    bootstrap procedures are the sanctioned inference route. linear_coeffs
    carries the classical linear-SEM path coefficients implied by the fit
    when all marginals are gaussian (None otherwise).
    """

    sem: SemSpec
    standard_errors: tuple[float, float, float]
    loglik: float
    stage1: tuple[GlmFit, GlmFit, GlmFit]
    linear_coeffs: DagCoefficients | None
    method: str
    converged: bool
    fallback_ifm: bool = False

    def to_config(self) -> dict:
        cfg = self.sem.to_config()
        cfg["standard_errors"] = {
            "alpha": self.standard_errors[0],
            "beta": self.standard_errors[1],
            "gamma": self.standard_errors[2],
        }
        cfg["loglik"] = self.loglik
        cfg["method"] = self.method
        cfg["converged"] = self.converged
        if self.linear_coeffs is not None:
            cfg["linear_coefficients"] = {
                "alpha": self.linear_coeffs.alpha,
                "beta": self.linear_coeffs.beta,
                "gamma": self.linear_coeffs.gamma,
            }
        return cfg


def _node_design(data: Dataset) -> np.ndarray:
    return np.column_stack([np.ones(data.n), data.confounders])


def _fit_marginal(family: str, design: np.ndarray, x: np.ndarray) -> tuple[MarginalSpec, GlmFit]:
    fit = fit_glm(design, x, family)
    if family == "gaussian":
        # Marginal dispersion by maximum likelihood (n denominator).
        n, q = fit.n, len(fit.coefficients)
        dispersion = fit.dispersion * (n - q) / n
    else:
        dispersion = 1.0
    spec = MarginalSpec(
        family=family, confounder_coeffs=fit.coefficients, dispersion=dispersion
    )
    return spec, fit


def _score_columns(spec: SemSpec, data: Dataset) -> np.ndarray:
    """Normal scores of the three nodes (midpoint latent for a discrete exposure)."""
    w = data.confounders
    cols = []
    for marg, x in zip(
        spec.marginals, (data.exposure, data.mediator, data.outcome)
    ):
        if marg.kind == "continuous":
            z, _ = _continuous_scores(marg, x, w)
        else:
            mu = np.atleast_1d(marg.mean(w))
            f_hi = _cdf_given_mean(marg, x, mu)
            f_lo = np.where(x <= 0, 0.0, _cdf_given_mean(marg, x - 1.0, mu))
            u = np.clip(0.5 * (f_hi + f_lo), 1e-12, 1.0 - 1e-12)
            z = normal_quantile(u)
        cols.append(z)
    return np.column_stack(cols)


def _start_coeffs(z: np.ndarray) -> np.ndarray:
    """Map normal scores to starting (alpha, beta, gamma) via OLS on the scores."""
    zs, zm, zy = z[:, 0], z[:, 1], z[:, 2]
    ones = np.ones(len(zs))

    def _slope_fit(design, resp):
        coef, *_ = np.linalg.lstsq(design, resp, rcond=None)
        resid = resp - design @ coef
        return coef, math.sqrt(max(float(resid @ resid) / len(resp), 1e-10))

    coef_m, _ = _slope_fit(np.column_stack([ones, zs]), zm)
    s1 = float(np.clip(coef_m[1], -0.99, 0.99))
    alpha0 = s1 / math.sqrt(1.0 - s1**2)
    tau_m0 = math.sqrt(1.0 + alpha0**2)

    coef_y, resid_sd = _slope_fit(np.column_stack([ones, zs, zm]), zy)
    tau_y0 = 1.0 / max(resid_sd, 1e-3)
    gamma0 = float(coef_y[1]) * tau_y0
    beta0 = float(coef_y[2]) * tau_y0 / tau_m0
    return np.array([alpha0, beta0, gamma0])


def _stage2_objective(data: Dataset, stage1: SemSpec):
    continuous = all(m.kind == "continuous" for m in stage1.marginals)

    def negll(theta):
        spec = replace(
            stage1, coeffs=DagCoefficients(theta[0], theta[1], theta[2])
        )
        return -loglik(spec, data)

    if not continuous:
        return negll, None

    def grad(theta):
        spec = replace(
            stage1, coeffs=DagCoefficients(theta[0], theta[1], theta[2])
        )
        return -loglik_gradient(spec, data)

    return negll, grad


def _numerical_hessian(fun, x0: np.ndarray, step: float = 1e-4) -> np.ndarray:
    k = len(x0)
    h = np.empty((k, k))
    f0 = fun(x0)
    steps = step * np.maximum(1.0, np.abs(x0))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = steps[i]
        for j in range(i, k):
            ej = np.zeros(k)
            ej[j] = steps[j]
            if i == j:
                val = (fun(x0 + ei) - 2.0 * f0 + fun(x0 - ei)) / steps[i] ** 2
            else:
                val = (
                    fun(x0 + ei + ej)
                    - fun(x0 + ei - ej)
                    - fun(x0 - ei + ej)
                    + fun(x0 - ei - ej)
                ) / (4.0 * steps[i] * steps[j])
            h[i, j] = h[j, i] = val
    return h


def _dependence_ses(negll, theta: np.ndarray) -> tuple[float, float, float]:
    try:
        hess = _numerical_hessian(negll, theta)
        cov = np.linalg.inv(hess)
        diag = np.diag(cov)
        if np.any(diag <= 0):
            raise np.linalg.LinAlgError
        se = np.sqrt(diag)
    except np.linalg.LinAlgError:
        se = np.full(3, math.nan)
    return float(se[0]), float(se[1]), float(se[2])


def _linear_reduction(spec: SemSpec) -> DagCoefficients | None:
    if any(m.family != "gaussian" for m in spec.marginals):
        return None
    sd_s = math.sqrt(spec.exposure.dispersion)
    sd_m = math.sqrt(spec.mediator.dispersion)
    sd_y = math.sqrt(spec.outcome.dispersion)
    tau_m = spec.dependence.tau_m
    tau_y = spec.dependence.tau_y
    c = spec.coeffs
    return DagCoefficients(
        alpha=c.alpha * sd_m / (tau_m * sd_s),
        beta=c.beta * sd_y * tau_m / (tau_y * sd_m),
        gamma=c.gamma * sd_y / (tau_y * sd_s),
    )


def fit_ifm(data: Dataset, template: SemTemplate = SemTemplate()) -> FittedSem:
    """Two-stage fit: GLM marginals first, then DAG coefficients by MLE.

    Stage two maximizes the copula log likelihood over (alpha, beta, gamma)
    with every stage-one marginal parameter held fixed.
    """
    design = _node_design(data)
    exposure, fit_s = _fit_marginal(template.exposure_family, design, data.exposure)
    mediator, fit_m = _fit_marginal(template.mediator_family, design, data.mediator)
    outcome, fit_y = _fit_marginal(template.outcome_family, design, data.outcome)

    stage1 = SemSpec(
        coeffs=DagCoefficients(0.0, 0.0, 0.0),
        exposure=exposure,
        mediator=mediator,
        outcome=outcome,
    )
    _check_likelihood_pattern(stage1)
    theta0 = _start_coeffs(_score_columns(stage1, data))
    negll, grad = _stage2_objective(data, stage1)
    res = minimize(negll, theta0, jac=grad, method="BFGS", options={"gtol": 1e-8})
    if not np.all(np.isfinite(res.x)):
        raise EstimationError("dependence-stage optimizer returned non-finite values")
    theta = res.x
    sem = replace(
        stage1,
        coeffs=DagCoefficients(float(theta[0]), float(theta[1]), float(theta[2])),
    )
    return FittedSem(
        sem=sem,
        standard_errors=_dependence_ses(negll, theta),
        loglik=loglik(sem, data),
        stage1=(fit_s, fit_m, fit_y),
        linear_coeffs=_linear_reduction(sem),
        method="ifm",
        converged=bool(res.success),
    )


def _pack_spec(spec: SemSpec) -> tuple[np.ndarray, list]:
    """Flatten all free parameters; layout notes which slices belong where."""
    values: list[float] = []
    layout = []
    for name, marg in zip(("exposure", "mediator", "outcome"), spec.marginals):
        k = marg.confounder_coeffs.size
        layout.append((name, k, marg.family == "gaussian"))
        values.extend(marg.confounder_coeffs.tolist())
        if marg.family == "gaussian":
            values.append(math.log(marg.dispersion))
    values.extend([spec.coeffs.alpha, spec.coeffs.beta, spec.coeffs.gamma])
    return np.array(values), layout


def _unpack_spec(params: np.ndarray, layout: list, template_spec: SemSpec) -> SemSpec:
    pos = 0
    margs = {}
    for name, k, has_disp in layout:
        coeffs = params[pos : pos + k]
        pos += k
        disp = 1.0
        if has_disp:
            disp = math.exp(float(np.clip(params[pos], -40, 40)))
            pos += 1
        old = getattr(template_spec, name)
        margs[name] = MarginalSpec(
            family=old.family, confounder_coeffs=coeffs, dispersion=disp
        )
    alpha, beta, gamma = params[pos : pos + 3]
    return SemSpec(
        coeffs=DagCoefficients(float(alpha), float(beta), float(gamma)),
        exposure=margs["exposure"],
        mediator=margs["mediator"],
        outcome=margs["outcome"],
    )


def fit_full_mle(data: Dataset, template: SemTemplate = SemTemplate()) -> FittedSem:
    """Joint maximum likelihood over marginal and DAG parameters.

    Starts from the IFM solution; the returned log likelihood never falls
    below the IFM one (the IFM parameters are kept if the joint optimizer
    cannot improve on them, flagged via fallback_ifm).
    """
    ifm = fit_ifm(data, template)
    x0, layout = _pack_spec(ifm.sem)

    def negll(params):
        try:
            spec = _unpack_spec(params, layout, ifm.sem)
            val = -loglik(spec, data)
        except (InputError, FloatingPointError, OverflowError):
            return math.inf
        return val if np.isfinite(val) else math.inf

    try:
        res = minimize(negll, x0, method="BFGS", options={"gtol": 1e-6})
    except Exception as exc:  # noqa: BLE001 - optimizer backends vary
        raise EstimationError(f"full MLE optimizer failed: {exc}") from None

    fallback = (not np.all(np.isfinite(res.x))) or (-res.fun < ifm.loglik)
    if fallback:
        spec = ifm.sem
        ll = ifm.loglik
        theta = np.array(
            [spec.coeffs.alpha, spec.coeffs.beta, spec.coeffs.gamma]
        )
    else:
        spec = _unpack_spec(res.x, layout, ifm.sem)
        ll = -float(res.fun)
        theta = res.x[-3:]

    negll_theta, _ = _stage2_objective(data, spec)
    return FittedSem(
        sem=spec,
        standard_errors=_dependence_ses(negll_theta, theta),
        loglik=ll,
        stage1=ifm.stage1,
        linear_coeffs=_linear_reduction(spec),
        method="mle",
        converged=bool(res.success) and not fallback,
        fallback_ifm=fallback,
    )
