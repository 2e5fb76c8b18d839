"""Three-node mediation DAG: path coefficients and induced covariance algebra.

The DAG is exposure -> mediator -> outcome with a direct exposure -> outcome
edge. Path coefficients live in a strictly lower triangular matrix; the
implied covariance of the node triple follows from inverting the recursive
system. Confounders never enter here: they shift marginal means only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "DagCoefficients",
    "ErrorScales",
    "DagCovariance",
    "theta_matrix",
    "dag_covariance",
    "correlation_entries",
]


@dataclass(frozen=True)
class DagCoefficients:
    """Path coefficients of the mediation triangle.

    alpha: exposure -> mediator, beta: mediator -> outcome,
    gamma: exposure -> outcome (direct edge).
    """

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InputError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class ErrorScales:
    """Standard deviations of the three structural error terms."""

    sigma_s: float = 1.0
    sigma_m: float = 1.0
    sigma_y: float = 1.0

    def __post_init__(self):
        for name in ("sigma_s", "sigma_m", "sigma_y"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InputError(f"{name} must be a positive real, got {v!r}")


@dataclass(frozen=True)
class DagCovariance:
    """Covariance and correlation implied by the DAG coefficients.

    gamma_cov is the 3x3 covariance of (exposure, mediator, outcome);
    gamma_corr is its correlation rescaling. tau_m and tau_y are the
    marginal standard deviations of the mediator and outcome nodes on the
    latent (unit error) scale, used to standardize latent draws.
    """

    gamma_cov: np.ndarray
    gamma_corr: np.ndarray
    tau_m: float
    tau_y: float


def theta_matrix(coeffs: DagCoefficients) -> np.ndarray:
    """Strictly lower triangular coefficient matrix of the recursive system."""
    return np.array(
        [
            [0.0, 0.0, 0.0],
            [coeffs.alpha, 0.0, 0.0],
            [coeffs.gamma, coeffs.beta, 0.0],
        ]
    )


def _inv_i_minus_theta(coeffs: DagCoefficients) -> np.ndarray:
    # (I - Theta)^-1 in closed form: Theta is nilpotent, so the Neumann
    # series terminates at Theta^2.
    theta = theta_matrix(coeffs)
    return np.eye(3) + theta + theta @ theta


def dag_covariance(
    coeffs: DagCoefficients, scales: ErrorScales = ErrorScales()
) -> DagCovariance:
    """Covariance of the node triple induced by the coefficients and error scales.

    Returns the covariance (I-Theta)^-1 Sigma (I-Theta)^-T, its correlation
    rescaling, and the latent scale factors tau_m, tau_y.
    """
    a = _inv_i_minus_theta(coeffs)
    sigma = np.diag(
        [scales.sigma_s**2, scales.sigma_m**2, scales.sigma_y**2]
    )
    cov = a @ sigma @ a.T
    d = np.sqrt(np.diag(cov))
    corr = cov / np.outer(d, d)
    np.fill_diagonal(corr, 1.0)
    tau_m = d[1] / scales.sigma_m
    tau_y = d[2] / scales.sigma_y
    cov.setflags(write=False)
    corr.setflags(write=False)
    return DagCovariance(gamma_cov=cov, gamma_corr=corr, tau_m=tau_m, tau_y=tau_y)


def correlation_entries(cov: DagCovariance) -> tuple[float, float, float]:
    """The three free correlations (rho_sm, rho_sy, rho_my)."""
    r = cov.gamma_corr
    return float(r[0, 1]), float(r[0, 2]), float(r[1, 2])
