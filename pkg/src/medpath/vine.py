"""D-vine pair-copula machinery and pathway independence tests.

Pair copulas (independence, gaussian, clayton) with their h-functions are
composed along a path order into conditional densities, conditional
quantiles, node-given-parents densities, and the fixed four-node
decomposition for an exposure, two sequential mediators, and an outcome.
The simplifying assumption holds throughout: conditional copula parameters
do not vary with conditioning values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import (
    DomainError,
    EstimationError,
    InputError,
    InsufficientDataError,
)
from .gcopula import MarginalSpec
from .regression import normal_cdf, normal_pdf, normal_quantile

__all__ = [
    "PairCopula",
    "FittedPairCopula",
    "DVineSpec",
    "DagVineSpec",
    "PathwayTestResult",
    "pair_density",
    "pair_cdf",
    "h_function",
    "h_inverse",
    "dvine_conditional_density",
    "dvine_conditional_quantile",
    "dag_node_density",
    "joint_density_4node",
    "simulate_4node",
    "fit_pair_copula",
    "fit_dag_vine",
    "pathway_independence_test",
]

PATHWAYS = ("direct_SY", "mediated_SMY", "composite_SZY")


@dataclass(frozen=True)
class PairCopula:
    """A bivariate copula family with its single parameter.

    gaussian takes rho in (-1, 1), clayton takes theta > 0, independence
    takes no parameter.
    """

    family: str
    parameter: float | None = None

    def __post_init__(self):
        if self.family == "independence":
            if self.parameter is not None:
                raise InputError("independence copula takes no parameter")
        elif self.family == "gaussian":
            if self.parameter is None or not -1.0 < self.parameter < 1.0:
                raise InputError("gaussian copula requires rho in (-1, 1)")
        elif self.family == "clayton":
            if self.parameter is None or self.parameter <= 0.0:
                raise InputError("clayton copula requires theta > 0")
        else:
            raise InputError(f"unknown copula family {self.family!r}")

    def to_config(self) -> dict:
        return {"family": self.family, "parameter": self.parameter}

    @classmethod
    def from_config(cls, cfg: dict) -> "PairCopula":
        return cls(family=cfg["family"], parameter=cfg.get("parameter"))


INDEPENDENCE = PairCopula("independence")


def _check_unit_interval(*arrays) -> list[np.ndarray]:
    out = []
    for a in arrays:
        arr = np.asarray(a, dtype=float)
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise DomainError("copula arguments must lie strictly inside (0, 1)")
        out.append(arr)
    return out


def _maybe_scalar(value, *inputs):
    if all(np.ndim(x) == 0 for x in inputs):
        return float(value)
    return value


def pair_density(cop: PairCopula, u, v):
    """Copula density c(u, v)."""
    u, v = _check_unit_interval(u, v)
    if cop.family == "independence":
        out = np.ones(np.broadcast(u, v).shape)
        return _maybe_scalar(out if out.shape else 1.0, u, v)
    if cop.family == "gaussian":
        rho = cop.parameter
        x = normal_quantile(np.atleast_1d(u))
        y = normal_quantile(np.atleast_1d(v))
        det = 1.0 - rho**2
        val = np.exp(
            -(rho**2 * (x**2 + y**2) - 2.0 * rho * x * y) / (2.0 * det)
        ) / math.sqrt(det)
        out = val.reshape(np.broadcast(u, v).shape)
        return _maybe_scalar(out, u, v)
    theta = cop.parameter
    a = u ** (-theta) + v ** (-theta) - 1.0
    out = (1.0 + theta) * (u * v) ** (-1.0 - theta) * a ** (-2.0 - 1.0 / theta)
    return _maybe_scalar(out, u, v)


def pair_cdf(cop: PairCopula, u: float, v: float) -> float:
    """Copula CDF C(u, v); scalar arguments (quadrature for the gaussian family)."""
    (u_arr, v_arr) = _check_unit_interval(u, v)
    u, v = float(u_arr), float(v_arr)
    if cop.family == "independence":
        return u * v
    if cop.family == "clayton":
        theta = cop.parameter
        return (u ** (-theta) + v ** (-theta) - 1.0) ** (-1.0 / theta)
    rho = cop.parameter
    x = normal_quantile(u)
    y = normal_quantile(v)
    s = math.sqrt(1.0 - rho**2)

    def integrand(t):
        return normal_pdf(t) * normal_cdf((x - rho * t) / s)

    val, _ = quad(integrand, -40.0, y, epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(val)


def h_function(cop: PairCopula, u, v):
    """Conditional CDF of the first argument given the second: dC(u, v)/dv."""
    u, v = _check_unit_interval(u, v)
    if cop.family == "independence":
        return _maybe_scalar(np.broadcast_arrays(u, np.zeros_like(v))[0] + 0.0, u, v)
    if cop.family == "gaussian":
        rho = cop.parameter
        x = normal_quantile(np.atleast_1d(u))
        y = normal_quantile(np.atleast_1d(v))
        out = normal_cdf((x - rho * y) / math.sqrt(1.0 - rho**2))
        out = np.asarray(out).reshape(np.broadcast(u, v).shape)
        return _maybe_scalar(out, u, v)
    theta = cop.parameter
    a = u ** (-theta) + v ** (-theta) - 1.0
    out = v ** (-1.0 - theta) * a ** (-1.0 - 1.0 / theta)
    return _maybe_scalar(out, u, v)


def h_inverse(cop: PairCopula, w, v):
    """Inverse of h_function in its first argument at fixed v."""
    w, v = _check_unit_interval(w, v)
    if cop.family == "independence":
        return _maybe_scalar(np.broadcast_arrays(w, np.zeros_like(v))[0] + 0.0, w, v)
    if cop.family == "gaussian":
        rho = cop.parameter
        z = normal_quantile(np.atleast_1d(w))
        y = normal_quantile(np.atleast_1d(v))
        out = normal_cdf(z * math.sqrt(1.0 - rho**2) + rho * y)
        out = np.asarray(out).reshape(np.broadcast(w, v).shape)
        return _maybe_scalar(out, w, v)
    theta = cop.parameter
    a = (w * v ** (1.0 + theta)) ** (-theta / (1.0 + theta)) - v ** (-theta) + 1.0
    out = a ** (-1.0 / theta)
    return _maybe_scalar(out, w, v)


# ---------------------------------------------------------------------------
# D-vine regression structures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DVineSpec:
    """Pair copulas of a D-vine along a path, response variable first.

    pairs[j] holds tree j+1 in path order: its copulas are conditioned on
    the j variables lying between the pair on the path. For k covariates
    the triangular array has k * (k + 1) / 2 entries.
    """

    order: tuple[str, ...]
    pairs: tuple[tuple[PairCopula, ...], ...]

    def __post_init__(self):
        k = len(self.order) - 1
        if k < 1:
            raise InputError("D-vine needs a response and at least one covariate")
        pairs = tuple(tuple(level) for level in self.pairs)
        if len(pairs) != k or any(
            len(level) != k - j for j, level in enumerate(pairs)
        ):
            raise InputError("pair array must be triangular: tree j has k+1-j edges")
        object.__setattr__(self, "pairs", pairs)

    @property
    def n_covariates(self) -> int:
        return len(self.order) - 1


def _dvine_sweep(spec: DVineSpec, cols: list[np.ndarray]):
    """Run the h-function recursion; returns the response-edge log density."""
    left = [c for c in cols]
    right = [c for c in cols]
    logdens = np.zeros(np.broadcast(*cols).shape)
    k = spec.n_covariates
    for tree in range(1, k + 1):
        new_left, new_right = [], []
        for i in range(k + 1 - tree):
            cop = spec.pairs[tree - 1][i]
            a = left[i]
            b = right[i + 1]
            if i == 0:
                logdens = logdens + np.log(pair_density(cop, a, b))
            new_left.append(np.clip(h_function(cop, a, b), 1e-15, 1 - 1e-15))
            new_right.append(np.clip(h_function(cop, b, a), 1e-15, 1 - 1e-15))
        left, right = new_left, new_right
    return logdens


def dvine_conditional_density(spec: DVineSpec, v, u):
    """Conditional copula density of the response given covariates.

    v is the response on the copula scale; u holds the k covariate values
    (last axis when arrays are passed).
    """
    v_arr = np.asarray(v, dtype=float)
    u_arr = np.atleast_2d(np.asarray(u, dtype=float))
    if u_arr.shape[-1] != spec.n_covariates:
        raise InputError(f"expected {spec.n_covariates} covariate values")
    cols = [np.atleast_1d(v_arr)] + [u_arr[..., j] for j in range(u_arr.shape[-1])]
    _check_unit_interval(*cols)
    out = np.exp(_dvine_sweep(spec, cols))
    if v_arr.ndim == 0 and np.ndim(u) <= 1:
        return float(out.reshape(-1)[0])
    return out


def _covariate_conditionals(spec: DVineSpec, u_row: np.ndarray) -> list[np.ndarray]:
    """F(u_t | u_1..u_{t-1}) for t = 1..k, shared by quantile inversion."""
    k = spec.n_covariates
    conds = [np.atleast_1d(u_row[..., 0])]
    left = [np.atleast_1d(u_row[..., j]) for j in range(k)]
    right = [np.atleast_1d(u_row[..., j]) for j in range(k)]
    for tree in range(1, k):
        new_left, new_right = [], []
        for i in range(k - tree):
            cop = spec.pairs[tree - 1][i + 1]
            a, b = left[i], right[i + 1]
            new_left.append(np.clip(h_function(cop, a, b), 1e-15, 1 - 1e-15))
            new_right.append(np.clip(h_function(cop, b, a), 1e-15, 1 - 1e-15))
        left, right = new_left, new_right
        conds.append(right[0])
    return conds


def dvine_conditional_quantile(
    spec: DVineSpec,
    alpha,
    x,
    response_marginal: MarginalSpec,
    covariate_marginals: tuple[MarginalSpec, ...],
    confounders=(),
):
    """Conditional quantile of the response at level alpha given covariates x.

    Marginals map the covariates to the copula scale and the copula-scale
    quantile back to the response scale; all marginals are continuous here.
    """
    from .gcopula import marginal_cdf, marginal_quantile

    alpha_f = float(alpha)
    if not 0.0 < alpha_f < 1.0:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(covariate_marginals) != spec.n_covariates or len(x) != spec.n_covariates:
        raise InputError("one covariate value and marginal per vine covariate")
    u = np.array(
        [marginal_cdf(m, xi, confounders) for m, xi in zip(covariate_marginals, x)]
    )
    u = np.clip(u, 1e-15, 1 - 1e-15)
    conds = _covariate_conditionals(spec, u)
    w = np.atleast_1d(alpha_f)
    for tree in range(spec.n_covariates, 0, -1):
        w = h_inverse(spec.pairs[tree - 1][0], w, conds[tree - 1])
        w = np.clip(w, 1e-15, 1 - 1e-15)
    return marginal_quantile(response_marginal, float(w[0]), confounders)


def dag_node_density(
    spec: DVineSpec,
    x_node,
    x_parents,
    node_marginal: MarginalSpec,
    parent_marginals: tuple[MarginalSpec, ...],
    confounders=(),
):
    """Density of a node given its parents: conditional copula terms times
    the node's marginal density. Parent ordering is the caller's choice and
    must match the vine spec. With no parents this is the marginal density.
    """
    from .gcopula import marginal_cdf

    x_node = float(x_node)
    parents = np.atleast_1d(np.asarray(x_parents, dtype=float))
    mu = node_marginal.mean(np.asarray(confounders, dtype=float).reshape(1, -1))
    sd = math.sqrt(node_marginal.dispersion)
    z = (x_node - float(np.asarray(mu)[0])) / sd
    logf = float(normal_pdf(z)) / sd
    if parents.size == 0:
        return logf
    v = np.clip(marginal_cdf(node_marginal, x_node, confounders), 1e-15, 1 - 1e-15)
    u = np.array(
        [
            np.clip(marginal_cdf(m, xp, confounders), 1e-15, 1 - 1e-15)
            for m, xp in zip(parent_marginals, parents)
        ]
    )
    return float(dvine_conditional_density(spec, v, u)) * logf


# ---------------------------------------------------------------------------
# Four-node DAG decomposition (exposure, two sequential mediators, outcome)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DagVineSpec:
    """D-vine decomposition of (S, Z, M, Y) in the fixed path order S-Z-M-Y.

    Six pair copulas: three unconditional neighbours (sz, zm, my), two
    single-conditioned (sm_z, zy_m) and the doubly conditioned direct-effect
    term sy_zm. Marginals must be continuous.
    """

    sz: PairCopula
    zm: PairCopula
    my: PairCopula
    sm_z: PairCopula
    zy_m: PairCopula
    sy_zm: PairCopula
    marginal_s: MarginalSpec
    marginal_z: MarginalSpec
    marginal_m: MarginalSpec
    marginal_y: MarginalSpec

    def __post_init__(self):
        for name in ("marginal_s", "marginal_z", "marginal_m", "marginal_y"):
            if getattr(self, name).kind != "continuous":
                raise InputError("vine marginals must be continuous")

    @property
    def marginals(self):
        return (self.marginal_s, self.marginal_z, self.marginal_m, self.marginal_y)

    @property
    def pair_names(self) -> tuple[str, ...]:
        return ("sz", "zm", "my", "sm_z", "zy_m", "sy_zm")

    def to_config(self) -> dict:
        return {
            "nodes": ["S", "Z", "M", "Y"],
            "pairs": {name: getattr(self, name).to_config() for name in self.pair_names},
            "marginals": {
                "S": self.marginal_s.to_config(),
                "Z": self.marginal_z.to_config(),
                "M": self.marginal_m.to_config(),
                "Y": self.marginal_y.to_config(),
            },
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "DagVineSpec":
        pairs = {k: PairCopula.from_config(v) for k, v in cfg["pairs"].items()}
        margs = {k: MarginalSpec.from_config(v) for k, v in cfg["marginals"].items()}
        return cls(
            sz=pairs["sz"],
            zm=pairs["zm"],
            my=pairs["my"],
            sm_z=pairs["sm_z"],
            zy_m=pairs["zy_m"],
            sy_zm=pairs["sy_zm"],
            marginal_s=margs["S"],
            marginal_z=margs["Z"],
            marginal_m=margs["M"],
            marginal_y=margs["Y"],
        )


def _uniform_scores(marginal: MarginalSpec, x: np.ndarray) -> np.ndarray:
    mu = float(marginal.confounder_coeffs[0])
    sd = math.sqrt(marginal.dispersion)
    return np.clip(normal_cdf((x - mu) / sd), 1e-15, 1 - 1e-15)


def joint_density_4node(spec: DagVineSpec, x_s, x_z, x_m, x_y):
    """Joint density of (S, Z, M, Y): six copula terms times four marginals."""
    xs = [np.asarray(a, dtype=float) for a in (x_s, x_z, x_m, x_y)]
    scalar = all(a.ndim == 0 for a in xs)
    xs = [np.atleast_1d(a) for a in xs]
    u = [_uniform_scores(m, a) for m, a in zip(spec.marginals, xs)]
    u_s, u_z, u_m, u_y = u

    f_s_z = np.clip(h_function(spec.sz, u_s, u_z), 1e-15, 1 - 1e-15)
    f_m_z = np.clip(h_function(spec.zm, u_m, u_z), 1e-15, 1 - 1e-15)
    f_z_m = np.clip(h_function(spec.zm, u_z, u_m), 1e-15, 1 - 1e-15)
    f_y_m = np.clip(h_function(spec.my, u_y, u_m), 1e-15, 1 - 1e-15)
    f_s_zm = np.clip(h_function(spec.sm_z, f_s_z, f_m_z), 1e-15, 1 - 1e-15)
    f_y_zm = np.clip(h_function(spec.zy_m, f_y_m, f_z_m), 1e-15, 1 - 1e-15)

    dens = (
        pair_density(spec.sy_zm, f_s_zm, f_y_zm)
        * pair_density(spec.sm_z, f_s_z, f_m_z)
        * pair_density(spec.zy_m, f_z_m, f_y_m)
        * pair_density(spec.sz, u_s, u_z)
        * pair_density(spec.zm, u_z, u_m)
        * pair_density(spec.my, u_m, u_y)
    )
    for marg, a in zip(spec.marginals, xs):
        mu = float(marg.confounder_coeffs[0])
        sd = math.sqrt(marg.dispersion)
        dens = dens * normal_pdf((a - mu) / sd) / sd
    return float(dens[0]) if scalar else dens


def simulate_4node(spec: DagVineSpec, n: int, seed: int) -> np.ndarray:
    """Sample n rows of (S, Z, M, Y) by inverse h-function sweeps."""
    if n < 1:
        raise InputError("n must be at least 1")
    rng = np.random.default_rng(seed)
    w = np.clip(rng.uniform(size=(n, 4)), 1e-12, 1 - 1e-12)
    u1 = w[:, 0]
    u2 = h_inverse(spec.sz, w[:, 1], u1)

    f1_2 = h_function(spec.sz, u1, u2)
    t3 = h_inverse(spec.sm_z, w[:, 2], np.clip(f1_2, 1e-15, 1 - 1e-15))
    u3 = h_inverse(spec.zm, np.clip(t3, 1e-15, 1 - 1e-15), u2)

    f3_2 = h_function(spec.zm, u3, u2)
    f1_23 = h_function(spec.sm_z, np.clip(f1_2, 1e-15, 1 - 1e-15), np.clip(f3_2, 1e-15, 1 - 1e-15))
    f2_3 = h_function(spec.zm, u2, u3)
    t4 = h_inverse(spec.sy_zm, w[:, 3], np.clip(f1_23, 1e-15, 1 - 1e-15))
    t4 = h_inverse(spec.zy_m, np.clip(t4, 1e-15, 1 - 1e-15), np.clip(f2_3, 1e-15, 1 - 1e-15))
    u4 = h_inverse(spec.my, np.clip(t4, 1e-15, 1 - 1e-15), u3)

    cols = []
    for marg, u in zip(spec.marginals, (u1, u2, u3, u4)):
        mu = float(marg.confounder_coeffs[0])
        sd = math.sqrt(marg.dispersion)
        cols.append(mu + sd * normal_quantile(np.clip(u, 1e-15, 1 - 1e-15)))
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# Pair-copula fitting and pathway tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FittedPairCopula:
    copula: PairCopula
    standard_error: float
    boundary: bool
    loglik: float


_RHO_BOUNDARY = 1.0 - 1e-10


def _golden_section(fun, lo: float, hi: float, tol: float = 1e-8) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def fit_pair_copula(u: np.ndarray, v: np.ndarray, family: str) -> FittedPairCopula:
    """Maximum-likelihood fit of a single pair copula from copula-scale samples."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if len(u) != len(v):
        raise InputError("samples must have equal length")
    if len(u) < 10:
        raise InsufficientDataError("need at least 10 paired samples")
    _check_unit_interval(u, v)
    n = len(u)

    if family == "independence":
        return FittedPairCopula(INDEPENDENCE, 0.0, False, 0.0)

    if family == "gaussian":
        x = normal_quantile(u)
        y = normal_quantile(v)
        sx = float(np.std(x))
        sy = float(np.std(y))
        if sx <= 0 or sy <= 0:
            raise EstimationError("degenerate sample: zero variance on normal scores")
        rho = float(np.corrcoef(x, y)[0, 1])
        boundary = abs(rho) >= _RHO_BOUNDARY
        rho = float(np.clip(rho, -_RHO_BOUNDARY, _RHO_BOUNDARY))
        cop = PairCopula("gaussian", rho)
        se = (1.0 - rho**2) / math.sqrt(n)
        ll = float(np.sum(np.log(pair_density(cop, u, v))))
        return FittedPairCopula(cop, se, boundary, ll)

    if family == "clayton":

        def negll(theta):
            return -float(np.sum(np.log(pair_density(PairCopula("clayton", theta), u, v))))

        theta_hat = _golden_section(negll, 1e-4, 50.0)
        step = max(1e-5, 1e-5 * theta_hat)
        curv = (negll(theta_hat + step) - 2 * negll(theta_hat) + negll(theta_hat - step)) / step**2
        se = 1.0 / math.sqrt(curv) if curv > 0 else math.nan
        boundary = theta_hat <= 2e-4 or theta_hat >= 49.9
        return FittedPairCopula(
            PairCopula("clayton", theta_hat), se, boundary, -negll(theta_hat)
        )

    raise InputError(f"unknown copula family {family!r}")


def _gaussian_marginal(x: np.ndarray) -> MarginalSpec:
    sd2 = float(np.var(x))
    if sd2 <= 0:
        raise EstimationError("degenerate column: zero variance")
    return MarginalSpec("gaussian", np.array([float(np.mean(x))]), sd2)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom <= 0:
        raise EstimationError("degenerate sample: zero variance")
    return float(np.clip((a @ b) / denom, -_RHO_BOUNDARY, _RHO_BOUNDARY))


def _partial_score(z1: np.ndarray, z2: np.ndarray, rho: float) -> np.ndarray:
    return (z1 - rho * z2) / math.sqrt(1.0 - rho**2)


def _gaussian_vine_params(x: np.ndarray) -> tuple[float, ...]:
    """The six pair correlations of the S-Z-M-Y vine, fitted on normal scores.

    For gaussian marginals and gaussian pairs the whole recursion stays on
    the score scale: the h-transform of a score pair is again a normal
    score, so the u-scale round trips cancel exactly.
    """
    z = [(x[:, j] - x[:, j].mean()) for j in range(4)]
    for j in range(4):
        sd = math.sqrt(float(z[j] @ z[j]) / len(z[j]))
        if sd <= 0:
            raise EstimationError("degenerate column: zero variance")
        z[j] = z[j] / sd
    z_s, z_z, z_m, z_y = z
    r_sz = _pearson(z_s, z_z)
    r_zm = _pearson(z_z, z_m)
    r_my = _pearson(z_m, z_y)

    a_s = _partial_score(z_s, z_z, r_sz)
    a_m = _partial_score(z_m, z_z, r_zm)
    b_z = _partial_score(z_z, z_m, r_zm)
    b_y = _partial_score(z_y, z_m, r_my)
    r_sm_z = _pearson(a_s, a_m)
    r_zy_m = _pearson(b_z, b_y)

    c_s = _partial_score(a_s, a_m, r_sm_z)
    c_y = _partial_score(b_y, b_z, r_zy_m)
    r_sy_zm = _pearson(c_s, c_y)
    return r_sz, r_zm, r_my, r_sm_z, r_zy_m, r_sy_zm


def fit_dag_vine(data: np.ndarray) -> DagVineSpec:
    """Fit gaussian marginals and gaussian pair copulas for (S, Z, M, Y) columns."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != 4:
        raise InputError("expected an (n, 4) array with columns S, Z, M, Y")
    margs = [_gaussian_marginal(x[:, j]) for j in range(4)]
    params = _gaussian_vine_params(x)
    pairs = [PairCopula("gaussian", p) for p in params]
    return DagVineSpec(
        sz=pairs[0], zm=pairs[1], my=pairs[2],
        sm_z=pairs[3], zy_m=pairs[4], sy_zm=pairs[5],
        marginal_s=margs[0], marginal_z=margs[1],
        marginal_m=margs[2], marginal_y=margs[3],
    )


_PATHWAY_PAIRS = {
    "direct_SY": ("sy_zm",),
    "mediated_SMY": ("sm_z", "my"),
    "composite_SZY": ("sz", "zy_m"),
}


@dataclass(frozen=True)
class PathwayTestResult:
    """Bootstrap evidence against independence along one DAG pathway."""

    pathway: str
    pair_names: tuple[str, ...]
    estimates: tuple[float, ...]
    p_values: tuple[float, ...]
    B: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "pathway": self.pathway,
            "pairs": list(self.pair_names),
            "estimates": list(self.estimates),
            "p_values": list(self.p_values),
            "B": self.B,
            "seed": self.seed,
        }


_PAIR_INDEX = {"sz": 0, "zm": 1, "my": 2, "sm_z": 3, "zy_m": 4, "sy_zm": 5}


def pathway_independence_test(
    data: np.ndarray, pathway: str, B: int = 199, seed: int = 0
) -> PathwayTestResult:
    """Nonparametric-bootstrap test of the pathway's pair copulas against zero.

    Each targeted pair parameter is tested by comparing the recentered
    bootstrap estimates against the observed estimate. Two p-values come
    back for the mediated and composite pathways, one for the direct one.
    """
    if pathway not in _PATHWAY_PAIRS:
        raise InputError(f"pathway must be one of {PATHWAYS}")
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != 4:
        raise InputError("expected an (n, 4) array with columns S, Z, M, Y")
    n = x.shape[0]
    if n < 20:
        raise InsufficientDataError("pathway test needs at least 20 rows")
    if B < 19:
        raise InputError("B must be at least 19")

    names = _PATHWAY_PAIRS[pathway]
    cols = [_PAIR_INDEX[name] for name in names]
    observed = np.array(_gaussian_vine_params(x))[cols]
    exceed = np.zeros(len(names))
    for b in range(1, B + 1):
        rng = np.random.default_rng(np.random.SeedSequence((seed, b)))
        idx = rng.integers(0, n, n)
        boot = np.array(_gaussian_vine_params(x[idx]))[cols]
        exceed += np.abs(boot - observed) >= np.abs(observed)
    p_values = (1.0 + exceed) / (B + 1.0)
    return PathwayTestResult(
        pathway=pathway,
        pair_names=names,
        estimates=tuple(float(t) for t in observed),
        p_values=tuple(float(p) for p in p_values),
        B=B,
        seed=seed,
    )
