"""Candidate distributions for the raw moment vector.

Three parameter types cover every family compared in model selection:

* :class:`MvlnParams` -- multivariate log-normal, ``m = exp(x)`` with
  ``x ~ N(mu, sigma)``. Natural logarithm throughout.
* :class:`MvnParams` -- multivariate Gaussian on the raw (linear) moments. No
  truncation at zero is applied even though moments are positive.
* :class:`MarginalParams` -- independent marginals, one of ``lognormal``,
  ``gaussian`` or ``gamma``.

Parameter files are JSON; see :func:`params_to_dict`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special, stats

from .errors import FormatError, InputError, ParameterError, SupportError
from .moments import MomentMatrix, RawMoments

__all__ = [
    "MvlnParams",
    "MvnParams",
    "MarginalParams",
    "MARGINAL_FAMILIES",
    "gaussian_logpdf",
    "mvln_log_density",
    "mvln_mean",
    "mvln_cov",
    "mvn_log_density",
    "marginal_log_density",
    "model_log_likelihood",
    "params_to_dict",
    "params_from_dict",
    "save_params",
    "load_params",
]

MARGINAL_FAMILIES = ("lognormal", "gaussian", "gamma")

SYMMETRY_RTOL = 1e-12
PD_RTOL = 1e-12


def _frozen(a):
    a.setflags(write=False)
    return a


def _check_cov(cov, name, scale_free=False):
    cov = np.array(cov, dtype=float, ndmin=2)
    K = cov.shape[0]
    if cov.shape != (K, K):
        raise ParameterError(f"{name} must be square, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise ParameterError(f"{name} contains non-finite values")
    if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * np.max(np.abs(cov)):
        raise ParameterError(f"{name} is not symmetric")
    cov = 0.5 * (cov + cov.T)
    check = cov
    if scale_free:
        d = np.diag(cov)
        if np.any(d <= 0):
            raise ParameterError(f"{name} has non-positive variances")
        s = 1.0 / np.sqrt(d)
        check = cov * np.outer(s, s)
    eig = np.linalg.eigvalsh(check)
    if not (eig[-1] > 0 and eig[0] > PD_RTOL * eig[-1]):
        raise ParameterError(
            f"{name} is not positive definite (eigenvalues {eig[0]:.3g} .. {eig[-1]:.3g})"
        )
    return cov


@dataclass(frozen=True, eq=False)
class MvlnParams:
    """Log-domain mean ``mu`` and covariance ``sigma`` of a multivariate log-normal."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float, ndmin=1)
        if mu.ndim != 1 or not np.all(np.isfinite(mu)):
            raise ParameterError("mu must be a finite vector")
        sigma = _check_cov(self.sigma, "sigma")
        if sigma.shape[0] != mu.size:
            raise ParameterError(f"sigma is {sigma.shape}, mu has {mu.size} entries")
        object.__setattr__(self, "mu", _frozen(mu))
        object.__setattr__(self, "sigma", _frozen(sigma))

    @property
    def K(self) -> int:
        return self.mu.size

    @property
    def family(self) -> str:
        return "mvln"

    def __eq__(self, other):
        return (
            isinstance(other, MvlnParams)
            and np.array_equal(self.mu, other.mu)
            and np.array_equal(self.sigma, other.sigma)
        )

    def correlation(self) -> np.ndarray:
        s = 1.0 / np.sqrt(np.diag(self.sigma))
        return self.sigma * np.outer(s, s)


@dataclass(frozen=True, eq=False)
class MvnParams:
    """Mean and covariance of a multivariate Gaussian on linear-unit moments.

    Positive definiteness is checked on the correlation matrix because the
    raw moments span tens of orders of magnitude.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float, ndmin=1)
        if mean.ndim != 1 or not np.all(np.isfinite(mean)):
            raise ParameterError("mean must be a finite vector")
        cov = _check_cov(self.cov, "cov", scale_free=True)
        if cov.shape[0] != mean.size:
            raise ParameterError(f"cov is {cov.shape}, mean has {mean.size} entries")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))

    @property
    def K(self) -> int:
        return self.mean.size

    @property
    def family(self) -> str:
        return "mvn"

    def __eq__(self, other):
        return (
            isinstance(other, MvnParams)
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.cov, other.cov)
        )


@dataclass(frozen=True, eq=False)
class MarginalParams:
    """Independent per-dimension marginals.

    ``a`` and ``b`` hold one parameter pair per dimension:

    ========== ================ =================
    family     a                b
    ========== ================ =================
    lognormal  mean of log      std of log
    gaussian   mean             std
    gamma      shape            rate
    ========== ================ =================
    """

    family_name: str
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.family_name not in MARGINAL_FAMILIES:
            raise ParameterError(
                f"unknown marginal family {self.family_name!r}; expected one of {MARGINAL_FAMILIES}"
            )
        a = np.array(self.a, dtype=float, ndmin=1)
        b = np.array(self.b, dtype=float, ndmin=1)
        if a.shape != b.shape or a.ndim != 1:
            raise ParameterError("marginal parameter arrays must be 1-D and of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ParameterError("marginal parameters must be finite")
        if np.any(b <= 0):
            raise ParameterError("scale/std/rate parameters must be positive")
        if self.family_name == "gamma" and np.any(a <= 0):
            raise ParameterError("gamma shape must be positive")
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", _frozen(b))

    @property
    def K(self) -> int:
        return self.a.size

    @property
    def family(self) -> str:
        return "indep-" + self.family_name

    def __eq__(self, other):
        return (
            isinstance(other, MarginalParams)
            and self.family_name == other.family_name
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
        )

    def dist(self, k):
        """Frozen :mod:`scipy.stats` distribution of dimension ``k``."""
        a, b = self.a[k], self.b[k]
        if self.family_name == "lognormal":
            return stats.lognorm(s=b, scale=np.exp(a))
        if self.family_name == "gaussian":
            return stats.norm(loc=a, scale=b)
        return stats.gamma(a, scale=1.0 / b)

    def logpdf(self, x, k) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a, b = self.a[k], self.b[k]
        if self.family_name == "gaussian":
            z = (x - a) / b
            return -0.5 * z * z - np.log(b) - 0.5 * np.log(2 * np.pi)
        if np.any(x <= 0):
            raise SupportError(f"{self.family_name} marginal needs positive values")
        lx = np.log(x)
        if self.family_name == "lognormal":
            z = (lx - a) / b
            return -0.5 * z * z - np.log(b) - 0.5 * np.log(2 * np.pi) - lx
        bx = b * x
        return a * np.log(bx) - lx - bx - special.gammaln(a)

    def ppf(self, q, k) -> np.ndarray:
        return self.dist(k).ppf(q)

    def cdf(self, x, k) -> np.ndarray:
        return self.dist(k).cdf(x)


def _factor(cov):
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise ParameterError(f"covariance factorization failed: {exc}") from None


def gaussian_logpdf(x, mean, cov):
    """Row-wise log-density of ``N(mean, cov)``, evaluated on unit-variance scale.

    ``x`` is ``(N, K)`` or ``(K,)``. Rescaling each coordinate by its standard
    deviation first keeps the Cholesky factor well conditioned when the
    coordinates differ by many orders of magnitude.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    K = x.shape[1]
    s = np.sqrt(np.diag(cov))
    corr = cov / np.outer(s, s)
    L = _factor(corr)
    z = linalg.solve_triangular(L, ((x - mean) / s).T, lower=True)
    maha = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(L))) + 2.0 * np.sum(np.log(s))
    out = -0.5 * (K * np.log(2 * np.pi) + logdet + maha)
    return out[0] if single else out


def _as_rows(m):
    if isinstance(m, RawMoments):
        return m.values
    if isinstance(m, MomentMatrix):
        return m.values
    return np.asarray(m, dtype=float)


def _check_positive(x):
    bad = np.argwhere(np.atleast_2d(x) <= 0)
    if bad.size:
        raise SupportError("log-normal support requires positive moments", row=int(bad[0, 0]))


def mvln_log_density(m, p: MvlnParams):
    """Log-density of the multivariate log-normal at ``m`` (vector or rows).

    Change of variables: Gaussian log-density of ``ln m`` minus ``sum ln m``.
    """
    x = _as_rows(m)
    _check_positive(x)
    if x.shape[-1] != p.K:
        raise InputError(f"expected {p.K} moments, got {x.shape[-1]}")
    lx = np.log(x)
    return gaussian_logpdf(lx, p.mu, p.sigma) - np.sum(lx, axis=-1)


def mvn_log_density(m, p: MvnParams):
    x = _as_rows(m)
    if x.shape[-1] != p.K:
        raise InputError(f"expected {p.K} moments, got {x.shape[-1]}")
    return gaussian_logpdf(x, p.mean, p.cov)


def marginal_log_density(m, p: MarginalParams):
    """Sum over dimensions of the independent marginal log-densities."""
    x = np.atleast_2d(_as_rows(m))
    if x.shape[1] != p.K:
        raise InputError(f"expected {p.K} moments, got {x.shape[1]}")
    if p.family_name != "gaussian":
        _check_positive(x)
    out = sum(p.logpdf(x[:, k], k) for k in range(p.K))
    return out[0] if np.ndim(_as_rows(m)) == 1 else out


def _index(p, k):
    if not (0 <= k < p.K):
        raise InputError(f"moment index {k} out of range for K={p.K}")
    return int(k)


def mvln_mean(p: MvlnParams, k: int) -> float:
    """``E[m_k] = exp(mu_k + sigma_kk / 2)``."""
    k = _index(p, k)
    return float(np.exp(p.mu[k] + 0.5 * p.sigma[k, k]))


def mvln_cov(p: MvlnParams, k: int, k2: int) -> float:
    """``cov(m_k, m_k2) = exp(mu_k + mu_k2 + (s_kk + s_k2k2)/2) * (exp(s_kk2) - 1)``."""
    k, k2 = _index(p, k), _index(p, k2)
    s = p.sigma
    return float(
        np.exp(p.mu[k] + p.mu[k2] + 0.5 * (s[k, k] + s[k2, k2])) * np.expm1(s[k, k2])
    )


def model_log_likelihood(data, model) -> float:
    """iid log-likelihood of ``data`` (MomentMatrix or ``(N, K)`` array) under ``model``.

    The per-row terms are summed with :func:`math.fsum`, so the result does
    not depend on row order.
    """
    x = np.atleast_2d(_as_rows(data))
    if isinstance(model, MvlnParams):
        ll = mvln_log_density(x, model)
    elif isinstance(model, MvnParams):
        ll = mvn_log_density(x, model)
    elif isinstance(model, MarginalParams):
        ll = marginal_log_density(x, model)
    else:
        raise InputError(f"unsupported model type {type(model).__name__}")
    return math.fsum(np.atleast_1d(ll))


def params_to_dict(p) -> dict:
    """JSON-ready dictionary; floats keep full double precision."""
    if isinstance(p, MvlnParams):
        return {"family": "mvln", "k": p.K, "mu": p.mu.tolist(), "sigma": p.sigma.tolist()}
    if isinstance(p, MvnParams):
        return {"family": "mvn", "k": p.K, "mean": p.mean.tolist(), "cov": p.cov.tolist()}
    if isinstance(p, MarginalParams):
        names = {
            "lognormal": ("mu", "sigma"),
            "gaussian": ("mean", "std"),
            "gamma": ("shape", "rate"),
        }[p.family_name]
        return {"family": p.family, "k": p.K, names[0]: p.a.tolist(), names[1]: p.b.tolist()}
    raise InputError(f"unsupported model type {type(p).__name__}")


def params_from_dict(d: dict):
    try:
        family = d["family"]
        if family == "mvln":
            p = MvlnParams(d["mu"], d["sigma"])
        elif family == "mvn":
            p = MvnParams(d["mean"], d["cov"])
        elif family == "indep-lognormal":
            p = MarginalParams("lognormal", d["mu"], d["sigma"])
        elif family == "indep-gaussian":
            p = MarginalParams("gaussian", d["mean"], d["std"])
        elif family == "indep-gamma":
            p = MarginalParams("gamma", d["shape"], d["rate"])
        else:
            raise ParameterError(f"unknown family {family!r}")
    except KeyError as exc:
        raise ParameterError(f"parameter file is missing field {exc}") from None
    if "k" in d and int(d["k"]) != p.K:
        raise ParameterError(f"declared k={d['k']} but parameters have K={p.K}")
    return p


def save_params(p, path, extra=None):
    d = params_to_dict(p)
    if extra:
        d.update(extra)
    with open(path, "w") as fh:
        json.dump(d, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_params(path):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from None
    if isinstance(d.get("parameters"), dict):
        d = d["parameters"]
    return params_from_dict(d)
