"""Maximum-likelihood fits, Fisher-information intervals and bootstrap correlations."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import special

from .errors import (
    ComputationError,
    DegenerateDataError,
    FitFailureError,
    InputError,
    SingularInformationError,
    SupportError,
    UndefinedCorrelationError,
)
from .models import (
    MarginalParams,
    MvlnParams,
    MvnParams,
    model_log_likelihood,
    params_from_dict,
    params_to_dict,
)
from .moments import MomentMatrix

__all__ = [
    "FAMILIES",
    "Z95",
    "FitResult",
    "PairCorrelation",
    "CorrelationReport",
    "fit",
    "fit_mvln",
    "fit_mvn",
    "fit_independent",
    "gamma_shape_mle",
    "fisher_information",
    "fisher_ci",
    "parameter_names",
    "pearson",
    "bootstrap_corr_ci",
    "resample_stream",
]

FAMILIES = ("mvln", "mvn", "indep-lognormal", "indep-gaussian", "indep-gamma")

#: two-sided 95% normal quantile used for every interval
Z95 = 1.96

GAMMA_TOL = 1e-10
GAMMA_MAXITER = 100


@dataclass(frozen=True)
class FitResult:
    """Fitted model with its maximized log-likelihood and free-parameter count."""

    model: object
    log_likelihood: float
    n_params: int
    n_obs: int
    ci_half_widths: dict | None = None

    @property
    def family(self) -> str:
        return self.model.family

    def to_dict(self) -> dict:
        d = {
            "family": self.family,
            "parameters": params_to_dict(self.model),
            "log_likelihood": self.log_likelihood,
            "n_params": self.n_params,
            "n_obs": self.n_obs,
        }
        if self.ci_half_widths is not None:
            d["ci"] = dict(self.ci_half_widths)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            params_from_dict(d["parameters"]),
            float(d["log_likelihood"]),
            int(d["n_params"]),
            int(d["n_obs"]),
            d.get("ci"),
        )

    def save(self, path, extra=None):
        d = self.to_dict()
        if extra:
            d.update(extra)
        with open(path, "w") as fh:
            json.dump(d, fh, indent=2)
            fh.write("\n")


def _data(data):
    x = data.values if isinstance(data, MomentMatrix) else np.asarray(data, dtype=float)
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InputError("data must be an (N, K) array")
    return x


def _require_positive(x):
    bad = np.argwhere(x <= 0)
    if bad.size:
        i, k = bad[0]
        raise SupportError(f"m{k} = {x[i, k]!r} is not positive", row=int(i))


def _mle_gaussian(x):
    """Sample mean and covariance with divisor N."""
    mean = x.mean(axis=0)
    c = x - mean
    return mean, (c.T @ c) / x.shape[0]


def _check_rank(cov, scale_free=False):
    check = cov
    if scale_free:
        d = np.diag(cov)
        if np.any(d <= 0):
            raise DegenerateDataError("a moment column has zero variance", 0.0)
        s = 1.0 / np.sqrt(d)
        check = cov * np.outer(s, s)
    eig = np.linalg.eigvalsh(check)
    if not (eig[-1] > 0 and eig[0] > 1e-12 * eig[-1]):
        raise DegenerateDataError(
            f"sample covariance is rank deficient (smallest eigenvalue {eig[0]:.3g})",
            float(eig[0]),
        )


def _joint_n_params(K):
    return K + K * (K + 1) // 2


def fit_mvln(data, ci=True) -> FitResult:
    """Closed-form MLE of the multivariate log-normal.

    ``mu`` is the mean of ``ln m`` and ``sigma`` the covariance of ``ln m``
    with divisor ``N`` (not ``N - 1``).
    """
    x = _data(data)
    N, K = x.shape
    _require_positive(x)
    if N < K + 1:
        raise InputError(f"need at least K+1={K + 1} realizations, got {N}")
    mu, sigma = _mle_gaussian(np.log(x))
    _check_rank(sigma)
    p = MvlnParams(mu, sigma)
    return FitResult(
        p,
        model_log_likelihood(x, p),
        _joint_n_params(K),
        N,
        fisher_ci(p, N) if ci else None,
    )


def fit_mvn(data, ci=True) -> FitResult:
    """MLE of a multivariate Gaussian on the raw moments."""
    x = _data(data)
    N, K = x.shape
    if N < K + 1:
        raise InputError(f"need at least K+1={K + 1} realizations, got {N}")
    mean, cov = _mle_gaussian(x)
    _check_rank(cov, scale_free=True)
    p = MvnParams(mean, cov)
    return FitResult(
        p,
        model_log_likelihood(x, p),
        _joint_n_params(K),
        N,
        fisher_ci(p, N) if ci else None,
    )


def gamma_shape_mle(x, tol=GAMMA_TOL, maxiter=GAMMA_MAXITER):
    """Gamma MLE ``(shape, rate)`` of a positive sample.

    Solves ``ln a - digamma(a) = ln(mean x) - mean(ln x)`` by Newton's method,
    starting from the Minka/Choi-Wette approximation.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise SupportError("gamma fit needs positive data")
    mean = x.mean()
    # scaling by the mean avoids cancellation in ln(mean) - mean(ln x)
    s = -np.mean(np.log(x / mean))
    if not s > 0:
        raise DegenerateDataError("gamma fit on a constant sample", 0.0)
    a = (3 - s + np.sqrt((s - 3) ** 2 + 24 * s)) / (12 * s)
    resid = np.inf
    for _ in range(maxiter):
        resid = np.log(a) - special.digamma(a) - s
        deriv = 1.0 / a - special.polygamma(1, a)
        step = resid / deriv
        a_new = a - step
        while a_new <= 0:
            step *= 0.5
            a_new = a - step
        if abs(a_new - a) <= tol * a:
            a = a_new
            resid = np.log(a) - special.digamma(a) - s
            return float(a), float(a / mean)
        a = a_new
    raise FitFailureError(
        f"gamma shape iteration did not converge in {maxiter} steps", float(resid)
    )


def fit_independent(data, family: str) -> FitResult:
    """Per-dimension closed-form (or Newton, for gamma) marginal MLEs.

    ``family`` is ``lognormal``, ``gaussian`` or ``gamma``; the ``indep-``
    prefix is accepted too.
    """
    family = family.removeprefix("indep-")
    x = _data(data)
    N, K = x.shape
    if N < 2:
        raise InputError("need at least 2 realizations")
    if family == "lognormal":
        _require_positive(x)
        # same arithmetic as the joint fit, so the marginals agree bit for bit
        a, cov = _mle_gaussian(np.log(x))
        b = np.sqrt(np.diag(cov))
    elif family == "gaussian":
        a, cov = _mle_gaussian(x)
        b = np.sqrt(np.diag(cov))
    elif family == "gamma":
        _require_positive(x)
        a, b = np.array([gamma_shape_mle(x[:, k]) for k in range(K)]).T
    else:
        raise InputError(f"unknown marginal family {family!r}")
    if np.any(b <= 0):
        raise DegenerateDataError("a moment column has zero spread", 0.0)
    p = MarginalParams(family, a, b)
    return FitResult(p, model_log_likelihood(x, p), 2 * K, N)


def fit(data, family: str, ci=True) -> FitResult:
    """Dispatch on a family name from :data:`FAMILIES`."""
    if family == "mvln":
        return fit_mvln(data, ci=ci)
    if family == "mvn":
        return fit_mvn(data, ci=ci)
    if family.startswith("indep-") and family in FAMILIES:
        return fit_independent(data, family)
    raise InputError(f"unknown family {family!r}; expected one of {FAMILIES}")


def _triu(K):
    return [(i, j) for i in range(K) for j in range(i, K)]


def parameter_names(p) -> list[str]:
    """Canonical order: means, then the covariance upper triangle row by row."""
    K = p.K
    m, c = ("mu", "sigma") if isinstance(p, MvlnParams) else ("mean", "cov")
    return [f"{m}{i}" for i in range(K)] + [f"{c}{i}{j}" for i, j in _triu(K)]


def _cov_of(p):
    if isinstance(p, MvlnParams):
        return p.sigma
    if isinstance(p, MvnParams):
        return p.cov
    raise InputError("Fisher intervals are defined for mvln/mvn parameters only")


def fisher_information(cov):
    """Per-observation Fisher information of ``N(mean, cov)``.

    Returns the mean block ``inv(cov)`` and the covariance block
    ``0.5 * tr(P E_m P E_n)`` with ``P = inv(cov)``, where ``E_m`` has ones at
    both ``(i, j)`` and ``(j, i)`` for the ``m``-th upper-triangle entry.
    """
    cov = np.asarray(cov, dtype=float)
    K = cov.shape[0]
    P = np.linalg.inv(cov)
    idx = _triu(K)
    E = np.zeros((len(idx), K, K))
    for m, (i, j) in enumerate(idx):
        E[m, i, j] = E[m, j, i] = 1.0
    PE = P @ E
    I_beta = 0.5 * np.einsum("mab,nba->mn", PE, PE)
    return P, I_beta


def _inv_block(block, name):
    eig = np.linalg.eigvalsh(block)
    if not (eig[-1] > 0 and eig[0] > 1e-13 * eig[-1]):
        raise SingularInformationError(f"Fisher information block for {name} is singular")
    return np.linalg.inv(block)


def fisher_ci(p, n_obs: int) -> dict:
    """95% half-widths ``1.96/sqrt(N) * sqrt(diag(inv(I)))`` for every free parameter.

    The information is computed on the unit-variance scale and mapped back,
    which is exact for this diagonal reparameterization and keeps the
    inversion well conditioned for linear-unit moments.
    """
    if n_obs < 2:
        raise InputError(f"n_obs must be at least 2, got {n_obs}")
    cov = _cov_of(p)
    s = np.sqrt(np.diag(cov))
    corr = cov / np.outer(s, s)
    I_alpha, I_beta = fisher_information(corr)
    var_alpha = np.diag(_inv_block(I_alpha, "the mean vector")) * s**2
    scale_beta = np.array([s[i] * s[j] for i, j in _triu(p.K)])
    var_beta = np.diag(_inv_block(I_beta, "the covariance entries")) * scale_beta**2
    delta = Z95 / np.sqrt(n_obs) * np.sqrt(np.concatenate([var_alpha, var_beta]))
    return dict(zip(parameter_names(p), (float(d) for d in delta)))


def pearson(a, b) -> float:
    """Sample Pearson correlation coefficient."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError("pearson needs two 1-D samples of equal length")
    if a.size < 2:
        raise InputError("pearson needs at least 2 pairs")
    da = a - a.mean()
    db = b - b.mean()
    saa = np.dot(da, da)
    sbb = np.dot(db, db)
    if saa == 0 or sbb == 0:
        raise UndefinedCorrelationError("correlation of a constant sample is undefined")
    r = np.dot(da, db) / np.sqrt(saa * sbb)
    return float(min(1.0, max(-1.0, r)))


def _pearson_matrix(x):
    """All pairwise correlations of the columns of ``x``; None if a column is constant."""
    c = x - x.mean(axis=0)
    ss = np.einsum("ij,ij->j", c, c)
    if np.any(ss == 0):
        return None
    r = (c.T @ c) / np.sqrt(np.outer(ss, ss))
    return np.clip(r, -1.0, 1.0)


def resample_stream(seed, b, attempt=0):
    """Generator for resample ``b`` (and retry ``attempt``) of a bootstrap run.

    Streams are keyed by ``(b, attempt)`` under the root seed, so they do not
    depend on execution order.
    """
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(b, attempt)))
    )


@dataclass(frozen=True)
class PairCorrelation:
    pair: str
    rho: float
    epsilon: float
    lower: float
    upper: float


@dataclass(frozen=True)
class CorrelationReport:
    """Sample correlations with symmetric bootstrap half-widths.

    ``epsilon = 1.96 * std`` of the bootstrap replicates. ``lower``/``upper``
    are the 2.5% and 97.5% bootstrap percentiles, kept for comparison.
    """

    pairs: list
    n_resamples: int
    seed: int
    n_retries: int = 0
    replicates: np.ndarray = field(default=None, repr=False, compare=False)

    def __getitem__(self, name) -> PairCorrelation:
        for p in self.pairs:
            if p.pair == name:
                return p
        raise KeyError(name)

    def write_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for h in header_lines:
                fh.write(f"# {h}\n")
            fh.write("pair,rho,epsilon,n_resamples\n")
            for p in self.pairs:
                fh.write(f"{p.pair},{p.rho:.17g},{p.epsilon:.17g},{self.n_resamples}\n")

    def write_percentile_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for h in header_lines:
                fh.write(f"# {h}\n")
            fh.write("pair,lower,upper,n_resamples\n")
            for p in self.pairs:
                fh.write(f"{p.pair},{p.lower:.17g},{p.upper:.17g},{self.n_resamples}\n")


def _bootstrap_chunk(x, seed, bs, max_attempts):
    n = x.shape[0]
    out = []
    retries = 0
    for b in bs:
        for attempt in range(max_attempts):
            idx = resample_stream(seed, b, attempt).integers(0, n, size=n)
            r = _pearson_matrix(x[idx])
            if r is not None:
                break
            retries += 1
        else:
            raise ComputationError(f"resample {b}: every attempt was degenerate")
        out.append(r)
    return out, retries


def bootstrap_corr_ci(data, n_resamples=1000, seed=0, names=None, workers=1) -> CorrelationReport:
    """Bootstrap every pairwise Pearson correlation of the columns of ``data``.

    Rows are resampled jointly. A resample with a constant column is redrawn
    from the next retry stream; more than ``10 * n_resamples`` retries in
    total is an error. Results are bit-identical for any ``workers``.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise InputError("data must be (n, V) with at least two variables")
    if x.shape[0] < 10:
        raise InputError(f"need at least 10 paired samples, got {x.shape[0]}")
    if n_resamples < 100:
        raise InputError(f"need at least 100 resamples, got {n_resamples}")
    V = x.shape[1]
    names = list(names) if names is not None else [f"x{i}" for i in range(V)]
    if len(names) != V:
        raise InputError("one name per column required")
    rho = _pearson_matrix(x)
    if rho is None:
        raise UndefinedCorrelationError("a column of the data is constant")

    cap = 10 * n_resamples
    chunks = np.array_split(np.arange(n_resamples), max(1, int(workers)))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as ex:
            results = list(ex.map(lambda c: _bootstrap_chunk(x, seed, c, cap), chunks))
    else:
        results = [_bootstrap_chunk(x, seed, c, cap) for c in chunks]
    reps = np.stack([r for chunk, _ in results for r in chunk])
    retries = sum(n for _, n in results)
    if retries > cap:
        raise ComputationError(f"{retries} degenerate resamples exceed the cap of {cap}")

    pairs = []
    for i, j in combinations(range(V), 2):
        rj = reps[:, i, j]
        lo, hi = np.percentile(rj, [2.5, 97.5])
        pairs.append(
            PairCorrelation(
                f"{names[i]}-{names[j]}",
                float(rho[i, j]),
                float(Z95 * np.std(rj, ddof=1)),
                float(lo),
                float(hi),
            )
        )
    return CorrelationReport(pairs, int(n_resamples), seed, retries, reps)
