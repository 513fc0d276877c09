"""Plot-ready data: Q-Q pairs, pairwise model densities, KDEs and ECDFs.

Nothing here renders images; every function returns arrays that external
tools can draw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import stats

from .errors import InputError, SupportError
from .models import MvlnParams, MvnParams, gaussian_logpdf

__all__ = [
    "CONTOUR_MASSES",
    "QQData",
    "PairGrid",
    "DensityGrid",
    "plotting_positions",
    "theoretical_quantiles",
    "qq_data",
    "pair_density",
    "marginal_density",
    "density_grid",
    "ecdf",
    "kde",
    "write_qq_csv",
    "write_ecdf_csv",
]

#: probability mass enclosed by the default contour lines
CONTOUR_MASSES = (0.5, 0.75, 0.9, 0.95, 0.99)


def plotting_positions(n):
    """Hazen positions ``(i - 0.5) / n`` for ``i = 1..n``."""
    return (np.arange(1, n + 1) - 0.5) / n


def theoretical_quantiles(n, dist):
    """Quantiles of ``dist`` (anything with ``ppf``) at the Hazen positions."""
    q = np.asarray(dist.ppf(plotting_positions(n)), dtype=float)
    if not np.all(np.isfinite(q)):
        raise SupportError("quantile function returned values outside the support")
    return q


@dataclass(frozen=True)
class QQData:
    """Q-Q points of one dimension and the line through their quartiles."""

    theoretical: np.ndarray
    empirical: np.ndarray
    slope: float
    intercept: float
    dim: int = 0

    def line(self, x):
        return self.intercept + self.slope * np.asarray(x)

    def residuals(self):
        return self.empirical - self.line(self.theoretical)


def qq_data(samples, marginal, dim=0, min_samples=10) -> QQData:
    """Empirical order statistics against ``marginal`` quantiles.

    The reference line passes through the first and third quartiles of the
    two point sequences, both taken with Hazen interpolation, so a sample
    equal to the theoretical quantiles lies exactly on the line.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size < min_samples:
        raise InputError(f"need at least {min_samples} samples, got {x.size}")
    t = theoretical_quantiles(x.size, marginal)
    tq = np.quantile(t, [0.25, 0.75], method="hazen")
    eq = np.quantile(x, [0.25, 0.75], method="hazen")
    slope = (eq[1] - eq[0]) / (tq[1] - tq[0])
    return QQData(t, x, float(slope), float(eq[0] - slope * tq[0]), dim)


def write_qq_csv(qqs, path, header_lines=()):
    with open(path, "w", newline="") as fh:
        for h in header_lines:
            fh.write(f"# {h}\n")
        fh.write("dim,theoretical,empirical\n")
        for q in qqs:
            for a, b in zip(q.theoretical, q.empirical):
                fh.write(f"{q.dim},{a:.17g},{b:.17g}\n")


def _sub(model, idx):
    idx = list(idx)
    if isinstance(model, MvlnParams):
        return model.mu[idx], model.sigma[np.ix_(idx, idx)], True
    if isinstance(model, MvnParams):
        return model.mean[idx], model.cov[np.ix_(idx, idx)], False
    raise InputError("density grids need a fitted joint model (mvln or mvn)")


def pair_density(model, i, j, xg, yg):
    """Analytic 2-D marginal density of ``(m_i, m_j)`` on the grid ``xg x yg``.

    Returns an array of shape ``(len(yg), len(xg))`` (rows follow ``y``).
    """
    mean, cov, logn = _sub(model, (i, j))
    X, Y = np.meshgrid(np.asarray(xg, float), np.asarray(yg, float))
    pts = np.column_stack([X.ravel(), Y.ravel()])
    out = np.zeros(pts.shape[0])
    if logn:
        ok = np.all(pts > 0, axis=1)
        lp = np.log(pts[ok])
        out[ok] = np.exp(gaussian_logpdf(lp, mean, cov) - lp.sum(axis=1))
    else:
        out = np.exp(gaussian_logpdf(pts, mean, cov))
    return out.reshape(X.shape)


def marginal_density(model, k, x):
    mean, cov, logn = _sub(model, (k,))
    x = np.asarray(x, dtype=float)
    s = np.sqrt(cov[0, 0])
    if logn:
        out = np.zeros_like(x)
        ok = x > 0
        out[ok] = stats.lognorm.pdf(x[ok], s=s, scale=np.exp(mean[0]))
        return out
    return stats.norm.pdf(x, loc=mean[0], scale=s)


def kde(samples, x):
    """Gaussian kernel density estimate with Silverman's bandwidth."""
    return stats.gaussian_kde(np.asarray(samples, float), bw_method="silverman")(x)


def _grid(col, resolution, margin):
    lo, hi = float(np.min(col)), float(np.max(col))
    pad = margin * (hi - lo) if hi > lo else margin * max(abs(lo), 1e-300)
    return np.linspace(lo - pad, hi + pad, resolution)


def _levels(model, i, j, masses, seed, n):
    mean, cov, logn = _sub(model, (i, j))
    rng = np.random.default_rng(seed)
    z = rng.multivariate_normal(mean, cov, size=n, method="cholesky")
    if logn:
        d = np.exp(gaussian_logpdf(z, mean, cov) - z.sum(axis=1))
    else:
        d = np.exp(gaussian_logpdf(z, mean, cov))
    return np.quantile(d, 1.0 - np.asarray(masses))


@dataclass(frozen=True)
class PairGrid:
    pair: tuple
    x_grid: np.ndarray
    y_grid: np.ndarray
    density: np.ndarray
    contour_levels: np.ndarray
    masses: tuple = CONTOUR_MASSES

    def to_dict(self):
        return {
            "pair": list(self.pair),
            "x_grid": self.x_grid.tolist(),
            "y_grid": self.y_grid.tolist(),
            "density": self.density.tolist(),
            "contour_levels": self.contour_levels.tolist(),
            "contour_masses": list(self.masses),
        }


@dataclass(frozen=True)
class DensityGrid:
    """Pairwise model densities plus per-variable data KDEs and model marginals."""

    pairs: list
    x: list
    data_kde: list
    model_marginal: list
    scatter: np.ndarray

    def to_json(self, extra=None) -> str:
        d = {
            "pairs": [p.to_dict() for p in self.pairs],
            "marginals": [
                {"dim": k, "x": x.tolist(), "data_kde": a.tolist(), "model": b.tolist()}
                for k, (x, a, b) in enumerate(zip(self.x, self.data_kde, self.model_marginal))
            ],
        }
        if extra:
            d.update(extra)
        return json.dumps(d, indent=1)


def density_grid(data, model, resolution=64, margin=0.1, masses=CONTOUR_MASSES,
                 seed=0, n_level_samples=10_000) -> DensityGrid:
    """Evaluate the fitted joint model on grids spanning the data.

    Every grid covers the data range plus ``margin`` on each side. Contour
    levels are the densities enclosing ``masses`` of the model, estimated
    from ``n_level_samples`` seeded model draws.
    """
    x = getattr(data, "values", data)
    x = np.asarray(x, dtype=float)
    if resolution < 16:
        raise InputError("resolution must be at least 16")
    K = x.shape[1]
    if K != model.K:
        raise InputError(f"data has K={K}, model has K={model.K}")
    axes = [_grid(x[:, k], resolution, margin) for k in range(K)]
    pairs = []
    for n, (i, j) in enumerate(combinations(range(K), 2)):
        pairs.append(
            PairGrid(
                (i, j),
                axes[i],
                axes[j],
                pair_density(model, i, j, axes[i], axes[j]),
                _levels(model, i, j, masses, np.random.SeedSequence(seed, spawn_key=(n,)), n_level_samples),
                tuple(masses),
            )
        )
    kdes = [kde(x[:, k], axes[k]) for k in range(K)]
    marg = [marginal_density(model, k, axes[k]) for k in range(K)]
    return DensityGrid(pairs, axes, kdes, marg, x)


def ecdf(samples):
    """Right-continuous empirical CDF as ``(values, fractions)``.

    Duplicates collapse into one step; the last fraction is exactly 1.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 1:
        raise InputError("ecdf needs at least one sample")
    values, counts = np.unique(x, return_counts=True)
    return values, np.cumsum(counts) / x.size


def write_ecdf_csv(values, fractions, path, header_lines=()):
    with open(path, "w", newline="") as fh:
        for h in header_lines:
            fh.write(f"# {h}\n")
        fh.write("value,fraction\n")
        for v, f in zip(values, fractions):
            fh.write(f"{v:.17g},{f:.17g}\n")
