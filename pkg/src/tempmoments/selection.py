"""Information-criterion comparison of fitted families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDataError,
    EmptyComparisonError,
    FitFailureError,
    InputError,
    SupportError,
)
from .inference import FAMILIES, FitResult, fit

__all__ = ["aic", "bic", "ComparisonRow", "ComparisonTable", "compare", "rank_rows"]

FAMILY_TITLES = {
    "mvln": "Multivariate log-normal",
    "mvn": "Multivariate Gaussian",
    "indep-lognormal": "Independent log-normal marginals",
    "indep-gaussian": "Independent Gaussian marginals",
    "indep-gamma": "Independent Gamma marginals",
}


def aic(log_likelihood: float, n_params: int) -> float:
    """Akaike information criterion ``-2 L + 2 kappa``."""
    if n_params < 1:
        raise InputError("n_params must be >= 1")
    return -2.0 * log_likelihood + 2.0 * n_params


def bic(log_likelihood: float, n_params: int, n_obs: int) -> float:
    """Bayesian information criterion ``-2 L + kappa ln N``."""
    if n_obs < 1:
        raise InputError("n_obs must be >= 1")
    return -2.0 * log_likelihood + n_params * np.log(n_obs)


@dataclass(frozen=True)
class ComparisonRow:
    family: str
    log_likelihood: float | None
    n_params: int | None
    aic: float | None
    bic: float | None
    rank: int | None
    fit: FitResult | None = None
    note: str = ""

    @property
    def applicable(self) -> bool:
        return self.fit is not None


def rank_rows(rows, criterion="aic"):
    """Ranks (1 = best) for applicable rows, in row order; ``None`` for n/a rows.

    Ties on the criterion go to fewer parameters, then to the family name,
    then to input order.
    """
    live = [i for i, r in enumerate(rows) if r.applicable]
    order = sorted(live, key=lambda i: (getattr(rows[i], criterion), rows[i].n_params, rows[i].family, i))
    ranks = [None] * len(rows)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return ranks


@dataclass(frozen=True)
class ComparisonTable:
    rows: list
    label: str = ""

    @property
    def winner(self) -> ComparisonRow:
        return next(r for r in self.rows if r.rank == 1)

    def ordering(self, criterion="aic") -> list[str]:
        """Applicable family names from best to worst under ``criterion``."""
        ranks = rank_rows(self.rows, criterion)
        live = [(rk, r.family) for rk, r in zip(ranks, self.rows) if rk is not None]
        return [f for _, f in sorted(live)]

    def write_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for h in header_lines:
                fh.write(f"# {h}\n")
            fh.write("family,loglik,k,aic,bic,rank\n")
            for r in self.rows:
                if r.applicable:
                    fh.write(
                        f"{r.family},{r.log_likelihood:.17g},{r.n_params},"
                        f"{r.aic:.17g},{r.bic:.17g},{r.rank}\n"
                    )
                else:
                    fh.write(f"{r.family},n/a,n/a,n/a,n/a,n/a\n")

    def to_text(self) -> str:
        """Human-readable table; the winning model is marked with ``*``."""
        title = f"AIC comparison{': ' + self.label if self.label else ''}"
        lines = [title, ""]
        w = max(len(FAMILY_TITLES.get(r.family, r.family)) for r in self.rows) + 2
        lines.append(f"{'Model':<{w}}{'log-lik':>16}{'k':>4}{'AIC':>16}{'BIC':>16}{'rank':>6}")
        for r in self.rows:
            name = FAMILY_TITLES.get(r.family, r.family)
            if not r.applicable:
                lines.append(f"{name:<{w}}{'n/a':>16}{'':>4}{'n/a':>16}{'n/a':>16}{'':>6}  {r.note}")
                continue
            mark = " *" if r.rank == 1 else ""
            lines.append(
                f"{name:<{w}}{r.log_likelihood:>16.2f}{r.n_params:>4d}"
                f"{r.aic:>16.2f}{r.bic:>16.2f}{r.rank:>6d}{mark}"
            )
        return "\n".join(lines) + "\n"


def compare(data, families=FAMILIES, label="") -> ComparisonTable:
    """Fit every family by maximum likelihood and rank by AIC.

    Families whose support excludes the data (or whose fit fails) become
    ``n/a`` rows instead of aborting the comparison.
    """
    families = list(families)
    if len(families) < 2:
        raise InputError("compare needs at least two families")
    pending = []
    for fam in families:
        if fam not in FAMILIES:
            raise InputError(f"unknown family {fam!r}; expected one of {FAMILIES}")
        try:
            res = fit(data, fam, ci=False)
        except (SupportError, DegenerateDataError, FitFailureError) as exc:
            pending.append(ComparisonRow(fam, None, None, None, None, None, None, str(exc)))
            continue
        pending.append(
            ComparisonRow(
                fam,
                res.log_likelihood,
                res.n_params,
                aic(res.log_likelihood, res.n_params),
                bic(res.log_likelihood, res.n_params, res.n_obs),
                None,
                res,
            )
        )
    if not any(r.applicable for r in pending):
        raise EmptyComparisonError("no family could be fitted to the data")
    ranks = rank_rows(pending)
    rows = [
        ComparisonRow(r.family, r.log_likelihood, r.n_params, r.aic, r.bic, rk, r.fit, r.note)
        for r, rk in zip(pending, ranks)
    ]
    return ComparisonTable(rows, label)
