"""Published multivariate log-normal fits of five measurement campaigns.

Means are natural logs of SI-unit moments, rounded to integers as published;
covariance entries carry two (three for AAU-Industry) significant figures.

Rounding left the AAU-Hall and AAU-Outdoor covariances slightly indefinite
(smallest eigenvalues -3.0e-4 and -2.1e-5). :func:`campaign_params` replaces
those two with the matrix inside the published rounding box whose smallest
eigenvalue is largest (a small semidefinite program, solved offline and
frozen below to four significant figures). :func:`campaign_published` returns
the values exactly as printed.
"""

import numpy as np

from .models import MvlnParams

__all__ = ["DATASETS", "N_REALIZATIONS", "campaign_published", "campaign_params", "was_repaired"]

DATASETS = ("lund", "lille", "aau-industry", "aau-hall", "aau-outdoor")

#: number of channel realizations in each campaign
N_REALIZATIONS = {
    "lund": 625,
    "lille": 750,
    "aau-industry": 95,
    "aau-hall": 720,
    "aau-outdoor": 360,
}

_PUBLISHED = {
    "lund": (
        [-39.0, -57.0, -74.0],
        [[2.8e-3, 2.5e-3, 1.4e-3], [2.5e-3, 2.6e-3, 2.1e-3], [1.4e-3, 2.1e-3, 5.3e-3]],
    ),
    "lille": (
        [-29.0, -47.0, -63.0],
        [[0.19, 0.15, 0.11], [0.15, 0.14, 0.19], [0.11, 0.19, 0.70]],
    ),
    "aau-industry": (
        [-36.0, -53.0, -70.0],
        [[2.34, 1.36, 1.24], [1.36, 0.82, 0.77], [1.24, 0.77, 0.84]],
    ),
    "aau-hall": (
        [-39.0, -56.0, -72.0],
        [[1.4e-2, 1.2e-2, 6.6e-3], [1.2e-2, 1.0e-2, 6.2e-3], [6.6e-3, 6.2e-3, 4.6e-3]],
    ),
    "aau-outdoor": (
        [-40.0, -56.0, -71.0],
        [[1.3e-2, 9.9e-3, 5.2e-3], [9.9e-3, 7.6e-3, 4.2e-3], [5.2e-3, 4.2e-3, 2.7e-3]],
    ),
}

_REPAIRED_SIGMA = {
    "aau-hall": [
        [0.0145, 0.0115, 0.00665],
        [0.0115, 0.0105, 0.00615],
        [0.00665, 0.00615, 0.00465],
    ],
    "aau-outdoor": [
        [0.0135, 0.00985, 0.00525],
        [0.00985, 0.00765, 0.00415],
        [0.00525, 0.00415, 0.002749],
    ],
}


def _key(name):
    key = name.lower().replace("_", "-")
    if key in ("hall", "outdoor", "industry"):
        key = "aau-" + key
    if key not in _PUBLISHED:
        raise KeyError(f"unknown dataset {name!r}; expected one of {DATASETS}")
    return key


def campaign_published(name):
    """``(mu, sigma)`` arrays exactly as published (may be indefinite)."""
    mu, sigma = _PUBLISHED[_key(name)]
    return np.array(mu), np.array(sigma)


def was_repaired(name) -> bool:
    return _key(name) in _REPAIRED_SIGMA


def campaign_params(name) -> MvlnParams:
    """Valid :class:`MvlnParams` for a campaign, repairing indefinite covariances."""
    key = _key(name)
    mu, sigma = _PUBLISHED[key]
    return MvlnParams(mu, _REPAIRED_SIGMA.get(key, sigma))
