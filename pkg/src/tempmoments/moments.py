"""Raw and standardized temporal moments.

``m_k = integral_0^T t^k |y(t)|^2 dt`` for ``k = 0, ..., K-1``. The standardized
moments are received power ``P0 = m0``, mean delay ``m1/m0`` and rms delay
spread ``sqrt(m2/m0 - (m1/m0)^2)``. All quantities are in SI units.

No noise thresholding and no subtraction of the transmitted-signal delay
spread is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSignalError,
    FormatError,
    InputError,
    NumericalInconsistencyError,
    RealizationError,
)
from .signal import FrequencyResponse, TimeSignal, inverse_transform

__all__ = [
    "CS_SLACK",
    "RawMoments",
    "StandardizedMoments",
    "MomentMatrix",
    "power_moments",
    "raw_moments",
    "standardize",
    "standardize_array",
    "batch_moments",
    "read_moment_matrix",
    "write_moment_matrix",
]

#: relative slack allowed on m0*m2 - m1**2 before it counts as inconsistent
CS_SLACK = 1e-12


@dataclass(frozen=True)
class RawMoments:
    """Raw temporal moments ``(m_0, ..., m_{K-1})``; ``m_k`` in seconds**k."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=1)
        if v.ndim != 1:
            raise InputError("raw moments must be a 1-D vector")
        if not np.all(np.isfinite(v)):
            raise InputError("raw moments must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def K(self) -> int:
        return self.values.size

    def __getitem__(self, k):
        return self.values[k]

    def __len__(self):
        return self.K


@dataclass(frozen=True)
class StandardizedMoments:
    """Received power (unitless), mean delay and rms delay spread (seconds)."""

    p0: float
    tau_bar: float
    tau_rms: float

    def as_tuple(self):
        return (self.p0, self.tau_bar, self.tau_rms)


@dataclass(frozen=True)
class MomentMatrix:
    """Moments of ``N_real`` realizations, stored row-wise as an ``(N, K)`` array.

    ``meta`` carries free-form provenance (e.g. jitter applied by a sampler).
    """

    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, ndmin=2)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise InputError("moment matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(v)):
            raise InputError("moment matrix contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_real(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.n_real

    def row(self, i) -> RawMoments:
        return RawMoments(self.values[i])

    def column(self, k) -> np.ndarray:
        return self.values[:, k]

    @classmethod
    def from_rows(cls, rows: Sequence[RawMoments], meta=None):
        if not rows:
            raise InputError("need at least one row")
        K = {r.K for r in rows}
        if len(K) != 1:
            raise InputError(f"rows have differing moment counts {sorted(K)}")
        return cls(np.vstack([r.values for r in rows]), dict(meta or {}))


def _by_parts(w, period, K):
    """``integral_0^T t^k exp(j w t) dt`` for ``w`` a nonzero multiple of ``2 pi / T``.

    Integration by parts gives ``J_k = T^k / (j w) - k / (j w) * J_{k-1}``
    with ``J_0 = 0``.
    """
    jw = 1j * np.asarray(w, dtype=float)
    J = np.zeros((K,) + jw.shape, dtype=complex)
    for k in range(1, K):
        J[k] = period**k / jw - (k / jw) * J[k - 1]
    return J


def _weight_integrals(n_points, period, K):
    """Weights mapping FFT coefficients of a periodic function to its moments."""
    d = np.fft.fftfreq(n_points, 1.0 / n_points)
    J = np.zeros((K, n_points), dtype=complex)
    J[:, 0] = [period ** (k + 1) / (k + 1) for k in range(K)]
    J[:, 1:] = _by_parts(2 * np.pi * d[1:] / period, period, K)
    if n_points % 2 == 0:
        # Nyquist bin: split between +-L/2 so the interpolant stays real
        w = np.pi * n_points / period
        J[:, n_points // 2] = 0.5 * (_by_parts(w, period, K) + _by_parts(-w, period, K))
    return J


def power_moments(power, period, K=3):
    """Moments of the periodic function sampled as ``power`` on ``[0, period)``.

    The samples are expanded in their trigonometric interpolant (via FFT) and
    each Fourier term is integrated against ``t**k`` in closed form. For
    ``k = 0`` this equals the trapezoidal rule. If ``power`` comes from a
    signal with ``N_s`` frequency bins sampled on ``L >= 2*N_s - 1`` points,
    the interpolant is ``|y|^2`` itself and the result is exact.
    """
    p = np.asarray(power, dtype=float)
    L = p.size
    coef = np.fft.fft(p) / L
    J = _weight_integrals(L, period, K)
    return (J @ coef).real


def raw_moments(sig: TimeSignal, K: int = 3) -> RawMoments:
    """Raw temporal moments of ``|y(t)|^2`` over one period."""
    if int(K) != K or K < 1:
        raise InputError(f"K must be a positive integer, got {K}")
    p = sig.power
    if not np.any(p > 0):
        raise DegenerateSignalError("signal is identically zero")
    m = power_moments(p, sig.period, int(K))
    if m[0] <= 0:
        raise DegenerateSignalError(f"non-positive received power m0={m[0]!r}")
    return RawMoments(m)


def standardize(m: RawMoments | Sequence[float]) -> StandardizedMoments:
    """``(P0, tau_bar, tau_rms)`` from the first three raw moments.

    A variance term in ``[-CS_SLACK*m2/m0, 0)`` is round-off and clamps
    ``tau_rms`` to zero; anything more negative raises.
    """
    v = m.values if isinstance(m, RawMoments) else np.asarray(m, dtype=float)
    if v.size < 3:
        raise InputError(f"need at least 3 raw moments, got {v.size}")
    m0, m1, m2 = (float(x) for x in v[:3])
    if not m0 > 0:
        raise DegenerateSignalError(f"non-positive received power m0={m0!r}")
    tau_bar = m1 / m0
    var = m2 / m0 - tau_bar * tau_bar
    if var < -CS_SLACK * abs(m2 / m0):
        raise NumericalInconsistencyError(
            f"m0*m2 < m1**2: variance term {var!r} below round-off slack"
        )
    return StandardizedMoments(m0, tau_bar, float(np.sqrt(max(var, 0.0))))


def standardize_array(m):
    """Vectorized :func:`standardize` without the consistency check.

    Returns ``(p0, tau_bar, variance)`` arrays; callers decide what to do
    with negative variance terms.
    """
    m = np.asarray(m, dtype=float)
    p0 = m[..., 0]
    tau_bar = m[..., 1] / p0
    var = m[..., 2] / p0 - tau_bar**2
    return p0, tau_bar, var


def batch_moments(dataset: Sequence[FrequencyResponse], K=3, oversampling=8) -> MomentMatrix:
    """Moment matrix of a list of realizations, one row each, order preserved.

    All realizations must share ``N_s`` and ``delta_f``. A failure in one
    realization is re-raised as :class:`RealizationError` carrying its index.
    """
    dataset = list(dataset)
    if not dataset:
        raise InputError("dataset is empty")
    ref = dataset[0]
    rows = []
    for i, freq in enumerate(dataset):
        if freq.n_samples != ref.n_samples or not np.isclose(
            freq.delta_f, ref.delta_f, rtol=1e-9, atol=0
        ):
            raise RealizationError(i, InputError("frequency grid differs from realization 0"))
        try:
            rows.append(raw_moments(inverse_transform(freq, oversampling), K))
        except (InputError, DegenerateSignalError) as exc:
            raise RealizationError(i, exc) from exc
    return MomentMatrix.from_rows(rows)


def write_moment_matrix(mm: MomentMatrix, path, header_lines=()):
    """CSV with header ``m0,m1,...``; values written with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        for h in header_lines:
            fh.write(f"# {h}\n")
        fh.write(",".join(f"m{k}" for k in range(mm.K)) + "\n")
        for row in mm.values:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def read_moment_matrix(path) -> MomentMatrix:
    path = Path(path)
    rows = []
    K = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            cells = [c.strip() for c in s.split(",")]
            if K is None:
                if cells != [f"m{k}" for k in range(len(cells))]:
                    raise FormatError(f"expected header 'm0,m1,...', got {s!r}", path, lineno)
                K = len(cells)
                continue
            if len(cells) != K:
                raise FormatError(f"expected {K} columns, got {len(cells)}", path, lineno)
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise FormatError(f"non-numeric value in {s!r}", path, lineno) from None
    if K is None:
        raise FormatError("missing header", path, 1)
    if not rows:
        raise FormatError("no data rows", path)
    arr = np.asarray(rows)
    if not np.all(np.isfinite(arr)):
        raise FormatError("non-finite value", path)
    return MomentMatrix(arr)
