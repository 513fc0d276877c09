"""Frequency-domain channel samples and the periodic measured signal.

A vector network analyzer returns ``N_s`` complex samples ``Y_n`` of the
(noisy) channel transfer function on a uniform grid with spacing ``delta_f``.
The measured signal is the trigonometric polynomial

    y(t) = (1/N_s) * sum_n Y_n exp(j 2 pi n delta_f t),

which is periodic with period ``1/delta_f``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError

__all__ = [
    "FrequencyResponse",
    "TimeSignal",
    "inverse_transform",
    "energy",
    "read_frequency_response",
    "write_frequency_response",
]

#: relative tolerance on the uniformity of the frequency grid in CSV files
SPACING_RTOL = 1e-6


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrequencyResponse:
    """Complex transfer-function samples on a uniform frequency grid.

    Parameters
    ----------
    samples : array_like of complex
        ``Y_n`` for ``n = 0, ..., N_s - 1``.
    delta_f : float
        Frequency spacing in Hz.
    f_start : float
        Frequency of sample 0 in Hz. Kept as metadata only; the
        reconstruction uses baseband indexing.
    """

    samples: np.ndarray
    delta_f: float
    f_start: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.samples, dtype=complex)
        if y.ndim != 1:
            raise InputError("samples must be one-dimensional")
        if y.size < 2:
            raise InputError(f"need at least 2 frequency samples, got {y.size}")
        if not np.all(np.isfinite(y)):
            raise InputError("frequency samples must be finite")
        if not (np.isfinite(self.delta_f) and self.delta_f > 0):
            raise InputError(f"delta_f must be positive, got {self.delta_f}")
        object.__setattr__(self, "samples", _frozen(y))
        object.__setattr__(self, "delta_f", float(self.delta_f))
        object.__setattr__(self, "f_start", float(self.f_start))

    @property
    def n_samples(self) -> int:
        return self.samples.size

    @property
    def bandwidth(self) -> float:
        """Measurement bandwidth ``B = (N_s - 1) * delta_f``."""
        return (self.n_samples - 1) * self.delta_f

    @property
    def period(self) -> float:
        return 1.0 / self.delta_f

    @property
    def frequencies(self) -> np.ndarray:
        return self.f_start + self.delta_f * np.arange(self.n_samples)


@dataclass(frozen=True)
class TimeSignal:
    """Measured signal ``y(t)`` on the grid ``t_i = i * period / L``.

    ``n_samples`` records ``N_s`` of the source response, so the polynomial
    degree is known downstream.
    """

    values: np.ndarray
    period: float
    n_samples: int = field(default=0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size == 0:
            raise InputError("values must be a non-empty 1-D array")
        if not (self.period > 0):
            raise InputError("period must be positive")
        n = int(self.n_samples) or v.size
        if v.size < n:
            raise InputError("grid is coarser than the source response")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "period", float(self.period))
        object.__setattr__(self, "n_samples", n)

    @property
    def n_points(self) -> int:
        return self.values.size

    @property
    def dt(self) -> float:
        return self.period / self.n_points

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dt

    @property
    def power(self) -> np.ndarray:
        """Instantaneous power ``|y(t_i)|**2``."""
        return self.values.real**2 + self.values.imag**2


def inverse_transform(freq: FrequencyResponse, oversampling: int = 8) -> TimeSignal:
    """Evaluate the measured signal on ``oversampling * N_s`` points of one period.

    The grid is left-closed, ``[0, 1/delta_f)``. Since the grid length ``L``
    is at least ``N_s``, a zero-padded inverse FFT gives the exact values of
    the trigonometric polynomial.
    """
    if int(oversampling) != oversampling or oversampling < 1:
        raise InputError(f"oversampling must be a positive integer, got {oversampling}")
    n = freq.n_samples
    L = int(oversampling) * n
    # ifft carries 1/L; the signal definition carries 1/N_s
    y = np.fft.ifft(freq.samples, n=L) * (L / n)
    return TimeSignal(y, freq.period, n)


def energy(freq: FrequencyResponse) -> float:
    """Closed-form ``integral |y(t)|^2 dt`` over one period (Parseval)."""
    y = freq.samples
    n = freq.n_samples
    return float(np.sum(y.real**2 + y.imag**2) / (n * n * freq.delta_f))


def read_frequency_response(path) -> FrequencyResponse:
    """Parse a ``f_hz,re,im`` CSV file.

    Rows must be strictly increasing and uniformly spaced in frequency
    (relative tolerance :data:`SPACING_RTOL`). Lines starting with ``#`` are
    comments.
    """
    path = Path(path)
    f, re, im = [], [], []
    header_seen = False
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            cells = [c.strip() for c in next(csv.reader([s]))]
            if not header_seen:
                if cells != ["f_hz", "re", "im"]:
                    raise FormatError(
                        f"expected header 'f_hz,re,im', got {s!r}", path, lineno
                    )
                header_seen = True
                continue
            if len(cells) != 3:
                raise FormatError(f"expected 3 columns, got {len(cells)}", path, lineno)
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                raise FormatError(f"non-numeric value in {s!r}", path, lineno) from None
            if not all(np.isfinite(vals)):
                raise FormatError("non-finite value", path, lineno)
            f.append(vals[0])
            re.append(vals[1])
            im.append(vals[2])
    if not header_seen:
        raise FormatError("missing header 'f_hz,re,im'", path, 1)
    if len(f) < 2:
        raise FormatError("need at least two frequency rows", path)
    f = np.asarray(f)
    steps = np.diff(f)
    if np.any(steps <= 0):
        raise FormatError("frequencies must be strictly increasing", path)
    delta_f = (f[-1] - f[0]) / (f.size - 1)
    if np.max(np.abs(steps - delta_f)) > SPACING_RTOL * delta_f:
        raise FormatError("frequency grid is not uniform", path)
    return FrequencyResponse(np.asarray(re) + 1j * np.asarray(im), delta_f, f[0])


def write_frequency_response(freq: FrequencyResponse, path, header_lines=()):
    """Write ``freq`` as ``f_hz,re,im`` CSV with full double precision."""
    with open(path, "w", newline="") as fh:
        for h in header_lines:
            fh.write(f"# {h}\n")
        fh.write("f_hz,re,im\n")
        for fk, y in zip(freq.frequencies, freq.samples):
            fh.write(f"{float(fk)!r},{float(y.real)!r},{float(y.imag)!r}\n")
