"""Sampling from fitted models and a synthetic multipath channel generator.

Moment sampling: draw ``x ~ N(mu, sigma)`` through a lower-triangular factor,
take ``m = exp(x)``, then standardize. A sampled row need not satisfy
``m0*m2 >= m1**2``; such rows are rejected and redrawn, and the count is
reported.

The channel generator is a test oracle only (Poisson path count, uniform
delays, exponentially decaying complex Gaussian gains, optional white noise).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import linalg

from .errors import InputError, ModelInconsistencyError, ParameterError
from .models import MvlnParams
from .moments import MomentMatrix, StandardizedMoments, standardize_array
from .signal import FrequencyResponse

__all__ = [
    "JITTER_SCALE",
    "MAX_REJECTION_RATE",
    "StandardizedSamples",
    "SynthChannelConfig",
    "sample_mvln",
    "sample_standardized",
    "multipath_response",
    "generate_channels",
    "realization_stream",
]

#: diagonal jitter, relative to trace(sigma)/K, added when Cholesky fails
JITTER_SCALE = 1e-12
MAX_REJECTION_RATE = 0.5


def _lower_factor(sigma):
    """Cholesky factor of ``sigma``, retrying once with diagonal jitter."""
    try:
        return linalg.cholesky(sigma, lower=True), 0.0
    except linalg.LinAlgError:
        pass
    jitter = JITTER_SCALE * np.trace(sigma) / sigma.shape[0]
    try:
        return linalg.cholesky(sigma + jitter * np.eye(sigma.shape[0]), lower=True), jitter
    except linalg.LinAlgError as exc:
        raise ParameterError(f"covariance factorization failed even with jitter: {exc}") from None


def _draw(rng, p, n, L):
    z = rng.standard_normal((n, p.K))
    m = np.exp(p.mu + z @ L.T)
    if np.any(m <= 0) or not np.all(np.isfinite(m)):
        raise ParameterError("exp(x) under/overflowed; mu is outside double range")
    return m


def _check_n(n):
    if int(n) != n or n < 1:
        raise InputError(f"sample count must be a positive integer, got {n}")
    return int(n)


def sample_mvln(p: MvlnParams, n: int, seed) -> MomentMatrix:
    """``n`` iid raw-moment vectors from the multivariate log-normal."""
    n = _check_n(n)
    L, jitter = _lower_factor(p.sigma)
    rng = np.random.default_rng(seed)
    return MomentMatrix(_draw(rng, p, n, L), {"seed": seed, "jitter": jitter})


@dataclass(frozen=True)
class StandardizedSamples:
    """Simulated ``(P0, tau_bar, tau_rms)`` with the raw rows they came from."""

    p0: np.ndarray
    tau_bar: np.ndarray
    tau_rms: np.ndarray
    raw: MomentMatrix
    n_rejected: int = 0
    jitter: float = 0.0

    def __len__(self):
        return self.p0.size

    def __getitem__(self, i) -> StandardizedMoments:
        return StandardizedMoments(float(self.p0[i]), float(self.tau_bar[i]), float(self.tau_rms[i]))

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.p0, self.tau_bar, self.tau_rms])


def sample_standardized(p: MvlnParams, n: int, seed) -> StandardizedSamples:
    """``n`` standardized-moment triples simulated from the log-normal model.

    The first draw uses the same stream as :func:`sample_mvln`, so with no
    rejections the raw rows are identical. Rejected rows are replaced by
    further draws from the same stream.
    """
    n = _check_n(n)
    if p.K < 3:
        raise InputError("standardized moments need K >= 3")
    L, jitter = _lower_factor(p.sigma)
    rng = np.random.default_rng(seed)
    kept = []
    n_kept = n_drawn = 0
    while n_kept < n:
        m = _draw(rng, p, n - n_kept, L)
        n_drawn += m.shape[0]
        ok = standardize_array(m)[2] >= 0
        kept.append(m[ok])
        n_kept += int(ok.sum())
        if n_drawn - n_kept > MAX_REJECTION_RATE * n_drawn:
            raise ModelInconsistencyError(
                f"{n_drawn - n_kept} of {n_drawn} draws have m0*m2 < m1**2; "
                "the parameters do not describe valid delay profiles"
            )
    raw = np.vstack(kept)
    p0, tau_bar, var = standardize_array(raw)
    return StandardizedSamples(
        p0,
        tau_bar,
        np.sqrt(var),
        MomentMatrix(raw, {"seed": seed, "jitter": jitter}),
        n_drawn - n,
        jitter,
    )


@dataclass(frozen=True)
class SynthChannelConfig:
    """Synthetic multipath generator settings (SI units).

    Path delays are uniform on ``[first_delay, first_delay + delay_span]``;
    gain variance is ``exp(-(delay - first_delay) / decay)``. ``snr_db`` is
    the ratio of the expected per-sample channel power to the noise variance;
    ``None`` disables noise.
    """

    mean_paths: float = 20.0
    decay: float = 20e-9
    delay_span: float = 100e-9
    n_samples: int = 801
    delta_f: float = 5e6
    snr_db: float | None = None
    first_delay: float = 10e-9
    f_start: float = 0.0

    def __post_init__(self):
        for name in ("mean_paths", "decay", "delay_span", "delta_f"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.first_delay < 0:
            raise InputError("first_delay must be non-negative")
        if int(self.n_samples) != self.n_samples or self.n_samples < 2:
            raise InputError("n_samples must be an integer >= 2")
        if self.first_delay + self.delay_span >= 1.0 / self.delta_f:
            raise InputError("delays must stay inside one period 1/delta_f")

    @property
    def expected_channel_power(self) -> float:
        """``E|H_n|^2`` given at least one path."""
        lam = self.mean_paths
        mean_count = lam / -np.expm1(-lam)
        mean_gain = self.decay / self.delay_span * -np.expm1(-self.delay_span / self.decay)
        return mean_count * mean_gain

    @property
    def noise_variance(self) -> float:
        if self.snr_db is None:
            return 0.0
        return self.expected_channel_power / 10 ** (self.snr_db / 10)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise InputError(f"bad generator config: {exc}") from None


def multipath_response(delays, gains, n_samples, delta_f, f_start=0.0) -> FrequencyResponse:
    """``H_n = sum_p gain_p exp(-j 2 pi n delta_f delay_p)``."""
    delays = np.asarray(delays, dtype=float)
    gains = np.asarray(gains, dtype=complex)
    n = np.arange(n_samples)
    phase = np.exp(-2j * np.pi * delta_f * np.outer(n, delays))
    return FrequencyResponse(phase @ gains, delta_f, f_start)


def realization_stream(seed, i):
    """Generator for realization ``i``; independent of generation order."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))


def generate_channels(cfg: SynthChannelConfig, n: int, seed) -> list[FrequencyResponse]:
    """``n`` noisy synthetic transfer functions; zero-path draws are redrawn."""
    n = _check_n(n)
    sigma2 = cfg.noise_variance
    out = []
    for i in range(n):
        rng = realization_stream(seed, i)
        count = 0
        while count == 0:
            count = rng.poisson(cfg.mean_paths)
        delays = cfg.first_delay + cfg.delay_span * rng.random(count)
        var = np.exp(-(delays - cfg.first_delay) / cfg.decay)
        gains = np.sqrt(var / 2) * (rng.standard_normal(count) + 1j * rng.standard_normal(count))
        H = multipath_response(delays, gains, cfg.n_samples, cfg.delta_f, cfg.f_start).samples
        if sigma2 > 0:
            w = rng.standard_normal(cfg.n_samples) + 1j * rng.standard_normal(cfg.n_samples)
            H = H + np.sqrt(sigma2 / 2) * w
        out.append(FrequencyResponse(H, cfg.delta_f, cfg.f_start))
    return out
