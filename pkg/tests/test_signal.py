"""Reconstruction of the periodic measured signal."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from tempmoments.errors import FormatError, InputError
from tempmoments.signal import (
    FrequencyResponse,
    TimeSignal,
    energy,
    inverse_transform,
    read_frequency_response,
    write_frequency_response,
)


def direct_eval(Y, delta_f, t):
    """Reconstruction formula evaluated term by term."""
    n = np.arange(len(Y))
    return np.exp(2j * np.pi * delta_f * np.outer(t, n)) @ np.asarray(Y) / len(Y)


def random_response(rng, n, delta_f=1e6):
    return FrequencyResponse(rng.standard_normal(n) + 1j * rng.standard_normal(n), delta_f)


complex_samples = st.integers(2, 40).flatmap(
    lambda n: st.lists(
        st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
        min_size=n,
        max_size=n,
    )
)


def test_single_dc_bin_is_constant():
    sig = inverse_transform(FrequencyResponse([1, 0, 0, 0], 3.7), 8)
    assert_allclose(sig.values, 0.25, atol=1e-15)


def test_two_term_by_hand():
    sig = inverse_transform(FrequencyResponse([1, 1], 1.0), 2)
    assert_allclose(sig.grid, [0, 0.25, 0.5, 0.75])
    assert_allclose(sig.values, [1, (1 + 1j) / 2, 0, (1 - 1j) / 2], atol=1e-15)


def test_grid_covers_one_period():
    freq = random_response(np.random.default_rng(0), 16, delta_f=2e6)
    sig = inverse_transform(freq, 8)
    assert sig.n_points == 128
    assert sig.period == pytest.approx(5e-7)
    assert sig.grid[0] == 0.0
    assert sig.grid[-1] < sig.period


def test_matches_direct_formula():
    rng = np.random.default_rng(1)
    freq = random_response(rng, 37, delta_f=5e6)
    sig = inverse_transform(freq, 3)
    assert_allclose(sig.values, direct_eval(freq.samples, freq.delta_f, sig.grid), rtol=1e-12, atol=1e-14)


def test_parseval_against_double_sum():
    rng = np.random.default_rng(2)
    Y = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    freq = FrequencyResponse(Y, 1e6)
    sig = inverse_transform(freq, 8)
    quad = sig.period * np.mean(sig.power)
    # integral of |y|^2 by orthogonality of the exponentials, term by term
    T = 1 / freq.delta_f
    double_sum = sum(
        Y[a] * np.conj(Y[b]) * (T if a == b else 0.0) for a in range(64) for b in range(64)
    ).real / 64**2
    assert quad == pytest.approx(double_sum, rel=1e-12)
    assert energy(freq) == pytest.approx(double_sum, rel=1e-12)


def test_energy_examples():
    assert energy(FrequencyResponse([1, 0, 0, 0], 1.0)) == pytest.approx(1 / 16)
    assert energy(FrequencyResponse([1, 1], 1.0)) == pytest.approx(0.5)


def test_bandwidth_and_frequencies():
    freq = FrequencyResponse(np.ones(5), 2.0, f_start=10.0)
    assert freq.bandwidth == 8.0
    assert_allclose(freq.frequencies, [10, 12, 14, 16, 18])


@given(complex_samples, st.floats(1e3, 1e9))
def test_periodicity(Y, delta_f):
    y = direct_eval(Y, delta_f, [0.0, 1.0 / delta_f])
    scale = max(np.sum(np.abs(Y)) / len(Y), 1e-300)
    assert abs(y[1] - y[0]) <= 1e-9 * scale


@settings(max_examples=50)
@given(complex_samples, complex_samples, st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
def test_linearity(Y1, Y2, a, b):
    n = min(len(Y1), len(Y2))
    Y1, Y2 = np.asarray(Y1[:n]), np.asarray(Y2[:n])
    lhs = inverse_transform(FrequencyResponse(a * Y1 + b * Y2, 1.0), 4).values
    rhs = (a * inverse_transform(FrequencyResponse(Y1, 1.0), 4).values
           + b * inverse_transform(FrequencyResponse(Y2, 1.0), 4).values)
    scale = (abs(a) * np.abs(Y1).sum() + abs(b) * np.abs(Y2).sum()) / n + 1e-300
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


@pytest.mark.parametrize("n", [64, 1000, 8192])
def test_parseval_with_oversampling_8(n):
    from tempmoments.moments import raw_moments

    freq = random_response(np.random.default_rng(n), n)
    m0 = raw_moments(inverse_transform(freq, 8), 1)[0]
    assert m0 == pytest.approx(energy(freq), rel=1e-9)


@pytest.mark.parametrize(
    "Y, df",
    [([1, np.nan], 1.0), ([1, np.inf], 1.0), ([1], 1.0), ([1, 2], 0.0), ([1, 2], -1.0)],
)
def test_invalid_response(Y, df):
    with pytest.raises(InputError):
        FrequencyResponse(Y, df)


@pytest.mark.parametrize("q", [0, -1, 1.5])
def test_invalid_oversampling(q):
    with pytest.raises(InputError):
        inverse_transform(FrequencyResponse([1, 2], 1.0), q)


def test_time_signal_validation():
    with pytest.raises(InputError):
        TimeSignal([1, 2], 0.0)
    with pytest.raises(InputError):
        TimeSignal([1, 2], 1.0, n_samples=4)


def test_samples_are_read_only():
    freq = FrequencyResponse([1, 2, 3], 1.0)
    with pytest.raises(ValueError):
        freq.samples[0] = 0


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    freq = FrequencyResponse(rng.standard_normal(50) + 1j * rng.standard_normal(50), 2.5e6, 2e9)
    p = tmp_path / "h.csv"
    write_frequency_response(freq, p, ["generated in a test"])
    back = read_frequency_response(p)
    assert back.n_samples == 50
    assert back.f_start == 2e9
    assert back.delta_f == pytest.approx(2.5e6, rel=1e-12)
    assert np.array_equal(back.samples, freq.samples)


@pytest.mark.parametrize(
    "body, line",
    [
        ("f,re,im\n0,1,0\n", 1),
        ("f_hz,re,im\n0,1,0\n1,x,0\n", 3),
        ("f_hz,re,im\n0,1,0\n1,1\n", 3),
        ("# comment\nf_hz,re,im\n0,1,0\n1,nan,0\n", 4),
    ],
)
def test_format_errors_carry_line(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(FormatError) as info:
        read_frequency_response(p)
    assert info.value.line == line
    assert f":{line}:" in str(info.value)


@pytest.mark.parametrize(
    "rows",
    [["0,1,0", "2,1,0", "1,1,0"], ["0,1,0", "1,1,0", "2.1,1,0"], ["0,1,0"]],
)
def test_grid_errors(tmp_path, rows):
    p = tmp_path / "bad.csv"
    p.write_text("f_hz,re,im\n" + "\n".join(rows) + "\n")
    with pytest.raises(FormatError):
        read_frequency_response(p)


def test_format_error_is_input_error():
    assert issubclass(FormatError, InputError)
