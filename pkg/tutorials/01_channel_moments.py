"""From transfer functions to temporal moments.

Builds a few synthetic multipath channels, turns each transfer function into
an oversampled impulse response, and integrates the power-delay profile to
get received power, mean delay and rms delay spread.

Run with ``python3 tutorials/01_channel_moments.py``.
"""

import numpy as np

from tempmoments.moments import batch_moments, raw_moments, standardize
from tempmoments.signal import energy, inverse_transform
from tempmoments.simulate import SynthChannelConfig, generate_channels, multipath_response

# Two taps, 40 ns apart, equal power. The mean delay is the midpoint and the
# spread is half the separation, up to the finite-bandwidth smearing.
delta_f, n = 5e6, 2048
freq = multipath_response([20e-9, 60e-9], [1.0, 1.0j], n, delta_f)
sig = inverse_transform(freq, oversampling=8)
s = standardize(raw_moments(sig))
print(f"two taps: tau_bar = {s.tau_bar * 1e9:.3f} ns, tau_rms = {s.tau_rms * 1e9:.3f} ns")

# m0 is the energy of the response; it must agree with the frequency-domain sum.
m0 = raw_moments(sig, 1).values[0]
print(f"Parseval: relative mismatch {abs(m0 / energy(freq) - 1):.1e}")

# A single tap is not a delta in time: the band limit leaves a spread of about
# T sqrt(ln 2) / (pi sqrt(N)) with T = 1 / delta_f.
one = standardize(raw_moments(inverse_transform(multipath_response([100e-9], [1.0], n, delta_f))))
T = 1 / delta_f
print(f"single tap: tau_rms = {one.tau_rms / T:.2e} T (floor {np.sqrt(np.log(2) / n) / np.pi:.2e} T)")

# A batch of random channels with noise gives one row of (m0, m1, m2) each.
cfg = SynthChannelConfig(snr_db=30.0)
mm = batch_moments(generate_channels(cfg, 200, seed=1))
logs = np.log(mm.values)
print(f"\n{len(mm)} channels, log raw moments:")
print("  mean", np.round(logs.mean(axis=0), 2))
print("  std ", np.round(logs.std(axis=0), 3))
