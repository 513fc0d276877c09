"""Simulating standardized moments and their correlations.

Draws received power, mean delay and rms delay spread from fitted parameters,
compares the log-domain marginals with their closed forms, and bootstraps the
pairwise correlations.

Run with ``python3 tutorials/03_simulate_and_correlate.py``.
"""

import numpy as np
from scipy import stats

from tempmoments.datasets import campaign_params
from tempmoments.inference import bootstrap_corr_ci
from tempmoments.models import mvln_mean
from tempmoments.simulate import sample_standardized

p = campaign_params("lille")
sim = sample_standardized(p, 10_000, seed=3)
print(f"{len(sim)} rows kept, {sim.n_rejected} redrawn (tau_rms^2 < 0)")

# ln P0 is the first latent coordinate; ln tau_bar is the difference of the
# first two, so both are Gaussian with known parameters.
law_p0 = stats.norm(p.mu[0], np.sqrt(p.sigma[0, 0]))
var = p.sigma[0, 0] + p.sigma[1, 1] - 2 * p.sigma[0, 1]
law_tau = stats.norm(p.mu[1] - p.mu[0], np.sqrt(var))
print("KS p-value ln P0     :", round(stats.kstest(np.log(sim.p0), law_p0.cdf).pvalue, 3))
print("KS p-value ln tau_bar:", round(stats.kstest(np.log(sim.tau_bar), law_tau.cdf).pvalue, 3))
print(f"E[P0] closed form {mvln_mean(p, 0):.3e}, sample {sim.p0.mean():.3e}")
print(f"median mean delay {np.exp(p.mu[1] - p.mu[0]) * 1e9:.1f} ns")

# Bootstrap intervals on the first 750 rows, about the size of one campaign.
rep = bootstrap_corr_ci(sim.as_array()[:750], 1000, seed=4, names=["P0", "tau_bar", "tau_rms"], workers=4)
print()
for pair in rep.pairs:
    print(f"{pair.pair:>16}: {pair.rho:+.2f} (+-{pair.epsilon:.2f})")
