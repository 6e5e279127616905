# %% [markdown]
# # Gaussian emissions and their gradients
#
# Each token predicts a diagonal Gaussian over mel channels. The loss gradient
# reaches means and log-variances through posterior-weighted sufficient
# statistics, checked here against central differences.

# %%
import numpy as np

from maln import GaussianSequence, emission_matrix, grad_gaussians
from maln.lattice import lattice

rng = np.random.default_rng(0)
mel = rng.normal(size=(10, 3))
g = GaussianSequence(rng.normal(size=(4, 3)), rng.normal(scale=0.3, size=(4, 3)))
logp = emission_matrix(mel, g)
print("emission matrix", logp.shape)

# %%
def loss_of(means, log_vars):
    return -lattice(emission_matrix(mel, GaussianSequence(means, log_vars))).total_log_prob


d_mu, d_lv = grad_gaussians(lattice(logp).gamma, mel, g)

h = 1e-5
fd = np.zeros_like(g.means)
for idx in np.ndindex(fd.shape):
    up, dn = g.means.copy(), g.means.copy()
    up[idx] += h
    dn[idx] -= h
    fd[idx] = (loss_of(up, g.log_vars) - loss_of(dn, g.log_vars)) / (2 * h)
print("means: max |analytic - numeric| =", np.abs(d_mu - fd).max())

# %% [markdown]
# Variances are floored at 1e-6. A log-variance pushed below the floor stops
# changing the likelihood, and its gradient is zero.

# %%
lv = g.log_vars.copy()
lv[0, 0] = -30.0
_, d_lv = grad_gaussians(lattice(emission_matrix(mel, GaussianSequence(g.means, lv))).gamma,
                         mel, GaussianSequence(g.means, lv))
print("gradient below the floor:", d_lv[0, 0])
