# %% [markdown]
# # The alignment lattice
#
# Every frame is emitted by one token, tokens are visited in order, and each
# token owns at least one frame. The loss sums the probability of all such
# paths, which the forward recursion does in O(n m) instead of enumerating
# C(n-1, m-1) paths.

# %%
import numpy as np

from maln import brute_force_loss, forward, loss_and_grad
from maln.lattice import alignment_count, lattice

logp = np.array([[-1.0, -2.0],
                 [-1.0, -2.0],
                 [-2.0, -1.0]])
_, loss = forward(logp)
print("forward loss:", loss)
print("enumerated  :", brute_force_loss(logp))
print("paths       :", alignment_count(3, 2))

# %% [markdown]
# The posterior occupancy says how much of each frame each token owns. Rows sum
# to one, and the loss gradient w.r.t. the emission matrix is its negation.

# %%
lat = lattice(logp)
print(np.round(lat.gamma, 4))
print("row sums:", lat.gamma.sum(axis=1))
_, grad = loss_and_grad(logp)
assert np.allclose(grad, -lat.gamma)

# %% [markdown]
# Adding a constant c to every entry shifts the loss by -n c and leaves the
# posterior alone.

# %%
shifted = lattice(logp + 5.0)
print("loss shift:", -shifted.total_log_prob - loss, "expected", -3 * 5.0)
print("posterior unchanged:", np.allclose(shifted.gamma, lat.gamma))
