# %% [markdown]
# # Hard alignments and the length regulator
#
# Viterbi picks the single best monotonic path. Its per-token frame counts are
# the durations used to expand token states to frame rate.

# %%
import numpy as np

from maln import length_regulate, path_to_durations, viterbi
from maln.alignment import round_durations

logp = np.array([[-1.0, -2.0],
                 [-1.0, -2.0],
                 [-2.0, -1.0]])
path, score = viterbi(logp)
durations = path_to_durations(path, 2)
print("path", path, "score", score, "durations", durations)

# %%
hidden = np.array([[1.0, 0.0],
                   [0.0, 1.0]])
print(length_regulate(hidden, durations))

# %% [markdown]
# At inference time durations come from a regressor in linear space. They are
# rounded half away from zero and clamped at zero; a speed factor above one
# stretches them before rounding.

# %%
print(round_durations([0.4, 0.5, 1.5, 2.49]))
print(round_durations([0.4, 0.5, 1.5, 2.49], speed=2.0))
