# %% [markdown]
# # Tensor files and the command line
#
# Tensors travel between tools in a small binary format: a "MALN" magic, a
# version byte, a dtype byte, a rank byte, little-endian u64 dims and the raw
# payload.

# %%
import io
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from maln import read_tensor, write_tensor

buf = io.BytesIO()
size = write_tensor(np.array([[-1.0, -2.0], [-1.0, -2.0], [-2.0, -1.0]]), buf)
print(size, "bytes")
print(read_tensor(buf.getvalue()))

# %% [markdown]
# The same matrix through the `maln` command: loss by recursion, loss by
# enumeration and the best path.

# %%
tmp = Path(tempfile.mkdtemp())
(tmp / "logp.maln").write_bytes(buf.getvalue())
for cmd in (["loss"], ["oracle"], ["align"]):
    res = subprocess.run([sys.executable, "-m", "maln.cli", *cmd, "--logp", str(tmp / "logp.maln")],
                         capture_output=True, text=True)
    print(cmd[0], "->", res.stdout.strip(), "exit", res.returncode)

# %%
(tmp / "bad.maln").write_bytes(b"NOPE")
res = subprocess.run([sys.executable, "-m", "maln.cli", "loss", "--logp", str(tmp / "bad.maln")],
                     capture_output=True, text=True)
print("exit", res.returncode, res.stderr.strip())
