"""MMD over rotation angles of a noisy square cloud.

The square has four-fold symmetry, so the landscape has a mode every 90
degrees next to the true angle. Run: python demos/02_rotation_toy.py
"""

# %%
import numpy as np

from mmdnet import RunConfig
from mmdnet.experiments import circular_local_minima, run_toy_rotation

cfg = RunConfig().updated(toy__num_points=300, toy__resolution=2)
result = run_toy_rotation(cfg)

# %%
best = result.thetas[np.argmin(result.mmd)]
minima = [result.thetas[i] for i in circular_local_minima(result.mmd)]
print(f"true angle 255, MMD minimum at {best}")
print("local minima:", minima)

# %%
# Text sketch of the landscape, one row every 10 degrees.
scaled = (result.mmd - result.mmd.min()) / np.ptp(result.mmd)
for theta, v in zip(result.thetas[::5], scaled[::5]):
    print(f"{theta:6.0f} {'#' * int(1 + 40 * v)}")
