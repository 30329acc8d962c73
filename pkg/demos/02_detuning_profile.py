# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Detuning profile of the parametric resonance
#
# Both SQUIDs are driven at a common frequency near `2 k_1`. A sweep
# plan scans that frequency and records `N_1` at several times. Longer
# driving narrows the resonance. The maximum sits slightly below `2 k_1`
# because the drive shifts the mode frequency at second order.

# %%
import tempfile

import numpy as np

from dcesim.config import parse_config
from dcesim.sweep import argmax_point, peak_profile, plan_from_config, run_sweep

PLAN = """
[cavity]
chi0 = 0.05
b0L = 1
b0R = 1

[drive]
epsilon = 0.05
phi_R = 0

[sweep]
name = profile
times = 40, 80

[axis omega]
path = drive.omega_L, drive.omega_R
center = 2*k1
span = 0.1
count = 41
"""

# %%
plan = plan_from_config(parse_config(PLAN, "profile.ini"))
centre = float(np.mean(plan.axes[0].values))
with tempfile.TemporaryDirectory() as out:
    result = run_sweep(plan, out)

# %% [markdown]
# ## Width and position of the peak

# %%
for column in plan.columns():
    prof = peak_profile(result, column, along="omega")
    top = argmax_point(result, column)
    print(f"{column}: max N_1 = {result.grid(column).max():.4g} at Omega/2k_1 - 1 = "
          f"{top['omega'] / centre - 1:+.2%}, relative FWHM = {prof.fwhm / centre:.4f}")
