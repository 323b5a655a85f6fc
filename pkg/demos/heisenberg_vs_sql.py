"""Optimized uncertainty against n for the four noise settings of the
scaling comparison, at two tilt angles.

Fitted log-log slopes near -1 mark Heisenberg scaling and near -0.5 the
standard quantum limit.  Local slopes show how the finite-n values drift.
"""
import numpy as np

from ghzmetro import Angles, fit_scaling
from ghzmetro.experiments import fig2_curves, local_slopes, run_figure

for theta in (1.0, 0.5):
    print(f"theta = {theta}")
    for name, rows in run_figure(fig2_curves(), Angles(theta, 0.0)).items():
        slope = fit_scaling([(r["n"], r["delta_theta"]) for r in rows])[0]
        local = np.round(local_slopes(rows), 3).tolist()
        print(f"  {name:<24} slope {slope:+.3f}   local {local}")
