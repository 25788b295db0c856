"""Observed convergence orders on the perturbed Kepler problem."""

import math

from ffcfe import Experiment, run_experiment
from ffcfe.metrics import h_ladder, sweep_csv

exp = Experiment("kepler", ["cfe2", "tfcfe2", "cfe3", "tfcfe3", "tf2cfe4"], h_ladder(1.0, 5),
                 tmax=20 * math.pi, omega=1.0)
reports = run_experiment(exp, workers=4)
print(sweep_csv(reports, timing=False))
for rep in reports:
    print(f"{rep.method:8s} slope {rep.slope:.2f} over h in {rep.fit_window}")
