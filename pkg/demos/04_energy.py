"""Energy error along Duffing and FPU trajectories."""

import numpy as np

from ffcfe import build_tableau, error_series, integrate, make_problem
from ffcfe.basis import space_for_method

runs = [("duffing", "tfcfe2", 5.0, 0.04, 100.0), ("duffing", "cfe2", 5.0, 0.04, 100.0),
        ("fpu", "cfe3", 50.0, 1 / 50, 10.0)]
for name, method, omega, h, T in runs:
    sys = make_problem(name)
    tab = build_tableau(space_for_method(method), omega, h, s=8)
    tr = integrate(tab, sys, None, 0.0, T, h, record_states=False)
    es = error_series(tr, sys)
    print(f"{name:8s}{method:8s} GEH = {es.GEH:.2e}   mean Picard iterations = {np.mean(tr.iterations):.1f}")
    print("   EH at t = T/4, T/2, T:", np.array2string(es.EH[[len(es.EH) // 4, len(es.EH) // 2, -1]], precision=2))
