"""Semi-discrete NLS bi-soliton at reduced resolution (d = 64)."""

import math

from ffcfe import build_tableau, error_series, integrate, make_problem
from ffcfe.basis import space_for_method

sys = make_problem("nls", d=64, L=100.0, x0=-50.0, A=10.0, M=1.0, N=math.sqrt(2.0), omega=2.0)
for method in ("cfe2", "tfcfe2"):
    tab = build_tableau(space_for_method(method), 2.0, 0.2, s=8)
    es = error_series(integrate(tab, sys, None, 0.0, 10.0, 0.2), sys)
    print(f"{method:8s} GE = {es.GE:.6f}  GEH = {es.GEH:.1e}  charge error = {es.EC_max:.3e}")
