"""A fitted method integrates the harmonic oscillator to roundoff; CFE2 does not."""

from ffcfe import build_tableau, error_series, integrate, make_problem
from ffcfe.basis import space_for_method

sys = make_problem("harmonic", omega=5.0)
for method in ("cfe2", "tfcfe2", "tfcfe3"):
    tab = build_tableau(space_for_method(method), 5.0, 0.1, s=8)
    es = error_series(integrate(tab, sys, None, 0.0, 100.0, 0.1), sys)
    print(f"{method:8s} GE = {es.GE:.3e}   GEH = {es.GEH:.3e}")
