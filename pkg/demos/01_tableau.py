"""Build CFE2 and TFCFE2 tableaus and compare them with the polynomial limit."""

import numpy as np

from ffcfe import build_tableau, dump_tableau
from ffcfe.basis import make_cfe_space, make_tf1_space

cfe2 = build_tableau(make_cfe_space(2), s=3)
print(dump_tableau(cfe2, fmt="text"))

# the fitted tableau drifts back to CFE2 as h*omega shrinks (second order in nu)
for h in (0.4, 0.2, 0.1, 0.05):
    tf = build_tableau(make_tf1_space(2, 1.0), 5.0, h, s=3)
    gap = np.max(np.abs(tf.Amat - cfe2.Amat))
    print(f"nu = {5 * h:5.2f}   max |A_tf - A_cfe| = {gap:.3e}")
