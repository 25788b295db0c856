"""Jacobi elliptic functions with modulus (not parameter) convention."""

import numpy as np
from scipy.special import ellipj


def jacobi_sn_cn_dn(u, k):
    """Return ``(sn, cn, dn)`` of argument ``u`` and modulus ``0 <= k < 1``.

    Vectorised over ``u``. The modulus is the one appearing in
    ``dn**2 + k**2 sn**2 = 1`` (parameter ``m = k**2``).
    """
    k = float(k)
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus must lie in [0, 1), got {k!r}")
    sn, cn, dn, _ = ellipj(np.asarray(u, dtype=float), k * k)
    return sn, cn, dn
