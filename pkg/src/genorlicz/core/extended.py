"""Arithmetic on [0, +inf] stored as ordinary floats.

``math.inf`` plays the role of the adjoined point at infinity.  The only
place where IEEE semantics disagree with the conventions used for
Phi-functions is ``0 * inf`` (NaN in IEEE, 0 here), so scaling goes
through :func:`ext_mul`.
"""

import math

import numpy as np

INF = math.inf

ExtendedValue = float


def ext_mul(c, v):
    """Multiply by a nonnegative scalar with the convention 0 * inf = 0."""
    c = np.asarray(c, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(invalid="ignore"):
        out = c * v
    out = np.where((c == 0) | (v == 0), 0.0, out)
    return out if out.ndim else float(out)


def ext_add(u, v):
    """Sum in [0, inf]; inf absorbs any finite summand."""
    out = np.asarray(u, dtype=float) + np.asarray(v, dtype=float)
    return out if out.ndim else float(out)


def is_finite(v):
    return np.isfinite(v)


def safe_ratio(num, den):
    """num/den with 0/0 and inf/inf mapped to NaN and c/0 to inf.

    Callers drop NaN entries as undecidable samples.
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    out = np.where((num == 0) & (den == 0), np.nan, out)
    out = np.where(np.isinf(num) & np.isinf(den), np.nan, out)
    out = np.where((den == 0) & (num > 0), INF, out)
    return out
