"""First-order Marcum Q function from its Bessel series."""

from __future__ import annotations

import numpy as np
from scipy.special import ive

__all__ = ["marcum_q1"]

_BLOCK = 64
_MAX_TERMS = 200_000


def _series(ratio: float, x: float, start: int) -> float:
    """sum_{k >= start} ratio^k ive_k(x) with ratio in [0, 1)."""
    total = 0.0
    k0 = start
    while k0 < _MAX_TERMS:
        k = np.arange(k0, k0 + _BLOCK)
        with np.errstate(under="ignore"):
            terms = ratio ** k * ive(k, x)
        total += float(terms.sum())
        # Terms are eventually decreasing; stop once the block tail is negligible.
        if k0 + _BLOCK > x and terms[-1] <= 1e-18 * max(total, 1e-300):
            return total
        k0 += _BLOCK
    raise ArithmeticError("Marcum Q series did not converge")


def _q1_scalar(a: float, b: float) -> float:
    if a < 0 or b < 0:
        raise ValueError("Marcum Q needs a >= 0 and b >= 0")
    if b == 0.0:
        return 1.0
    if a == 0.0:
        return float(np.exp(-0.5 * b * b))
    x = a * b
    # e^{-(a^2+b^2)/2} I_k(ab) = e^{-(a-b)^2/2} ive_k(ab): no overflow for large ab.
    scale = np.exp(-0.5 * (a - b) ** 2)
    if a < b:
        return float(scale * _series(a / b, x, 0))
    if a == b:
        return 0.5 * (1.0 + float(ive(0, x)))
    return float(1.0 - scale * _series(b / a, x, 1))


def marcum_q1(a, b):
    """Q_1(a, b) = P(|a + n| > b) for a complex unit-variance-per-dimension n.

    Uses ``Q = e^{-(a-b)^2/2} sum_k (a/b)^k ive_k(ab)`` when ``a < b`` and the
    complementary series when ``a > b``; exponentially scaled Bessel values
    keep every term finite.
    """
    a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.array([_q1_scalar(float(x), float(y)) for x, y in zip(a_arr.ravel(), b_arr.ravel())])
    out = out.reshape(a_arr.shape)
    return out if out.ndim else float(out)
