import numpy as np


def simpson_weights(x):
    """Composite Simpson weights for (possibly non-uniform) nodes ``x``.

    Matches ``scipy.integrate.simpson`` for the same nodes: pairs of
    intervals use the non-uniform three-point rule and, when the number of
    intervals is odd, the last interval gets Cartwright's correction.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("Simpson's rule needs at least 3 nodes")
    h = np.diff(x)
    w = np.zeros(n)
    m = n - 1 if (n - 1) % 2 == 0 else n - 2  # intervals covered by pairs
    h0 = h[0:m:2]
    h1 = h[1:m:2]
    s = h0 + h1
    w[0:m - 1:2] += s / 6.0 * (2.0 - h1 / h0)
    w[1:m:2] += s / 6.0 * s * s / (h0 * h1)
    w[2:m + 1:2] += s / 6.0 * (2.0 - h0 / h1)
    if m < n - 1:
        a, b = h[-2], h[-1]
        w[-1] += (2 * b * b + 3 * a * b) / (6 * (a + b))
        w[-2] += (b * b + 3 * a * b) / (6 * a)
        w[-3] -= b ** 3 / (6 * a * (a + b))
    return w


def gauss_legendre(lo, hi, size):
    """Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    t, w = np.polynomial.legendre.leggauss(size)
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w
