"""Shared test helpers."""

import numpy as np


def mp_discrete_gaussian_dev(s, theta, k, cutoff=40, dps=500):
    """Extended-precision |rescaled lattice moment - Gaussian moment|.

    The true deviations fall as exp(-2 pi^2 / s^2), far below double
    precision at the spacings of interest, so the spacing-monotonicity checks
    evaluate the same sums in mpmath with a cutoff wide enough that window
    truncation does not mask the spacing effect.  Spacings are taken as the
    intended decimal values (their binary float images break the exact
    lattice symmetry at the truncation boundary).
    """
    import mpmath
    mp = mpmath.mp
    with mp.workdps(dps):
        ss, th = mpmath.mpf(str(s)), mpmath.mpf(str(theta))
        j_lo = int(mpmath.ceil((-cutoff - th) / ss))
        j_hi = int(mpmath.floor((cutoff - th) / ss))
        total = mpmath.mpf(0)
        mom = mpmath.mpf(0)
        for j in range(j_lo, j_hi + 1):
            x = j * ss + th
            w = ss * mpmath.exp(-x * x / 2) / mpmath.sqrt(2 * mpmath.pi)
            total += w
            mom += w * x**k
        gauss = mpmath.mpf(0)
        if k % 2 == 0:
            gauss = mpmath.mpf(int(np.prod(np.arange(1, k, 2)))) if k else mpmath.mpf(1)
        dev = abs(mom / total - gauss)
        floor = mpmath.mpf(10) ** (-(dps - 20))  # arithmetic noise at this dps
        return dev if dev > floor else mpmath.mpf(0)
