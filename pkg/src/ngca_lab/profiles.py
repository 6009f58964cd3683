"""1-D test-function profiles used inside ridge queries.

A profile phi knows how to evaluate itself and how to take the smoothed mean
``E_{g~N(0,1)}[phi(a + s g)]`` exactly (polynomials, cosines, Hermite
polynomials) or by adaptive quadrature when a clip makes the closed form
unavailable.  Clips are applied to the *value* of the profile.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ContractViolation
from .hermite import he_eval

_SQRT2PI = math.sqrt(2.0 * math.pi)


def _clip_values(vals, clip):
    if clip is None:
        return vals
    lo, hi = clip
    return np.clip(vals, lo, hi)


def _double_factorial_moment(i: int) -> float:
    # E[g^i] for standard normal
    if i % 2 == 1:
        return 0.0
    out = 1.0
    for j in range(1, i, 2):
        out *= j
    return out


@dataclass(frozen=True)
class ConstProfile:
    value: float

    clip = None

    def evaluate(self, t):
        return np.full_like(np.asarray(t, dtype=np.float64), self.value)

    def gauss_mean(self, a: float, s: float) -> float:
        return self.value

    def value_bounds(self):
        return (self.value, self.value)


@dataclass(frozen=True)
class CosProfile:
    """phi(t) = cos(omega t + phase); bounded in [-1, 1] by construction."""

    omega: float
    phase: float = 0.0

    clip = None

    def evaluate(self, t):
        return np.cos(self.omega * np.asarray(t, dtype=np.float64) + self.phase)

    def gauss_mean(self, a, s):
        damp = math.exp(-0.5 * (self.omega * s) ** 2)
        return np.cos(self.omega * np.asarray(a) + self.phase) * damp

    def value_bounds(self):
        return (-1.0, 1.0)


@dataclass(frozen=True)
class PolyProfile:
    """Polynomial in monomial coefficients, optionally value-clipped."""

    coeffs: tuple
    clip: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.clip is not None:
            lo, hi = self.clip
            if not lo < hi:
                raise ContractViolation("clip bounds must satisfy lo < hi")
            object.__setattr__(self, "clip", (float(lo), float(hi)))

    def evaluate(self, t):
        vals = np.polynomial.polynomial.polyval(np.asarray(t, dtype=np.float64), self.coeffs)
        return _clip_values(vals, self.clip)

    def _shifted_mean_coeffs(self, s: float) -> np.ndarray:
        # q(a) = E[p(a + s g)] as a polynomial in a
        deg = len(self.coeffs) - 1
        out = np.zeros(deg + 1)
        for j, c in enumerate(self.coeffs):
            if c == 0.0:
                continue
            for i in range(0, j + 1, 2):
                out[j - i] += c * math.comb(j, i) * _double_factorial_moment(i) * s**i
        return out

    def gauss_mean(self, a, s):
        if self.clip is None:
            return np.polynomial.polynomial.polyval(np.asarray(a), self._shifted_mean_coeffs(s))
        if s == 0.0:
            return float(self.evaluate(np.asarray(a)))
        val, _ = quad(lambda g: float(self.evaluate(a + s * g)) * math.exp(-0.5 * g * g) / _SQRT2PI,
                      -10.0, 10.0, epsabs=1e-10, limit=200)
        return val

    def value_bounds(self):
        return self.clip


@dataclass(frozen=True)
class HermiteProfile:
    """phi(t) = He_k(t), optionally zeroed outside |t| <= clip_level."""

    order: int
    clip_level: float | None = None

    def evaluate(self, t):
        t = np.asarray(t, dtype=np.float64)
        vals = he_eval(self.order, t)
        if self.clip_level is not None:
            vals = np.where(np.abs(t) <= self.clip_level, vals, 0.0)
        return vals

    def gauss_mean(self, a, s):
        if self.clip_level is None:
            # He_k(a + s g) = sum_l C(k,l) a^{k-l} He_l(s g); odd orders vanish,
            # even orders have E[He_{2r}(s g)] = (2r)! ((s^2-1)/2)^r / r!
            k = self.order
            total = 0.0
            for ell in range(0, k + 1, 2):
                r = ell // 2
                inner = math.factorial(ell) / math.factorial(r) * ((s * s - 1.0) / 2.0) ** r
                total += math.comb(k, ell) * np.asarray(a) ** (k - ell) * inner
            return total
        if s == 0.0:
            return float(self.evaluate(np.asarray(a)))
        val, _ = quad(lambda g: float(self.evaluate(a + s * g)) * math.exp(-0.5 * g * g) / _SQRT2PI,
                      -10.0, 10.0, epsabs=1e-10, limit=200)
        return val

    def value_bounds(self):
        if self.clip_level is None:
            return None
        grid = np.linspace(-self.clip_level, self.clip_level, 2049)
        vals = he_eval(self.order, grid)
        return (float(vals.min()), float(vals.max()))


def gauss_expectation(profile) -> float:
    """E_{t~N(0,1)}[phi(t)]."""
    return float(np.asarray(profile.gauss_mean(0.0, 1.0)))
