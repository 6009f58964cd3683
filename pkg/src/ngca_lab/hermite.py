"""Probabilist Hermite polynomials, normalized variants, and Hermite tensors.

Conventions
-----------
``He_k`` is the probabilist polynomial with leading coefficient 1 and
``He_{k+1}(t) = t He_k(t) - k He_{k-1}(t)``.  ``h_k = He_k / sqrt(k!)`` is the
orthonormal family for the standard Gaussian weight.  The order-k Hermite
tensor over dimension m packs rescaled products of the ``h_j`` into a dense
``m**k`` array; its entry at an index tuple with coordinate multiplicities
``(j_1, ..., j_m)`` equals ``multinomial(k; j)**-0.5 * prod_l h_{j_l}(x_l)``,
which coincides with the signed pair-partition expansion used in tests.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite_e as npherme
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from .backend import kernels
from .errors import ContractViolation, ResourceLimitError

DENSE_ENTRY_BUDGET = 10**7


def he_eval(k: int, t):
    """Evaluate He_k at a scalar or array.

    The three-term recurrence is forward-stable for the orders used here
    (k <= 500); beyond that relative error in the oscillatory region grows
    roughly linearly in k and no accuracy claim is made.
    """
    if k < 0:
        raise ContractViolation("order must be non-negative")
    arr = np.asarray(t, dtype=np.float64)
    out = kernels.he_batch(k, np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def h_eval(k: int, t):
    """Evaluate the normalized polynomial h_k = He_k / sqrt(k!)."""
    if k < 0:
        raise ContractViolation("order must be non-negative")
    arr = np.asarray(t, dtype=np.float64)
    out = kernels.h_batch(k, np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def h_value_table(kmax: int, t: np.ndarray) -> np.ndarray:
    """All h_j(t) for j = 0..kmax; shape (kmax+1,) + t.shape."""
    arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    return kernels.h_table(kmax, arr.ravel()).reshape((kmax + 1,) + arr.shape)


@lru_cache(maxsize=None)
def he_monomial_coeffs(k: int) -> tuple:
    """Exact integer monomial coefficients of He_k, ascending order."""
    if k == 0:
        return (1,)
    if k == 1:
        return (0, 1)
    prev, cur = (1,), (0, 1)
    for j in range(1, k):
        nxt = [0] * (j + 2)
        for i, c in enumerate(cur):
            nxt[i + 1] += c
        for i, c in enumerate(prev):
            nxt[i] -= j * c
        prev, cur = cur, tuple(nxt)
    return cur


def gauss_hermite_nodes(n: int):
    """Nodes/weights integrating against the standard normal density.

    ``sum(w * f(x))`` approximates ``E_{t~N(0,1)}[f(t)]`` and is exact for
    polynomials of degree <= 2n - 1.
    """
    x, w = npherme.hermegauss(n)
    return x, w / math.sqrt(2.0 * math.pi)


@lru_cache(maxsize=None)
def _he_fraction_coeffs(k: int) -> tuple:
    """Monomial coefficients of He_k as exact Fractions (length k + 1)."""
    return tuple(Fraction(c) for c in he_monomial_coeffs(k))


@lru_cache(maxsize=None)
def _legendre_fraction_coeffs(j: int) -> tuple:
    """Monomial coefficients of the Legendre polynomial P_j, exact."""
    if j == 0:
        return (Fraction(1),)
    if j == 1:
        return (Fraction(0), Fraction(1))
    prev, cur = _legendre_fraction_coeffs(j - 2), _legendre_fraction_coeffs(j - 1)
    nxt = [Fraction(0)] * (j + 1)
    for i, c in enumerate(cur):
        nxt[i + 1] += Fraction(2 * j - 1, j) * c
    for i, c in enumerate(prev):
        nxt[i] -= Fraction(j - 1, j) * c
    return tuple(nxt)


def _scaled_legendre_fraction_coeffs(j: int, halfwidth: Fraction) -> tuple:
    """Monomial coefficients (in x) of P_j(x / halfwidth), exact."""
    return tuple(c / halfwidth**t for t, c in enumerate(_legendre_fraction_coeffs(j)))


# ---------------------------------------------------------------------------
# 1-D polynomials with interchangeable bases
# ---------------------------------------------------------------------------

_BASES = ("monomial", "hermite", "legendre")


@dataclass(frozen=True)
class Polynomial1D:
    """Polynomial with a tagged basis.

    basis:
        "monomial"  -- sum c_j x^j
        "hermite"   -- sum c_j He_j(x)  (probabilist convention)
        "legendre"  -- sum c_j P_j(x / halfwidth), Legendre on [-C, C]
    """

    basis: str
    coeffs: tuple
    halfwidth: float | None = None

    def __post_init__(self):
        if self.basis not in _BASES:
            raise ContractViolation(f"unknown basis {self.basis!r}")
        if self.basis == "legendre" and not (self.halfwidth and self.halfwidth > 0):
            raise ContractViolation("legendre basis requires a positive halfwidth")
        coeffs = tuple(float(c) for c in self.coeffs)
        if not all(math.isfinite(c) for c in coeffs):
            raise ContractViolation("coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return max(0, len(self.coeffs) - 1)

    def _as_numpy(self):
        if self.basis == "monomial":
            return nppoly.Polynomial(self.coeffs)
        if self.basis == "hermite":
            return npherme.HermiteE(self.coeffs)
        c = self.halfwidth
        return npleg.Legendre(self.coeffs, domain=[-c, c], window=[-1.0, 1.0])

    def __call__(self, x):
        return self._as_numpy()(x)

    def _monomial_fractions(self) -> list:
        """Exact monomial coefficients (input floats taken as exact rationals)."""
        coeffs = [Fraction(c) for c in self.coeffs]
        if self.basis == "monomial":
            return coeffs
        if self.basis == "hermite":
            basis_cols = [_he_fraction_coeffs(j) for j in range(len(coeffs))]
        else:
            basis_cols = [_scaled_legendre_fraction_coeffs(j, Fraction(self.halfwidth))
                          for j in range(len(coeffs))]
        out = [Fraction(0)] * len(coeffs)
        for j, cj in enumerate(coeffs):
            if cj:
                for t, entry in enumerate(basis_cols[j]):
                    out[t] += cj * entry
        return out

    def to_basis(self, basis: str, halfwidth: float | None = None) -> "Polynomial1D":
        """Change of basis, carried out in exact rational arithmetic so the
        only rounding is the final float conversion of each coefficient."""
        if basis not in _BASES:
            raise ContractViolation(f"unknown basis {basis!r}")
        mono = self._monomial_fractions()
        if basis == "monomial":
            return Polynomial1D("monomial", tuple(float(c) for c in mono))
        if basis == "hermite":
            cols = [_he_fraction_coeffs(j) for j in range(len(mono))]
            hw = None
        else:
            hw = halfwidth if halfwidth is not None else self.halfwidth
            if not (hw and hw > 0):
                raise ContractViolation("legendre conversion needs a halfwidth")
            cols = [_scaled_legendre_fraction_coeffs(j, Fraction(hw)) for j in range(len(mono))]
        # back-substitution against the upper-triangular basis matrix
        out = [Fraction(0)] * len(mono)
        residual = list(mono)
        for j in range(len(mono) - 1, -1, -1):
            out[j] = residual[j] / cols[j][j]
            if out[j]:
                for t in range(j + 1):
                    residual[t] -= out[j] * cols[j][t]
        return Polynomial1D(basis, tuple(float(c) for c in out), halfwidth=hw)

    def monomial_coeffs(self) -> np.ndarray:
        return np.asarray(self.to_basis("monomial").coeffs)

    def scaled(self, factor: float) -> "Polynomial1D":
        return Polynomial1D(self.basis, tuple(factor * c for c in self.coeffs), self.halfwidth)

    def moment_integral(self, t: int, halfwidth: float) -> float:
        """Exact integral of p(x) x^t over [-halfwidth, halfwidth]."""
        mono = self.monomial_coeffs()
        total = 0.0
        for j, c in enumerate(mono):
            if c == 0.0:
                continue
            power = j + t + 1
            if (j + t) % 2 == 0:
                total += c * 2.0 * halfwidth**power / power
        return total

    def sup_abs(self, halfwidth: float, grid: int = 4097) -> float:
        """sup |p| on [-halfwidth, halfwidth] via grid plus stationary points."""
        xs = np.linspace(-halfwidth, halfwidth, grid)
        best = float(np.max(np.abs(self(xs))))
        deriv = nppoly.Polynomial(self.monomial_coeffs()).deriv()
        roots = deriv.roots()
        real = roots[np.abs(roots.imag) < 1e-9].real
        inside = real[np.abs(real) <= halfwidth]
        if inside.size:
            best = max(best, float(np.max(np.abs(self(inside)))))
        return best


# ---------------------------------------------------------------------------
# Dense Hermite tensors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermiteTensor:
    """Dense order-k tensor over dimension m, stored as an (m,)*k array."""

    dim: int
    order: int
    entries: np.ndarray

    def __post_init__(self):
        expected = (self.dim,) * self.order
        if tuple(self.entries.shape) != expected:
            raise ContractViolation(
                f"entries shape {self.entries.shape} != {(self.dim,) * self.order}")


def _index_counts(m: int, k: int) -> tuple:
    """(counts, norms): per flat entry, coordinate multiplicities and the
    multinomial(k; counts)**-0.5 normalizer."""
    if k == 0:
        return np.zeros((1, m), dtype=np.int64), np.ones(1)
    idx = np.indices((m,) * k).reshape(k, -1)
    counts = np.zeros((idx.shape[1], m), dtype=np.int64)
    for coord in range(m):
        counts[:, coord] = np.sum(idx == coord, axis=0)
    log_multinomial = math.lgamma(k + 1) - np.sum(
        [np.vectorize(math.lgamma)(counts[:, c] + 1.0) for c in range(m)], axis=0)
    return counts, np.exp(-0.5 * log_multinomial)


@lru_cache(maxsize=64)
def _cached_index_counts(m: int, k: int):
    return _index_counts(m, k)


def hermite_tensor(m: int, k: int, x) -> HermiteTensor:
    """Order-k Hermite tensor evaluated at x in R^m (dense storage)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != m:
        raise ContractViolation(f"x has length {x.size}, expected {m}")
    if m**k > DENSE_ENTRY_BUDGET:
        raise ResourceLimitError(f"m**k = {m**k} exceeds the dense budget {DENSE_ENTRY_BUDGET}")
    if k == 0:
        return HermiteTensor(m, 0, np.asarray(1.0))
    counts, norms = _cached_index_counts(m, k)
    tab = h_value_table(k, x)  # (k+1, m)
    prods = np.ones(counts.shape[0])
    for coord in range(m):
        prods *= tab[counts[:, coord], coord]
    return HermiteTensor(m, k, (norms * prods).reshape((m,) * k))


def hermite_tensor_norm(x, k: int) -> float:
    """||H_k(x)||_2 without dense storage.

    Expands the squared norm as a sum over multiplicity vectors
    (j_1, ..., j_m) with sum k of prod_l h_{j_l}(x_l)^2; the multinomial
    normalizer of each entry cancels against the number of index tuples
    sharing the multiplicity vector.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    m = x.size
    tab = h_value_table(k, x) ** 2  # (k+1, m)
    total = _composition_sum(tab, m - 1, k)
    return math.sqrt(total)


def _composition_sum(sq_tab: np.ndarray, coord: int, remaining: int) -> float:
    if coord == 0:
        return float(sq_tab[remaining, 0])
    return sum(
        float(sq_tab[j, coord]) * _composition_sum(sq_tab, coord - 1, remaining - j)
        for j in range(remaining + 1))


def apply_linear(b: np.ndarray, tensor: HermiteTensor) -> HermiteTensor:
    """Contract every index of `tensor` with the rows-orthonormal matrix b.

    For b of shape (m, n) with b b^T = I_m and tensor over dimension n, the
    result is the order-k tensor over dimension m whose pairing with H_k
    matches evaluating H_k at b x.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[1] != tensor.dim:
        raise ContractViolation("matrix shape incompatible with tensor dimension")
    gram_err = np.max(np.abs(b @ b.T - np.eye(b.shape[0])))
    if gram_err > 1e-10:
        raise ContractViolation(f"rows not orthonormal (max |bb^T - I| = {gram_err:.3e})")
    m = b.shape[0]
    if m**tensor.order > DENSE_ENTRY_BUDGET:
        raise ResourceLimitError("contracted tensor exceeds the dense budget")
    if tensor.order == 0:
        return HermiteTensor(m, 0, np.asarray(tensor.entries))
    out = tensor.entries
    for _ in range(tensor.order):
        # contract the leading axis; the new axis lands last, so after k
        # applications the axis order is restored
        out = np.tensordot(out, b, axes=([0], [1]))
    return HermiteTensor(m, tensor.order, out)


def tensor_inner(s: HermiteTensor, t: HermiteTensor) -> float:
    if (s.dim, s.order) != (t.dim, t.order):
        raise ContractViolation("tensor shape mismatch")
    return float(np.sum(np.asarray(s.entries, dtype=np.float64)
                        * np.asarray(t.entries, dtype=np.float64)))


def tensor_norm(t: HermiteTensor) -> float:
    return math.sqrt(tensor_inner(t, t))


def batch_tensor_inner(coeff: np.ndarray, k: int, x: np.ndarray) -> np.ndarray:
    """<A, H_k(x_s)> for every row x_s of x; A is a dense (m,)*k array."""
    coeff = np.asarray(coeff, dtype=np.float64)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    m = x.shape[1]
    if k == 0:
        return np.full(x.shape[0], float(coeff))
    counts, norms = _cached_index_counts(m, k)
    return kernels.sym_inner_batch(coeff.ravel(), counts, norms, x, k)


def symmetrize(arr: np.ndarray) -> np.ndarray:
    """Average of an order-k array over all axis permutations."""
    import itertools
    k = arr.ndim
    acc = np.zeros_like(arr, dtype=np.float64)
    perms = list(itertools.permutations(range(k)))
    for perm in perms:
        acc += np.transpose(arr, perm)
    return acc / len(perms)
