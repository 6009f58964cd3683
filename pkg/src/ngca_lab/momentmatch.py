"""Constructors for moment-matched distributions via windowed moment systems.

The workhorse is :func:`solve_correction`: given targets ``a_0..a_d`` it finds
the unique polynomial ``p`` of degree at most d with
``int_{-C}^{C} p(x) x^t dx = a_t``.  The monomial Gram matrix of this system is
Hilbert-like and numerically unusable past d ~ 8, so the solve runs in a
Legendre basis scaled to the window, where the constraint matrix is triangular
with comfortably sized diagonal; conditioning stays manageable through d = 16.

On top of it sit three instance constructors, each producing a law whose first
d raw moments equal the standard Gaussian's:

* :func:`spike_instance` -- symmetric mass spikes at +-sqrt(n) plus a
  polynomial correction on [-1, 1] (the near-optimal detection instance).
* :func:`zero_atom_instance` -- an atom at zero plus a corrected Gaussian bulk
  (anti-concentration detection).
* :func:`shifted_mixture_instance` -- an alpha-weighted shifted Gaussian plus a
  corrected bulk whose density stays between 0 and twice the Gaussian's
  (list-decodable mean estimation).
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .dist import Atom, GaussianComponent, Patch, Univariate, uni_hermite_coeff, uni_moment
from .errors import ContractViolation, IllConditionedError, InfeasibleError, LabError
from .hermite import Polynomial1D, _legendre_fraction_coeffs
from .profiles import _SQRT2PI

CONDITION_LIMIT = 1e12
RESIDUAL_LIMIT = 1e-9


@dataclass(frozen=True)
class MomentTargets:
    halfwidth: float
    degree: int
    targets: tuple

    def __post_init__(self):
        if self.halfwidth <= 0:
            raise ContractViolation("halfwidth must be positive")
        if len(self.targets) != self.degree + 1:
            raise ContractViolation("need degree + 1 targets")
        if not all(math.isfinite(t) for t in self.targets):
            raise ContractViolation("targets must be finite")
        object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))


@dataclass(frozen=True)
class SolveReport:
    poly: Polynomial1D
    max_residual: float
    sup_abs: float
    condition: float


@lru_cache(maxsize=None)
def _unit_moment_matrix(d: int) -> tuple:
    """Exact w[t][j] = int_{-1}^{1} u^t P_j(u) du as Fractions (lower triangular)."""
    rows = []
    for t in range(d + 1):
        row = []
        for j in range(d + 1):
            if j > t or (t - j) % 2 == 1:
                row.append(Fraction(0))
                continue
            total = Fraction(0)
            for s, cs in enumerate(_legendre_fraction_coeffs(j)):
                if cs and (t + s) % 2 == 0:
                    total += cs * Fraction(2, t + s + 1)
            row.append(total)
        rows.append(tuple(row))
    return tuple(rows)


def solve_correction(targets: MomentTargets, constraint_order=None) -> SolveReport:
    """Unique degree-<=d polynomial matching the windowed moment targets.

    The system decouples by parity, so the even and odd constraint blocks are
    solved separately; zero odd targets therefore give exactly zero odd
    coefficients.  `constraint_order` permutes the constraint list before
    assembly (the solution of the nonsingular system is order-independent).
    """
    d, c = targets.degree, targets.halfwidth
    if d > 16:
        raise ContractViolation("degree beyond 16 exceeds the double-precision budget")
    order = list(range(d + 1)) if constraint_order is None else list(constraint_order)
    if sorted(order) != list(range(d + 1)):
        raise ContractViolation("constraint_order must permute 0..d")
    w = _unit_moment_matrix(d)
    cf = Fraction(c)
    # row t of the window system is C^{t+1} * (unit-window row t); equilibrate
    # by that factor so conditioning reflects the unit-window geometry only
    rhs = {t: Fraction(targets.targets[t]) / cf ** (t + 1) for t in order}
    worst_condition = 0.0
    for parity in (0, 1):
        rows = [t for t in range(parity, d + 1, 2)]
        if not rows:
            continue
        block = np.array([[float(w[t][j]) for j in rows] for t in rows])
        worst_condition = max(worst_condition, float(np.linalg.cond(block)))
    if worst_condition > CONDITION_LIMIT:
        raise IllConditionedError(
            f"parity-block condition {worst_condition:.3e} exceeds {CONDITION_LIMIT:.0e}",
            condition=worst_condition)
    # each parity block is lower triangular in (t, j): exact forward
    # substitution in rational arithmetic, rounded to float once at the end
    exact = [Fraction(0)] * (d + 1)
    for t in range(d + 1):
        acc = rhs[t]
        for j in range(t % 2, t, 2):
            if w[t][j] and exact[j]:
                acc -= w[t][j] * exact[j]
        exact[t] = acc / w[t][t]
    poly = Polynomial1D("legendre", tuple(float(x) for x in exact), halfwidth=c)
    residual = max(abs(poly.moment_integral(t, c) - targets.targets[t])
                   for t in range(d + 1))
    if residual > RESIDUAL_LIMIT:
        raise IllConditionedError(
            f"solve residual {residual:.3e} exceeds {RESIDUAL_LIMIT:.0e}",
            condition=worst_condition)
    return SolveReport(poly, residual, poly.sup_abs(c), worst_condition)


def verify_moment_match(law: Univariate, d: int) -> float:
    """Largest deviation |E_law[f] - E_N[f]| over polynomials f of degree <= d
    with E_N[f^2] = 1.

    In the orthonormal Hermite basis the deviation is the inner product of the
    coefficient vector with (c_1, ..., c_d), c_k = E_law[h_k]; the supremum over
    unit coefficient vectors is the Euclidean norm of that vector, attained at
    the proportional direction.
    """
    if d < 0 or d > 32:
        raise ContractViolation("degree must be in 0..32")
    coeffs = np.array([uni_hermite_coeff(law, k) for k in range(1, d + 1)])
    return float(np.linalg.norm(coeffs))


# ---------------------------------------------------------------------------
# instance constructors
# ---------------------------------------------------------------------------

class ConstructedInstance(NamedTuple):
    law: Univariate
    solve: SolveReport
    params: dict


def _double_factorial(t: int) -> float:
    out = 1.0
    for j in range(1, t, 2):
        out *= j
    return out


def _gaussian_pdf(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT2PI


def _min_density(poly: Polynomial1D, gauss_scale: float, halfwidth: float,
                 grid: int = 10**4) -> float:
    """min over [-halfwidth, halfwidth] of gauss_scale * phi(x) + poly(x)."""
    xs = np.linspace(-halfwidth, halfwidth, grid)

    def f(x):
        return gauss_scale * float(_gaussian_pdf(np.asarray(x))) + float(poly(x))

    vals = gauss_scale * _gaussian_pdf(xs) + poly(xs)
    best = float(vals.min())
    arg = xs[int(np.argmin(vals))]
    h = 2.0 * halfwidth / (grid - 1)
    res = minimize_scalar(f, bounds=(max(-halfwidth, arg - 2 * h), min(halfwidth, arg + 2 * h)),
                          method="bounded", options={"xatol": 1e-12})
    return min(best, float(res.fun))


def _spike_feasible(n: int, d: int):
    eps = float(n) ** (-(d + 2) / 2.0)
    spike = math.sqrt(n)
    targets = [0.0] * (d + 1)
    for t in range(2, d + 1, 2):
        targets[t] = 2.0 * eps * (_double_factorial(t) - spike**t)
    report = solve_correction(MomentTargets(1.0, d, tuple(targets)))
    min_dens = _min_density(report.poly, 1.0 - 2.0 * eps, 1.0)
    return min_dens, report, eps, spike


def spike_instance(n: int, d: int) -> ConstructedInstance:
    """Mass eps at +-sqrt(n), Gaussian bulk, and a correction patch on [-1, 1]
    matching the first d Gaussian moments exactly (eps = n^{-(d+2)/2}).

    Raises InfeasibleError when the corrected density goes negative at the
    requested n, reporting the minimum feasible n located by doubling then
    bisecting.
    """
    if d <= 0 or d % 2 != 0:
        raise ContractViolation("d must be a positive even integer")
    if n <= 0:
        raise ContractViolation("n must be positive")
    min_dens, report, eps, spike = _spike_feasible(n, d)
    if min_dens < -1e-12:
        hi = n
        while True:
            hi *= 2
            if hi > 2**24:
                raise InfeasibleError("no feasible dimension found below 2**24",
                                      requested_n=n)
            if _spike_feasible(hi, d)[0] >= -1e-12:
                break
        lo = max(n, hi // 2)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _spike_feasible(mid, d)[0] >= -1e-12:
                hi = mid
            else:
                lo = mid
        raise InfeasibleError(
            f"corrected density is negative at n={n} (min {min_dens:.3e}); "
            f"minimum feasible n for d={d} is {hi}",
            requested_n=n, min_feasible_n=hi, min_density=min_dens)
    mono = tuple(report.poly.monomial_coeffs())
    law = Univariate(
        atoms=(Atom(-spike, eps), Atom(spike, eps)),
        gaussians=(GaussianComponent(0.0, 1.0, 1.0 - 2.0 * eps),),
        patches=(Patch(1.0, Polynomial1D("monomial", mono)),),
    ).validate()
    for t in range(1, d + 1):
        want = _double_factorial(t) if t % 2 == 0 else 0.0
        got = uni_moment(law, t)
        if abs(got - want) > 1e-8:
            raise LabError(f"moment {t} check failed: {got} vs {want}")
    return ConstructedInstance(law, report, {"epsilon": eps, "spike": spike, "n": n, "d": d})


def _zero_atom_solve(d: int, beta: float) -> SolveReport:
    targets = [0.0] * (d + 1)
    for i in range(2, d + 1, 2):
        targets[i] = beta * _double_factorial(i)
    return solve_correction(MomentTargets(1.0, d, tuple(targets)))


def zero_atom_instance(d: int, alpha: float | None = None,
                       sup_limit: float = 0.1) -> tuple:
    """Atom at zero with the largest (or a given) weight alpha, the rest a
    corrected Gaussian bulk matching d Gaussian moments.

    The correction scales linearly in alpha/(1-alpha), so feasibility of the
    sup bound is monotone in alpha and the maximize mode bisects to 1e-6.
    Returns (alpha, instance).
    """
    if d <= 0 or d > 16:
        raise ContractViolation("d must be in 1..16")

    def sup_at(a: float) -> float:
        return _zero_atom_solve(d, a / (1.0 - a)).sup_abs

    if alpha is None:
        lo, hi = 0.0, 0.5 - 1e-9
        if sup_at(hi) <= sup_limit:
            alpha = hi
        else:
            while hi - lo > 1e-6:
                mid = 0.5 * (lo + hi)
                if sup_at(mid) <= sup_limit:
                    lo = mid
                else:
                    hi = mid
            alpha = lo
    report = _zero_atom_solve(d, alpha / (1.0 - alpha))
    if report.sup_abs > sup_limit + 1e-12:
        raise InfeasibleError(
            f"correction sup {report.sup_abs:.4f} exceeds {sup_limit} at alpha={alpha}",
            achieved_sup=report.sup_abs, alpha=alpha)
    mono = tuple((1.0 - alpha) * c for c in report.poly.monomial_coeffs())
    law = Univariate(
        atoms=(Atom(0.0, alpha),),
        gaussians=(GaussianComponent(0.0, 1.0, 1.0 - alpha),),
        patches=(Patch(1.0, Polynomial1D("monomial", mono)),),
    ).validate()
    inst = ConstructedInstance(law, report, {"alpha": alpha, "d": d})
    return alpha, inst


def _shifted_solve(d: int, beta: float, mu: float, halfwidth: float) -> SolveReport:
    from .dist import gaussian_raw_moment
    targets = [0.0] * (d + 1)
    for i in range(1, d + 1):
        gauss_i = _double_factorial(i) if i % 2 == 0 else 0.0
        targets[i] = beta * (gauss_i - gaussian_raw_moment(mu, 1.0, i))
    return solve_correction(MomentTargets(halfwidth, d, tuple(targets)))


def shifted_mixture_instance(d: int, alpha: float, halfwidth: float = 1.0) -> tuple:
    """alpha-weighted N(mu, 1) plus a corrected bulk, with mu pushed as far as
    the pointwise band 0 <= N + p <= 2N on the window allows.

    Returns (mu, instance); params record the achieved mu * alpha^(1/d).
    """
    if d <= 0 or d > 16:
        raise ContractViolation("d must be in 1..16")
    if not 0.0 < alpha < 0.5:
        raise ContractViolation("alpha must be in (0, 1/2)")
    beta = alpha / (1.0 - alpha)
    xs = np.linspace(-halfwidth, halfwidth, 4097)
    base = _gaussian_pdf(xs)

    def feasible(mu: float) -> bool:
        try:
            rep = _shifted_solve(d, beta, mu, halfwidth)
        except IllConditionedError:
            return False
        return bool(np.all(np.abs(rep.poly(xs)) <= base))

    hi = 1.0
    while feasible(hi):
        hi *= 2.0
        if hi > 64.0:
            break
    lo = 0.0
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    mu = lo
    if mu < 0.1:
        raise InfeasibleError(f"no feasible shift >= 0.1 at alpha={alpha}, d={d}",
                              alpha=alpha, d=d, achieved_mu=mu)
    report = _shifted_solve(d, beta, mu, halfwidth)
    mono = tuple((1.0 - alpha) * c for c in report.poly.monomial_coeffs())
    law = Univariate(
        gaussians=(GaussianComponent(mu, 1.0, alpha), GaussianComponent(0.0, 1.0, 1.0 - alpha)),
        patches=(Patch(halfwidth, Polynomial1D("monomial", mono)),),
    ).validate()
    inst = ConstructedInstance(law, report, {
        "alpha": alpha, "d": d, "mu": mu, "scaling": mu * alpha ** (1.0 / d)})
    return mu, inst
