"""Distribution data model and samplers.

A :class:`Univariate` law is a closed algebra of point atoms, (optionally
window-limited) Gaussian components, and bounded polynomial density patches.
Every construction used by the experiments lives inside this algebra, so raw
moments and Hermite coefficients are available in closed form, and the algebra
is closed under conditioning on a symmetric window ``[-B, B]``.

Also here: the s-spaced discrete Gaussian measure, hidden-direction planted
laws over R^n, exact ridge expectations under planted laws, the radial
chi-squared functional of the rotation-averaged planted law, and the periodic
labeled sampler.
"""

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad, simpson
from scipy.special import ndtr  # standard normal CDF, vectorized
from scipy.stats import chi2 as chi2_dist

from .errors import ContractViolation
from .hermite import Polynomial1D, h_eval, h_value_table
from .profiles import _SQRT2PI

_MASS_TOL = 1e-10
_DENSITY_GRID = 10**4


def _phi(z):
    return np.exp(-0.5 * np.square(z)) / _SQRT2PI


# ---------------------------------------------------------------------------
# components
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    loc: float
    mass: float

    def __post_init__(self):
        if self.mass < 0:
            raise ContractViolation("atom mass must be non-negative")


@dataclass(frozen=True)
class GaussianComponent:
    """Gaussian N(mean, var) restricted to |x| <= bound, carrying total mass
    `weight` (the restriction is renormalized, so the component always
    integrates to exactly `weight`)."""

    mean: float
    var: float
    weight: float
    bound: float = math.inf

    def __post_init__(self):
        if self.var <= 0:
            raise ContractViolation("variance must be positive")
        if self.weight < 0:
            raise ContractViolation("weight must be non-negative")
        if self.bound <= 0:
            raise ContractViolation("bound must be positive")

    @property
    def sd(self):
        return math.sqrt(self.var)

    def window_z(self, limit=None):
        """Probability of |x| <= min(bound, limit) under the unrestricted law."""
        lim = self.bound if limit is None else min(self.bound, limit)
        if math.isinf(lim):
            return 1.0
        lo = (-lim - self.mean) / self.sd
        hi = (lim - self.mean) / self.sd
        return float(ndtr(hi) - ndtr(lo))

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        vals = _phi((x - self.mean) / self.sd) / self.sd * self.weight / self.window_z()
        if math.isinf(self.bound):
            return vals
        return np.where(np.abs(x) <= self.bound, vals, 0.0)


@dataclass(frozen=True)
class Patch:
    """Density contribution poly(x) on |x| <= halfwidth (may be signed; only
    the total continuous density must be non-negative)."""

    halfwidth: float
    poly: Polynomial1D

    def __post_init__(self):
        if self.halfwidth <= 0:
            raise ContractViolation("patch halfwidth must be positive")

    def mass(self):
        return self.poly.moment_integral(0, self.halfwidth)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(np.abs(x) <= self.halfwidth, self.poly(x), 0.0)


# ---------------------------------------------------------------------------
# standard-normal window moments
# ---------------------------------------------------------------------------

def _std_window_moments(alpha: float, beta: float, tmax: int) -> np.ndarray:
    """m_i = int_alpha^beta z^i phi(z) dz for i = 0..tmax (recurrence; exact)."""
    out = np.empty(tmax + 1)
    pa = 0.0 if math.isinf(alpha) else math.exp(-0.5 * alpha * alpha) / _SQRT2PI
    pb = 0.0 if math.isinf(beta) else math.exp(-0.5 * beta * beta) / _SQRT2PI
    ca = 0.0 if alpha == -math.inf else float(ndtr(alpha))
    cb = 1.0 if beta == math.inf else float(ndtr(beta))
    out[0] = cb - ca
    if tmax >= 1:
        out[1] = pa - pb
    for i in range(2, tmax + 1):
        ta = 0.0 if math.isinf(alpha) else alpha ** (i - 1) * pa
        tb = 0.0 if math.isinf(beta) else beta ** (i - 1) * pb
        out[i] = (i - 1) * out[i - 2] + ta - tb
    return out


def gaussian_raw_moment(mean: float, var: float, t: int) -> float:
    """E[x^t] for N(mean, var), exact."""
    sd = math.sqrt(var)
    total = 0.0
    for i in range(0, t + 1, 2):
        dfact = 1.0
        for j in range(1, i, 2):
            dfact *= j
        total += math.comb(t, i) * dfact * sd**i * mean ** (t - i)
    return total


def gaussian_h_coeff(k: int, mean: float, var: float) -> float:
    """E[h_k(x)] for N(mean, var), from the Hermite generating function.

    E[He_k] = k! sum_j mean^{k-2j} ((var-1)/2)^j / (j! (k-2j)!); evaluated in
    log space so k up to 64 stays accurate.
    """
    if k == 0:
        return 1.0
    half = (var - 1.0) / 2.0
    if mean == 0.0 and half == 0.0:
        return 0.0
    logs, signs = [], []
    for j in range(k // 2 + 1):
        p = k - 2 * j
        if (mean == 0.0 and p > 0) or (half == 0.0 and j > 0):
            continue
        lg = 0.5 * math.lgamma(k + 1) - math.lgamma(j + 1) - math.lgamma(p + 1)
        sign = 1.0
        if p > 0:
            lg += p * math.log(abs(mean))
            if mean < 0 and p % 2 == 1:
                sign = -sign
        if j > 0:
            lg += j * math.log(abs(half))
            if half < 0 and j % 2 == 1:
                sign = -sign
        logs.append(lg)
        signs.append(sign)
    if not logs:
        return 0.0
    logs = np.asarray(logs)
    top = logs.max()
    return float(math.exp(top) * np.sum(np.asarray(signs) * np.exp(logs - top)))


def _truncated_gaussian_h_coeff(k: int, comp: GaussianComponent) -> float:
    """E[h_k(x)] over the window-limited component (per unit mass)."""
    sd = comp.sd
    alpha = (-comp.bound - comp.mean) / sd
    beta = (comp.bound - comp.mean) / sd
    z = comp.window_z()
    # window integrals of He_b against phi, normalized: Jhat_b = J_b / sqrt(b!)
    jhat = np.empty(k + 1)
    jhat[0] = float(ndtr(beta) - ndtr(alpha))
    if k >= 1:
        pa = math.exp(-0.5 * alpha * alpha) / _SQRT2PI
        pb = math.exp(-0.5 * beta * beta) / _SQRT2PI
        htab_a = h_value_table(max(0, k - 1), np.array([alpha]))[:, 0]
        htab_b = h_value_table(max(0, k - 1), np.array([beta]))[:, 0]
        for b in range(1, k + 1):
            jhat[b] = (htab_a[b - 1] * pa - htab_b[b - 1] * pb) / math.sqrt(b)
    total = 0.0
    for b in range(k + 1):
        kb = gaussian_h_coeff(k - b, comp.mean, comp.var)
        if kb == 0.0 and jhat[b] == 0.0:
            continue
        total += math.sqrt(math.comb(k, b)) * sd**b * kb * jhat[b]
    return total / z


# ---------------------------------------------------------------------------
# the univariate law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Univariate:
    atoms: tuple = ()
    gaussians: tuple = ()
    patches: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "gaussians", tuple(self.gaussians))
        object.__setattr__(self, "patches", tuple(self.patches))

    # -- structure -----------------------------------------------------------
    def total_mass(self) -> float:
        return (sum(a.mass for a in self.atoms)
                + sum(g.weight for g in self.gaussians)
                + sum(p.mass() for p in self.patches))

    def atom_mass(self) -> float:
        return sum(a.mass for a in self.atoms)

    def effective_support(self) -> tuple:
        lo, hi = 0.0, 0.0
        for a in self.atoms:
            lo, hi = min(lo, a.loc), max(hi, a.loc)
        for g in self.gaussians:
            reach = min(g.bound, abs(g.mean) + 12.0 * g.sd)
            lo, hi = min(lo, -reach), max(hi, reach)
        for p in self.patches:
            lo, hi = min(lo, -p.halfwidth), max(hi, p.halfwidth)
        return lo, hi

    def continuous_pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        total = np.zeros_like(x)
        for g in self.gaussians:
            total = total + g.pdf(x)
        for p in self.patches:
            total = total + p.pdf(x)
        return total

    def validate(self, mass_tol: float = _MASS_TOL, grid: int = _DENSITY_GRID):
        mass = self.total_mass()
        if abs(mass - 1.0) > mass_tol:
            raise ContractViolation(f"total mass {mass!r} is not 1 within {mass_tol}")
        lo, hi = self.effective_support()
        if hi > lo and (self.gaussians or self.patches):
            xs = np.linspace(lo, hi, grid)
            dens = self.continuous_pdf(xs)
            worst = float(dens.min())
            if worst < -1e-9:
                raise ContractViolation(f"continuous density dips to {worst:.3e}")
        return self

    def boundary_points(self) -> list:
        pts = set()
        for g in self.gaussians:
            if math.isfinite(g.bound):
                pts.update((-g.bound, g.bound))
        for p in self.patches:
            pts.update((-p.halfwidth, p.halfwidth))
        return sorted(pts)


def standard_gaussian() -> Univariate:
    return Univariate(gaussians=(GaussianComponent(0.0, 1.0, 1.0),))


def gaussian_law(mean: float, var: float = 1.0) -> Univariate:
    return Univariate(gaussians=(GaussianComponent(mean, var, 1.0),))


def point_mass(loc: float = 0.0) -> Univariate:
    return Univariate(atoms=(Atom(loc, 1.0),))


# -- moments and Hermite coefficients ---------------------------------------

def uni_moment(law: Univariate, t: int) -> float:
    """Exact raw moment E[x^t] (t <= 64 keeps double precision honest)."""
    if t < 0:
        raise ContractViolation("moment order must be non-negative")
    total = 0.0
    for a in law.atoms:
        total += a.mass * a.loc**t
    for g in law.gaussians:
        if math.isinf(g.bound):
            total += g.weight * gaussian_raw_moment(g.mean, g.var, t)
        else:
            alpha = (-g.bound - g.mean) / g.sd
            beta = (g.bound - g.mean) / g.sd
            m = _std_window_moments(alpha, beta, t)
            acc = sum(math.comb(t, i) * g.mean ** (t - i) * g.sd**i * m[i]
                      for i in range(t + 1))
            total += g.weight * acc / g.window_z()
    for p in law.patches:
        total += p.poly.moment_integral(t, p.halfwidth)
    return total


def uni_hermite_coeff(law: Univariate, k: int) -> float:
    """E[h_k(x)], assembled from per-component closed forms.

    The per-component route (recurrence for atoms and patch quadrature that is
    exact for polynomials, generating-function series for Gaussians, boundary
    terms for window-limited Gaussians) avoids the catastrophic cancellation
    the raw-moment expansion of h_k suffers for k beyond ~25.
    """
    if k < 0:
        raise ContractViolation("order must be non-negative")
    if k == 0:
        return law.total_mass()
    total = 0.0
    for a in law.atoms:
        total += a.mass * h_eval(k, a.loc)
    for g in law.gaussians:
        if math.isinf(g.bound):
            total += g.weight * gaussian_h_coeff(k, g.mean, g.var)
        else:
            total += g.weight * _truncated_gaussian_h_coeff(k, g)
    for p in law.patches:
        deg = p.poly.degree + k
        nodes, weights = np.polynomial.legendre.leggauss(deg // 2 + 2)
        xs = nodes * p.halfwidth
        total += p.halfwidth * float(np.sum(weights * p.poly(xs) * h_eval(k, xs)))
    return total


# -- pdf / sampling ----------------------------------------------------------

def uni_pdf(law: Univariate, x: float) -> float:
    """Density of the continuous part at x.  Atom locations are rejected
    (their masses are reported separately on the law)."""
    for a in law.atoms:
        if x == a.loc and a.mass > 0:
            raise ContractViolation(f"x = {x} is an atom location")
    return float(law.continuous_pdf(np.asarray(x)))


def _patch_env_height(p: Patch) -> float:
    xs = np.linspace(-p.halfwidth, p.halfwidth, 2049)
    return max(0.0, float(np.max(p.poly(xs)))) * (1.0 + 1e-12)


def sample_univariate(law: Univariate, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized exact sampler (atoms + rejection for the continuous part).

    The proposal stacks each Gaussian component (sampled exactly, with
    rejection into its window when bounded) and a uniform slab per patch at
    the patch's positive sup; the acceptance ratio is the true continuous
    density over the proposal envelope, which dominates it pointwise.
    """
    out = np.empty(size)
    atom_masses = np.array([a.mass for a in law.atoms])
    atom_locs = np.array([a.loc for a in law.atoms])
    envs = []  # (env mass, kind, component)
    for g in law.gaussians:
        envs.append((g.weight, "gauss", g))
    for p in law.patches:
        envs.append((_patch_env_height(p) * 2.0 * p.halfwidth, "patch", p))
    env_masses = np.array([e[0] for e in envs]) if envs else np.empty(0)
    total_atom = atom_masses.sum() if atom_masses.size else 0.0
    total_env = env_masses.sum() if env_masses.size else 0.0

    choose = rng.random(size) * (total_atom + (1.0 - total_atom))
    is_atom = choose < total_atom
    n_atoms = int(is_atom.sum())
    if n_atoms:
        which = rng.choice(atom_locs.size, size=n_atoms, p=atom_masses / total_atom)
        out[is_atom] = atom_locs[which]
    need = size - n_atoms
    if need == 0:
        return out
    if total_env == 0.0:
        raise ContractViolation("no continuous part to sample")

    def env_pdf(x):
        dens = np.zeros_like(x)
        for mass_e, kind, comp in envs:
            if kind == "gauss":
                dens += comp.pdf(x)
            else:
                h = mass_e / (2.0 * comp.halfwidth)
                dens += np.where(np.abs(x) <= comp.halfwidth, h, 0.0)
        return dens

    filled = 0
    buf = np.empty(need)
    p_env = env_masses / total_env
    while filled < need:
        batch = max(1024, 2 * (need - filled))
        which = rng.choice(len(envs), size=batch, p=p_env)
        xs = np.empty(batch)
        for idx, (mass_e, kind, comp) in enumerate(envs):
            sel = which == idx
            cnt = int(sel.sum())
            if cnt == 0:
                continue
            if kind == "gauss":
                draw = rng.normal(comp.mean, comp.sd, size=cnt)
                if math.isfinite(comp.bound):
                    bad = np.abs(draw) > comp.bound
                    while bad.any():
                        draw[bad] = rng.normal(comp.mean, comp.sd, size=int(bad.sum()))
                        bad = np.abs(draw) > comp.bound
                xs[sel] = draw
            else:
                xs[sel] = rng.uniform(-comp.halfwidth, comp.halfwidth, size=cnt)
        ratio = law.continuous_pdf(xs) / env_pdf(xs)
        accept = rng.random(batch) < ratio
        got = xs[accept]
        take = min(got.size, need - filled)
        buf[filled:filled + take] = got[:take]
        filled += take
    out[~is_atom] = buf
    return out


def uni_sample(law: Univariate, rng: np.random.Generator) -> float:
    return float(sample_univariate(law, rng, 1)[0])


# -- truncation, distances ---------------------------------------------------

class TruncationResult(NamedTuple):
    law: Univariate
    p_out: float


def tail_probability(law: Univariate, radius: float) -> float:
    """Pr[|x| > radius], exact per component."""
    total = 0.0
    for a in law.atoms:
        if abs(a.loc) > radius:
            total += a.mass
    for g in law.gaussians:
        total += g.weight * (1.0 - g.window_z(limit=radius) / g.window_z())
    for p in law.patches:
        if p.halfwidth > radius:
            total += p.mass() - p.poly.moment_integral(0, radius)
    return total


def truncate(law: Univariate, radius: float) -> TruncationResult:
    """Condition the law on [-radius, radius]; also returns the excluded mass."""
    if radius <= 0:
        raise ContractViolation("radius must be positive")
    p_out = tail_probability(law, radius)
    keep = 1.0 - p_out
    if keep < 1e-6:
        raise ContractViolation("mass inside the window below 1e-6; nothing to keep")
    scale = 1.0 / keep
    atoms = tuple(Atom(a.loc, a.mass * scale) for a in law.atoms if abs(a.loc) <= radius)
    gaussians = []
    for g in law.gaussians:
        new_bound = min(g.bound, radius)
        new_weight = g.weight * (g.window_z(limit=radius) / g.window_z()) * scale
        if new_weight > 0:
            gaussians.append(GaussianComponent(g.mean, g.var, new_weight, new_bound))
    patches = tuple(
        Patch(min(p.halfwidth, radius), p.poly.scaled(scale)) for p in law.patches)
    return TruncationResult(Univariate(atoms, tuple(gaussians), patches), p_out)


def tv_distance(a: Univariate, b: Univariate) -> float:
    """Total variation distance, adaptive quadrature on the continuous part
    (absolute error budget 1e-8) plus the exact atom part."""
    masses = {}
    for atom in a.atoms:
        masses[atom.loc] = masses.get(atom.loc, 0.0) + atom.mass
    for atom in b.atoms:
        masses[atom.loc] = masses.get(atom.loc, 0.0) - atom.mass
    atom_part = sum(abs(v) for v in masses.values())

    lo = min(a.effective_support()[0], b.effective_support()[0])
    hi = max(a.effective_support()[1], b.effective_support()[1])
    if hi <= lo:
        return 0.5 * atom_part
    breaks = sorted(set(a.boundary_points()) | set(b.boundary_points()))
    pts = [x for x in breaks if lo < x < hi]

    def integrand(x):
        return abs(float(a.continuous_pdf(np.asarray(x)) - b.continuous_pdf(np.asarray(x))))

    edges = [lo] + pts + [hi]
    cont_part = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        val, _ = quad(integrand, left, right, epsabs=1e-9, limit=400)
        cont_part += val
    return 0.5 * (atom_part + cont_part)


def chi_squared_vs_gaussian(law: Univariate) -> float:
    """chi^2(law, N(0,1)) = int f^2/phi - 1; +inf for a singular part or when
    the integral keeps growing as the integration window is extended."""
    if any(a.mass > 0 for a in law.atoms):
        return math.inf

    def integrand(x):
        f = float(law.continuous_pdf(np.asarray(x)))
        lw = -0.5 * x * x - 0.5 * math.log(2.0 * math.pi)
        log_ratio = 2.0 * math.log(abs(f)) - lw if f != 0.0 else -math.inf
        if log_ratio > 690.0:
            return 1e300
        return f * f * math.exp(-lw) if f != 0.0 else 0.0

    breaks = law.boundary_points()
    windows = [6.0, 8.0, 10.0, 13.0, 16.0, 20.0, 25.0, 30.0, 36.0]
    prev = None
    value = 0.0
    covered = 0.0
    for w in windows:
        pts = [x for x in breaks if covered < abs(x) < w]
        edges = sorted({covered, w, *[abs(x) for x in pts]})
        inc = 0.0
        for left, right in zip(edges[:-1], edges[1:]):
            vp, _ = quad(integrand, left, right, epsabs=1e-11, limit=400)
            vm, _ = quad(integrand, -right, -left, epsabs=1e-11, limit=400)
            inc += vp + vm
        value += inc
        covered = w
        if value > 1e12:
            return math.inf
        if prev is not None and inc <= max(1e-12, 1e-9 * value):
            return max(value - 1.0, 0.0)
        prev = value
    return math.inf


# ---------------------------------------------------------------------------
# discrete Gaussian measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteGaussianSpec:
    """Grid measure putting mass spacing*phi(j*spacing + offset) at each grid
    point inside the summation cutoff."""

    spacing: float
    offset: float = 0.0
    cutoff: float = 10.0

    def __post_init__(self):
        if self.spacing <= 0:
            raise ContractViolation("spacing must be positive")
        if self.cutoff < 8.0:
            raise ContractViolation("cutoff below 8 discards non-negligible mass")

    def points(self) -> np.ndarray:
        j_lo = math.ceil((-self.cutoff - self.offset) / self.spacing)
        j_hi = math.floor((self.cutoff - self.offset) / self.spacing)
        return np.arange(j_lo, j_hi + 1) * self.spacing + self.offset

    def masses(self) -> np.ndarray:
        pts = self.points()
        return self.spacing * _phi(pts)


def discrete_gaussian_total(spec: DiscreteGaussianSpec) -> float:
    return float(spec.masses().sum())


def discrete_gaussian_moment(spec: DiscreteGaussianSpec, k: int, rescaled: bool = True) -> float:
    pts = spec.points()
    total = float(np.sum(pts**k * spec.masses()))
    if rescaled:
        total /= discrete_gaussian_total(spec)
    return total


# ---------------------------------------------------------------------------
# planted hidden-direction laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductLaw:
    """Independent product of univariate laws (sampling-only hidden law for
    hidden dimension m > 1)."""

    laws: tuple

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cols = [sample_univariate(law, rng, size) for law in self.laws]
        return np.stack(cols, axis=1)

    @property
    def dim(self):
        return len(self.laws)


@dataclass(frozen=True)
class Planted:
    """Law on R^n equal to `law` inside the column span of `frame` and an
    independent standard Gaussian on the orthogonal complement."""

    n: int
    frame: np.ndarray
    law: object  # Univariate (m == 1) or ProductLaw

    def __post_init__(self):
        v = np.asarray(self.frame, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.n:
            raise ContractViolation("frame row count must equal the ambient dimension")
        gram_err = np.max(np.abs(v.T @ v - np.eye(v.shape[1])))
        if gram_err > 1e-10:
            raise ContractViolation(f"frame columns not orthonormal ({gram_err:.3e})")
        object.__setattr__(self, "frame", v)

    @property
    def m(self) -> int:
        return self.frame.shape[1]

    def hidden_sample(self, rng, size):
        if isinstance(self.law, Univariate):
            return sample_univariate(self.law, rng, size)[:, None]
        return self.law.sample(rng, size)


def planted_sample(planted: Planted, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw x = V t + (I - V V^T) g with t from the hidden law, g ~ N(0, I_n)."""
    count = 1 if size is None else size
    t = planted.hidden_sample(rng, count)
    g = rng.standard_normal((count, planted.n))
    v = planted.frame
    x = g - (g @ v) @ v.T + t @ v.T
    return x[0] if size is None else x


def planted_ridge_expectation(planted: Planted, profile, u: np.ndarray) -> float:
    """Exact E[phi(<u, x>)] under a hidden-direction law with m = 1.

    Writing rho = <u, v>, the projection is rho z + sqrt(1-rho^2) g with z from
    the hidden law and g standard normal.  Atoms and unbounded Gaussian
    components reduce to closed forms; windowed components and patches fall
    back to adaptive quadrature (absolute error budget 1e-7).
    """
    if planted.m != 1:
        raise ContractViolation("ridge expectations require a one-dimensional hidden law")
    if not isinstance(planted.law, Univariate):
        raise ContractViolation("hidden law must be a Univariate for exact evaluation")
    u = np.asarray(u, dtype=np.float64).ravel()
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ContractViolation("direction must be a unit vector")
    rho = float(np.clip(u @ planted.frame[:, 0], -1.0, 1.0))
    s = math.sqrt(max(0.0, 1.0 - rho * rho))
    law = planted.law
    total = 0.0
    for a in law.atoms:
        total += a.mass * float(np.asarray(profile.gauss_mean(rho * a.loc, s)))
    for g in law.gaussians:
        if math.isinf(g.bound):
            eff = math.sqrt(rho * rho * g.var + s * s)
            total += g.weight * float(np.asarray(profile.gauss_mean(rho * g.mean, eff)))
        else:
            z_norm = g.window_z()

            def integrand(z, comp=g):
                dens = math.exp(-0.5 * ((z - comp.mean) / comp.sd) ** 2) / (comp.sd * _SQRT2PI)
                return dens * float(np.asarray(profile.gauss_mean(rho * z, s)))

            lo = max(-g.bound, g.mean - 12.0 * g.sd)
            hi = min(g.bound, g.mean + 12.0 * g.sd)
            val, _ = quad(integrand, lo, hi, epsabs=1e-9, limit=300)
            total += g.weight * val / z_norm
    for p in law.patches:
        def integrand(z, patch=p):
            return float(patch.poly(z)) * float(np.asarray(profile.gauss_mean(rho * z, s)))

        val, _ = quad(integrand, -p.halfwidth, p.halfwidth, epsabs=1e-9, limit=300)
        total += val
    return total


def univariate_cos_expectation(law: Univariate, freq: np.ndarray, phase: float) -> np.ndarray:
    """E_z[cos(c z + phase)] for an array of frequencies c, exact per component
    (Gauss-Legendre on patches is converged to machine precision at the orders
    used here)."""
    freq = np.atleast_1d(np.asarray(freq, dtype=np.float64))
    total = np.zeros_like(freq)
    for a in law.atoms:
        total += a.mass * np.cos(freq * a.loc + phase)
    for g in law.gaussians:
        if math.isinf(g.bound):
            total += g.weight * np.cos(freq * g.mean + phase) * np.exp(-0.5 * g.var * freq**2)
        else:
            vals = np.empty_like(freq)
            for i, c in enumerate(freq):
                val, _ = quad(lambda z: float(g.pdf(np.asarray(z))) * math.cos(c * z + phase),
                              -g.bound, g.bound, epsabs=1e-12, limit=200)
                vals[i] = val
            total += vals
    for p in law.patches:
        nodes, weights = np.polynomial.legendre.leggauss(96)
        xs = nodes * p.halfwidth
        pv = p.poly(xs) * p.halfwidth
        total += np.sum(weights[None, :] * pv[None, :]
                        * np.cos(freq[:, None] * xs[None, :] + phase), axis=1)
    return total


# ---------------------------------------------------------------------------
# radial chi-squared of the rotation-averaged planted law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialChi2Report:
    value: float              # 1 + chi^2(D, N_n)
    chi2: float
    normalization_error: float
    refinement_change: float  # relative change under one grid doubling
    grid_points: int
    diverged: bool = False


def _radial_density_grid(n: int, m: int, law: Univariate, s_grid: np.ndarray,
                         u_nodes: int) -> np.ndarray:
    """Density of ||x||^2 under the rotation-averaged planted law on s_grid.

    ||x||^2 = z^2 + W with z from the hidden law and W ~ chi2(n-1): the m-1
    Gaussian hidden coordinates and the n-m orthogonal ones pool into a single
    chi-squared block regardless of m.
    """
    dof = n - 1
    dens = np.zeros_like(s_grid)
    for a in law.atoms:
        dens += a.mass * chi2_dist.pdf(s_grid - a.loc**2, dof)
    lo, hi = law.effective_support()
    reach = max(abs(lo), abs(hi))
    if (law.gaussians or law.patches) and reach > 0:
        nodes, weights = np.polynomial.legendre.leggauss(u_nodes)
        us = 0.5 * reach * (nodes + 1.0)
        ws = 0.5 * reach * weights
        f_sym = law.continuous_pdf(us) + law.continuous_pdf(-us)
        kernel = chi2_dist.pdf(s_grid[:, None] - us[None, :] ** 2, dof)
        dens += kernel @ (ws * f_sym)
    return dens


def chi2_averaged_planted(n: int, m: int, law: Univariate,
                          grid_points: int = 4096) -> RadialChi2Report:
    """1 + chi^2 between the rotation-averaged planted law and N(0, I_n),
    via the radial identity  integral of P(s)^2 / chi2_n(s) ds  where P is the
    density of ||x||^2.

    Divergence (a hidden law heavier than the ambient Gaussian, e.g. variance
    beyond 2) is detected by extending the radial range: a tail contribution
    still growing under a doubled range reports +inf with diagnostics.
    """
    if not 1 <= m < n:
        raise ContractViolation("need 1 <= m < n")
    lo, hi = law.effective_support()
    reach = max(abs(lo), abs(hi))
    base_s_max = n + reach**2 + 14.0 * math.sqrt(2.0 * n) + 20.0

    def evaluate(points: int, s_max: float) -> tuple:
        s_grid = np.linspace(1e-9, s_max, points)
        dens = _radial_density_grid(n, m, law, s_grid, u_nodes=max(200, points // 8))
        norm = float(simpson(dens, x=s_grid))
        base = chi2_dist.pdf(s_grid, n)
        ratio = np.where(base > 0, dens**2 / np.where(base > 0, base, 1.0), 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            ratio = np.nan_to_num(ratio, nan=0.0, posinf=1e280)
        return float(simpson(ratio, x=s_grid)), norm

    coarse, _ = evaluate(grid_points // 2, base_s_max)
    value, norm = evaluate(grid_points, base_s_max)
    extended, _ = evaluate(grid_points, 2.0 * base_s_max)
    change = abs(value - coarse) / max(abs(value), 1e-300)
    growth = abs(extended - value) / max(abs(value), 1e-300)
    if not math.isfinite(value) or value > 1e12 or growth > 0.01:
        return RadialChi2Report(math.inf, math.inf, abs(norm - 1.0), max(change, growth),
                                grid_points, diverged=True)
    return RadialChi2Report(value, value - 1.0, abs(norm - 1.0), change, grid_points)


# ---------------------------------------------------------------------------
# periodic labeled sampler
# ---------------------------------------------------------------------------

def periodic_label(dot: float, zeta: float, freq: float) -> float:
    return math.cos(2.0 * math.pi * (freq * dot + zeta))


def periodic_sample(n: int, w: np.ndarray, freq: float, noise_sd: float,
                    rng: np.random.Generator):
    """One labeled draw (x, y): x ~ N(0, I_n), y = cos(2 pi (freq <w,x> + zeta))."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if abs(np.linalg.norm(w) - 1.0) > 1e-9:
        raise ContractViolation("w must be a unit vector")
    x = rng.standard_normal(n)
    zeta = rng.normal(0.0, noise_sd) if noise_sd > 0 else 0.0
    return x, periodic_label(float(w @ x), zeta, freq)


def periodic_labels_batch(count: int, freq: float, noise_sd: float,
                          rng: np.random.Generator) -> np.ndarray:
    """Labels of `count` draws (projections only; <w, x> ~ N(0,1) for unit w)."""
    dots = rng.standard_normal(count)
    zetas = rng.normal(0.0, noise_sd, size=count) if noise_sd > 0 else 0.0
    return np.cos(2.0 * math.pi * (freq * dots + zetas))


# ---------------------------------------------------------------------------
# instance JSON schema
# ---------------------------------------------------------------------------

def univariate_to_dict(law: Univariate) -> dict:
    gauss = []
    for g in law.gaussians:
        entry = {"mean": g.mean, "var": g.var, "weight": g.weight}
        if math.isfinite(g.bound):
            entry["bound"] = g.bound
        gauss.append(entry)
    return {
        "atoms": [{"loc": a.loc, "mass": a.mass} for a in law.atoms],
        "gaussians": gauss,
        "patches": [{"C": p.halfwidth,
                     "coeffs_monomial": list(p.poly.monomial_coeffs())}
                    for p in law.patches],
    }


def univariate_from_dict(payload: dict) -> Univariate:
    atoms = tuple(Atom(d["loc"], d["mass"]) for d in payload.get("atoms", ()))
    gaussians = tuple(
        GaussianComponent(d["mean"], d["var"], d["weight"], d.get("bound", math.inf))
        for d in payload.get("gaussians", ()))
    patches = tuple(
        Patch(d["C"], Polynomial1D("monomial", tuple(d["coeffs_monomial"])))
        for d in payload.get("patches", ()))
    return Univariate(atoms, gaussians, patches)


def save_instance(law: Univariate, path) -> None:
    with open(path, "w") as fh:
        json.dump(univariate_to_dict(law), fh, indent=2)
        fh.write("\n")


def load_instance(path) -> Univariate:
    with open(path) as fh:
        return univariate_from_dict(json.load(fh))
