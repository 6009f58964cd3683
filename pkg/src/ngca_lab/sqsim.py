"""Statistical-query oracle simulation, the single-query radial distinguisher,
the ridge Fourier-decomposition identity check, concentration experiments, and
the hypothesis-testing game runner.

Exact query expectations are the backbone: ridge queries reduce to 1-D
smoothed means of their profile, and radial Hermite queries reduce through the
binomial shift identity He_k(x + y) = sum_l C(k, l) x^{k-l} He_l(y) to hidden
moments of the law times central chi-squared moments.  Every clip is accounted
for by an explicitly integrated tail term.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.stats import chi2 as chi2_dist

from .backend import derive_rng, kernels
from .dist import (Planted, Univariate, planted_ridge_expectation, sample_univariate,
                   uni_hermite_coeff, uni_moment, univariate_cos_expectation)
from .errors import BudgetError, ConfigurationError, ContractViolation
from .hermite import he_eval, he_monomial_coeffs
from .profiles import CosProfile, PolyProfile
from .subspace import sample_frame


# ---------------------------------------------------------------------------
# instances and queries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NullInstance:
    """The no-signal hypothesis: a standard Gaussian on R^n."""

    n: int


@dataclass(frozen=True)
class RidgeQuery:
    """q(x) = phi(<u, x>) for a unit direction u and a 1-D profile phi."""

    direction: np.ndarray
    profile: object
    qid: str = "ridge"

    def __post_init__(self):
        u = np.asarray(self.direction, dtype=np.float64).ravel()
        if abs(np.linalg.norm(u) - 1.0) > 1e-9:
            raise ContractViolation("ridge direction must be a unit vector")
        object.__setattr__(self, "direction", u)


@dataclass(frozen=True)
class RadialHermiteQuery:
    """q(x) = He_k(u(x)), u(x) = (||x||^2 - n)/sqrt(n), zeroed outside
    |u| <= clip_level when a clip is set."""

    order: int
    clip_level: float | None = None
    qid: str = "radial"

    def __post_init__(self):
        if self.order < 0:
            raise ContractViolation("order must be non-negative")
        if self.clip_level is not None and self.clip_level <= 0:
            raise ContractViolation("clip level must be positive")


def clipped_polynomial_query(direction, coeffs, clip=( -1.0, 1.0), qid="clipped-poly"):
    """Ridge query with a value-clipped polynomial profile."""
    return RidgeQuery(direction, PolyProfile(tuple(coeffs), clip=tuple(clip)), qid=qid)


# ---------------------------------------------------------------------------
# chi-squared moment machinery
# ---------------------------------------------------------------------------

def chi2_central_moments(dof: int, imax: int) -> np.ndarray:
    """Central moments of chi2(dof) up to order imax, built from cumulants
    kappa_j = 2^{j-1} (j-1)! dof (all-positive recursion, no cancellation)."""
    mu = np.zeros(imax + 1)
    mu[0] = 1.0
    kappa = [0.0, 0.0] + [2.0 ** (j - 1) * math.factorial(j - 1) * dof
                          for j in range(2, imax + 1)]
    for r in range(2, imax + 1):
        mu[r] = sum(math.comb(r - 1, j - 1) * kappa[j] * mu[r - j]
                    for j in range(2, r + 1))
    return mu


def _standardized_hermite_mean(k: int, dof: int, n: int) -> float:
    """E[He_k(T)] for T = (Y - dof)/sqrt(n), Y ~ chi2(dof)."""
    mu = chi2_central_moments(dof, k)
    coeffs = he_monomial_coeffs(k)
    return float(sum(c * mu[i] / n ** (i / 2.0) for i, c in enumerate(coeffs) if c))


def _hidden_square_moments(law: Univariate, k: int, n: int) -> np.ndarray:
    """E[((z^2 - 1)/sqrt(n))^j] for j = 0..k under the hidden law."""
    out = np.empty(k + 1)
    for j in range(k + 1):
        acc = sum(math.comb(j, i) * (-1.0) ** (j - i) * uni_moment(law, 2 * i)
                  for i in range(j + 1))
        out[j] = acc / n ** (j / 2.0)
    return out


def radial_unclipped_null(k: int, n: int) -> float:
    """E[He_k((S - n)/sqrt(n))], S ~ chi2(n)."""
    return _standardized_hermite_mean(k, n, n)


def radial_unclipped_planted(k: int, n: int, law: Univariate) -> float:
    """Exact planted expectation of the unclipped radial Hermite query.

    ||x||^2 = z^2 + Y with Y ~ chi2(n-1) independent of the hidden value z;
    the shift identity splits He_k((z^2-1)/sqrt(n) + (Y-(n-1))/sqrt(n)) into
    hidden-square moments times central chi-squared Hermite means.
    """
    s_mom = _hidden_square_moments(law, k, n)
    total = 0.0
    for ell in range(k + 1):
        total += math.comb(k, ell) * s_mom[k - ell] * _standardized_hermite_mean(ell, n - 1, n)
    return total


def _radial_tail_null(k: int, n: int, clip: float) -> float:
    """E[He_k(u) 1(|u| > clip)] under the null radial law."""
    def integrand(s):
        u = (s - n) / math.sqrt(n)
        return he_eval(k, u) * chi2_dist.pdf(s, n)

    upper, _ = quad(integrand, n + math.sqrt(n) * clip, np.inf, epsabs=1e-13, limit=300)
    lo_cut = n - math.sqrt(n) * clip
    lower = 0.0
    if lo_cut > 0:
        lower, _ = quad(integrand, 0.0, lo_cut, epsabs=1e-13, limit=300)
    return upper + lower


def _radial_tail_planted_at(k: int, n: int, clip: float, z: float) -> float:
    dof = n - 1

    def integrand(y):
        u = (z * z + y - n) / math.sqrt(n)
        return he_eval(k, u) * chi2_dist.pdf(y, dof)

    hi_cut = n + math.sqrt(n) * clip - z * z
    upper = 0.0
    if hi_cut < chi2_dist.isf(1e-16, dof):
        upper, _ = quad(integrand, max(0.0, hi_cut), np.inf, epsabs=1e-13, limit=300)
    lo_cut = n - math.sqrt(n) * clip - z * z
    lower = 0.0
    if lo_cut > 0:
        lower, _ = quad(integrand, 0.0, lo_cut, epsabs=1e-13, limit=300)
    return upper + lower


def _radial_tail_planted(k: int, n: int, clip: float, law: Univariate) -> float:
    total = 0.0
    for a in law.atoms:
        total += a.mass * _radial_tail_planted_at(k, n, clip, a.loc)
    lo, hi = law.effective_support()
    if (law.gaussians or law.patches) and hi > lo:
        def integrand(z):
            return float(law.continuous_pdf(np.asarray(z))) * _radial_tail_planted_at(k, n, clip, z)

        pieces = sorted({lo, hi, *[b for b in law.boundary_points() if lo < b < hi]})
        for left, right in zip(pieces[:-1], pieces[1:]):
            val, _ = quad(integrand, left, right, epsabs=1e-11, limit=200)
            total += val
    return total


def radial_clip_correction(query: RadialHermiteQuery, instance) -> float:
    """E[q_unclipped] - E[q_clipped] under the instance's law (signed)."""
    if query.clip_level is None:
        return 0.0
    if isinstance(instance, NullInstance):
        return _radial_tail_null(query.order, instance.n, query.clip_level)
    law = _require_scalar_hidden(instance)
    return _radial_tail_planted(query.order, instance.n, query.clip_level, law)


def _require_scalar_hidden(planted: Planted) -> Univariate:
    if not isinstance(planted, Planted):
        raise ContractViolation("expected a planted instance")
    if planted.m != 1 or not isinstance(planted.law, Univariate):
        raise ContractViolation("radial closed forms need a one-dimensional hidden law")
    return planted.law


# ---------------------------------------------------------------------------
# exact query values
# ---------------------------------------------------------------------------

def query_value(query, instance) -> float:
    """Exact expectation of the query under the instance (absolute error
    within 1e-7; closed forms wherever the structure allows)."""
    if isinstance(query, RidgeQuery):
        if isinstance(instance, NullInstance):
            return float(np.asarray(query.profile.gauss_mean(0.0, 1.0)))
        if isinstance(instance, Planted):
            return planted_ridge_expectation(instance, query.profile, query.direction)
        raise ContractViolation(f"unsupported instance {type(instance).__name__}")
    if isinstance(query, RadialHermiteQuery):
        if isinstance(instance, NullInstance):
            base = radial_unclipped_null(query.order, instance.n)
        elif isinstance(instance, Planted):
            law = _require_scalar_hidden(instance)
            base = radial_unclipped_planted(query.order, instance.n, law)
        else:
            raise ContractViolation(f"unsupported instance {type(instance).__name__}")
        return base - radial_clip_correction(query, instance)
    raise ContractViolation(f"unsupported query {type(query).__name__}")


def query_gap(query, planted: Planted) -> float:
    """E_planted[q] - E_null[q]."""
    return query_value(query, planted) - query_value(query, NullInstance(planted.n))


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleConfig:
    tolerance: float
    mode: str = "honest-exact"  # honest-exact | honest-mc | adversarial-null
    samples: int = 0
    seed: int = 0
    budget_policy: str = "strict"  # strict: raise when 4 sigma cannot meet tau

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ContractViolation("tolerance must be positive")
        if self.mode not in ("honest-exact", "honest-mc", "adversarial-null"):
            raise ContractViolation(f"unknown oracle mode {self.mode!r}")
        if self.mode == "honest-mc" and self.samples < 1:
            raise ContractViolation("honest-mc needs a positive sample count")
        if self.budget_policy not in ("strict", "warn"):
            raise ContractViolation("budget_policy must be 'strict' or 'warn'")


class OracleAnswer(float):
    """Float answer annotated with Monte Carlo metadata when applicable."""

    stderr: float = 0.0
    samples: int = 0
    budget_ok: bool = True

    def __new__(cls, value, stderr=0.0, samples=0, budget_ok=True):
        obj = super().__new__(cls, value)
        obj.stderr = float(stderr)
        obj.samples = int(samples)
        obj.budget_ok = bool(budget_ok)
        return obj


def _query_half_range(query) -> float | None:
    if isinstance(query, RidgeQuery):
        bounds = query.profile.value_bounds()
        if bounds is None:
            return None
        return 0.5 * (bounds[1] - bounds[0])
    if isinstance(query, RadialHermiteQuery):
        if query.clip_level is None:
            return None
        grid = np.linspace(-query.clip_level, query.clip_level, 4097)
        vals = he_eval(query.order, grid)
        return 0.5 * (float(vals.max()) - float(vals.min()))
    return None


def sample_query_values(query, instance, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw `count` evaluations of the query under the instance by sampling
    its 1-D sufficient statistic (the projection for ridge queries, the
    squared norm for radial ones); distributionally identical to evaluating
    on ambient samples."""
    if isinstance(query, RidgeQuery):
        if isinstance(instance, NullInstance):
            t = rng.standard_normal(count)
        else:
            law = _require_scalar_hidden(instance)
            rho = float(np.clip(query.direction @ instance.frame[:, 0], -1.0, 1.0))
            s = math.sqrt(max(0.0, 1.0 - rho * rho))
            t = rho * sample_univariate(law, rng, count) + s * rng.standard_normal(count)
        return np.asarray(query.profile.evaluate(t), dtype=np.float64)
    if isinstance(query, RadialHermiteQuery):
        if isinstance(instance, NullInstance):
            s = rng.chisquare(instance.n, count)
            n = instance.n
        else:
            law = _require_scalar_hidden(instance)
            z = sample_univariate(law, rng, count)
            n = instance.n
            s = z * z + rng.chisquare(n - 1, count)
        u = (s - n) / math.sqrt(n)
        clip = -1.0 if query.clip_level is None else float(query.clip_level)
        return kernels.clipped_he_batch(query.order, u, clip)
    raise ContractViolation(f"unsupported query {type(query).__name__}")


def stat_oracle(query, config: OracleConfig, instance, query_index: int = 0) -> OracleAnswer:
    """One STAT(tau) oracle answer for the query against the instance.

    honest-exact returns the exact expectation (always within tau).
    honest-mc returns a seeded sample mean with its standard error; the
    4-sigma budget check uses the query's value range when bounded and the
    empirical deviation otherwise, raising BudgetError under the strict
    policy and only recording the shortfall under "warn".
    adversarial-null answers the null expectation whenever that is a legal
    STAT(tau) answer for the planted law.
    """
    if config.mode == "honest-exact":
        return OracleAnswer(query_value(query, instance))
    if config.mode == "adversarial-null":
        answer, _ = adversarial_oracle(query, config.tolerance, instance)
        return OracleAnswer(answer)
    rng = derive_rng(config.seed, query_index)
    half = _query_half_range(query)
    budget_ok = True
    if half is not None and 4.0 * half / math.sqrt(config.samples) > config.tolerance:
        budget_ok = False
        if config.budget_policy == "strict":
            raise BudgetError(
                f"{config.samples} samples cannot certify tolerance {config.tolerance} "
                f"at 4 sigma for a query of half-range {half:.3g}")
    vals = sample_query_values(query, instance, rng, config.samples)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(config.samples))
    if half is None and 4.0 * stderr > config.tolerance:
        budget_ok = False
        if config.budget_policy == "strict":
            raise BudgetError(
                f"empirical 4 sigma {4.0 * stderr:.3g} exceeds tolerance {config.tolerance}")
    return OracleAnswer(mean, stderr=stderr, samples=config.samples, budget_ok=budget_ok)


def adversarial_oracle(query, tolerance: float, planted: Planted):
    """The lower-bound oracle: answer the null expectation whenever it is a
    legal STAT(tolerance) answer against the planted law, flagging detection
    otherwise (in which case the true planted value is returned)."""
    null_value = query_value(query, NullInstance(planted.n))
    planted_value = query_value(query, planted)
    if abs(planted_value - null_value) <= tolerance:
        return null_value, False
    return planted_value, True


def make_oracle(config: OracleConfig, instance):
    """Bind a config and an instance into a query -> answer callable that
    numbers queries for deterministic replay."""
    counter = {"i": 0}

    def ask(query):
        idx = counter["i"]
        counter["i"] += 1
        if config.mode == "adversarial-null":
            answer, _ = adversarial_oracle(query, config.tolerance, instance)
            return OracleAnswer(answer)
        return stat_oracle(query, config, instance, query_index=idx)

    return ask


# ---------------------------------------------------------------------------
# the single-query radial distinguisher
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Decision:
    verdict: str        # "H0" | "H1"
    statistic: float
    threshold: float
    center: float


def find_clip_level(n: int, d: int, planted: Planted,
                    coarse=tuple(np.arange(4.0, 64.1, 2.0))) -> float:
    """Smallest clip level whose tail correction stays below
    n^{-(d+2)/4} / 8 under both the null and the planted law."""
    k = (d + 2) // 2
    budget = n ** (-(d + 2) / 4.0) / 8.0

    def ok(m):
        if abs(_radial_tail_null(k, n, m)) > budget:
            return False
        return abs(_radial_tail_planted(k, n, m, _require_scalar_hidden(planted))) <= budget

    feasible = None
    for m in coarse:
        if ok(m):
            feasible = m
            break
    if feasible is None:
        raise ConfigurationError("no admissible clip level up to 64")
    m = feasible
    while m - 0.5 >= coarse[0] - 2.0 and ok(m - 0.5):
        m -= 0.5
    return m


def radial_distinguisher(oracle, n: int, d: int, clip_level: float,
                         check_planted: Planted | None = None) -> Decision:
    """Single-query test: ask for the clipped radial Hermite statistic of
    order (d+2)/2 and declare signal when the answer sits at least
    n^{-(d+2)/4}/2 away from the exact null center.

    The raw statistic has a nonzero null mean (already 1 at order 2, since the
    chi-squared variance is 2n), so the decision is centered at the exactly
    computed null expectation of the clipped query.
    """
    if d <= 0 or d % 2 != 0:
        raise ContractViolation("d must be a positive even integer")
    k = (d + 2) // 2
    budget = n ** (-(d + 2) / 4.0) / 8.0
    query = RadialHermiteQuery(k, clip_level, qid=f"radial-he{k}")
    null_corr = _radial_tail_null(k, n, clip_level)
    if abs(null_corr) > budget:
        raise ConfigurationError(
            f"null clip correction {null_corr:.3e} exceeds {budget:.3e}; increase the clip level")
    if check_planted is not None:
        pl_corr = _radial_tail_planted(k, n, clip_level, _require_scalar_hidden(check_planted))
        if abs(pl_corr) > budget:
            raise ConfigurationError(
                f"planted clip correction {pl_corr:.3e} exceeds {budget:.3e}; "
                "increase the clip level")
    center = query_value(query, NullInstance(n))
    answer = oracle(query)
    threshold = n ** (-(d + 2) / 4.0) / 2.0
    verdict = "H1" if abs(float(answer) - center) >= threshold else "H0"
    return Decision(verdict, float(answer), threshold, center)


def distinguisher_policy(n: int, d: int, clip_level: float):
    """The radial distinguisher wrapped as a game policy."""
    k = (d + 2) // 2
    query = RadialHermiteQuery(k, clip_level, qid=f"radial-he{k}")
    center = query_value(query, NullInstance(n))
    threshold = n ** (-(d + 2) / 4.0) / 2.0

    def policy(step, entries):
        if step == 0:
            return query
        answer = entries[-1].answer
        verdict = "H1" if abs(answer - center) >= threshold else "H0"
        return Decision(verdict, answer, threshold, center)

    return policy


# ---------------------------------------------------------------------------
# Fourier decomposition identity for polynomial ridge queries
# ---------------------------------------------------------------------------

def fourier_identity_check(law: Univariate, v: np.ndarray, direction: np.ndarray,
                           poly_coeffs) -> float:
    """|direct planted expectation - Hermite-coefficient expansion| for a
    polynomial ridge query against a bounded-support hidden law.

    For f(x) = p(<u, x>) of degree L the expansion truncates exactly:
    E[f] = sum_{k<=L} (E_law[h_k]) (E_N[p h_k]) rho^k with rho = <u, v>.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    u = np.asarray(direction, dtype=np.float64).ravel()
    planted = Planted(v.size, v[:, None], law)
    profile = PolyProfile(tuple(poly_coeffs))
    lhs = planted_ridge_expectation(planted, profile, u)
    herm = np.polynomial.hermite_e.poly2herme(np.asarray(poly_coeffs, dtype=np.float64))
    rho = float(u @ v)
    rhs = 0.0
    for k, b in enumerate(herm):
        if b == 0.0:
            continue
        c_k = b * math.sqrt(math.factorial(k))  # E_N[p h_k]
        a_k = 1.0 if k == 0 else uni_hermite_coeff(law, k)
        rhs += a_k * c_k * rho**k
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# concentration experiment
# ---------------------------------------------------------------------------

def ridge_cosine_battery(count: int, n: int, seed: int, omega_range=(0.5, 3.0)):
    """Battery of bounded cosine ridge queries with fixed Haar directions."""
    queries = []
    for i in range(count):
        rng = derive_rng(seed, 10**6 + i)
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        omega = rng.uniform(*omega_range)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        queries.append(RidgeQuery(u, CosProfile(omega, phase), qid=f"cos{i:03d}"))
    return queries


@dataclass
class ConcentrationReport:
    n: int
    d: int
    tau: float
    reps: int
    query_ids: list
    gaps: np.ndarray          # (reps, n_queries)
    exceedance_rate: float
    median_gap: float
    quantiles: tuple          # (q25, q50, q75, max)

    def rows(self):
        for r in range(self.reps):
            for qi, qid in enumerate(self.query_ids):
                gap = float(self.gaps[r, qi])
                yield (self.n, self.d, qid, r, gap, self.tau, int(gap > self.tau))


def concentration_experiment(n: int, d: int, law: Univariate, queries, tau: float,
                             reps: int, seed: int) -> ConcentrationReport:
    """Exact planted-minus-null gaps of a bounded ridge battery over Haar
    hidden directions; reports the exceedance frequency of {gap > tau} and
    gap quantiles."""
    frames = [sample_frame(n, 1, derive_rng(seed, r)).matrix[:, 0] for r in range(reps)]
    frames = np.stack(frames)  # (reps, n)
    gaps = np.empty((reps, len(queries)))
    for qi, query in enumerate(queries):
        if not isinstance(query, RidgeQuery):
            raise ContractViolation("concentration batteries are ridge-only")
        rho = np.clip(frames @ query.direction, -1.0, 1.0)
        prof = query.profile
        if isinstance(prof, CosProfile):
            planted_vals = (np.exp(-0.5 * prof.omega**2 * (1.0 - rho**2))
                            * univariate_cos_expectation(law, prof.omega * rho, prof.phase))
            null_val = math.cos(prof.phase) * math.exp(-0.5 * prof.omega**2)
            gaps[:, qi] = np.abs(planted_vals - null_val)
        else:
            null_val = float(np.asarray(prof.gauss_mean(0.0, 1.0)))
            for r in range(reps):
                planted = Planted(n, frames[r][:, None], law)
                gaps[r, qi] = abs(
                    planted_ridge_expectation(planted, prof, query.direction) - null_val)
    flat = gaps.ravel()
    return ConcentrationReport(
        n=n, d=d, tau=tau, reps=reps, query_ids=[q.qid for q in queries], gaps=gaps,
        exceedance_rate=float(np.mean(flat > tau)),
        median_gap=float(np.median(flat)),
        quantiles=(float(np.percentile(flat, 25)), float(np.median(flat)),
                   float(np.percentile(flat, 75)), float(flat.max())),
    )


# ---------------------------------------------------------------------------
# game runner
# ---------------------------------------------------------------------------

@dataclass
class TranscriptEntry:
    index: int
    qid: str
    answer: float
    stderr: float
    exact_null: float
    exact_planted: float
    gap: float
    mode: str


@dataclass
class Transcript:
    mode: str
    tolerance: float
    seed: int
    hypothesis: str
    max_queries: int
    entries: list = field(default_factory=list)
    decision: Decision | None = None

    def to_dict(self):
        return {
            "mode": self.mode,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "hypothesis": self.hypothesis,
            "max_queries": self.max_queries,
            "entries": [vars(e) for e in self.entries],
            "decision": None if self.decision is None else vars(self.decision),
        }


def game_runner(policy, config: OracleConfig, played, reference: Planted,
                max_queries: int, hypothesis: str = "") -> Transcript:
    """Run a query-emitting policy against an oracle bound to `played`.

    Each entry records the oracle answer plus the exact value under both
    hypotheses (the null, and the `reference` planted construction).  The
    policy is called as policy(step, entries) and must return a Query until it
    returns a Decision; exceeding max_queries raises BudgetError.  Replays
    with identical (config, seed) are deterministic.
    """
    transcript = Transcript(config.mode, config.tolerance, config.seed, hypothesis, max_queries)
    ask = make_oracle(config, played)
    for step in range(max_queries + 1):
        move = policy(step, transcript.entries)
        if isinstance(move, Decision):
            transcript.decision = move
            return transcript
        if step == max_queries:
            break
        answer = ask(move)
        exact_null = query_value(move, NullInstance(reference.n))
        exact_planted = query_value(move, reference)
        transcript.entries.append(TranscriptEntry(
            index=step, qid=getattr(move, "qid", "q"), answer=float(answer),
            stderr=getattr(answer, "stderr", 0.0), exact_null=exact_null,
            exact_planted=exact_planted, gap=exact_planted - exact_null,
            mode=config.mode))
    raise BudgetError(f"policy exceeded the {max_queries}-query budget")
