"""Haar-random orthonormal frames and correlation-moment calculus.

The central scalar is ||V^T u|| for a Haar frame V and a fixed unit vector u:
its square is Beta(m/2, (n-m)/2), so even moments are exact Beta-function
ratios.  Monte Carlo twins of the exact values, the low-rank projected-tensor
moment inequality, spherical-cap measures, and the log-log decay experiment
all live here.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, betaln

from .backend import derive_rng, derived_seed, worker_map
from .errors import ContractViolation, ResourceLimitError

DENSE_PROJECTION_BUDGET = 10**5


@dataclass(frozen=True)
class OrthonormalFrame:
    n: int
    m: int
    matrix: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.matrix, dtype=np.float64)
        if v.shape != (self.n, self.m):
            raise ContractViolation("matrix shape must be (n, m)")
        err = np.max(np.abs(v.T @ v - np.eye(self.m)))
        if err > 1e-10:
            raise ContractViolation(f"columns not orthonormal (max error {err:.3e})")
        object.__setattr__(self, "matrix", v)


def _haar_from_gaussian(g: np.ndarray) -> np.ndarray:
    """QR of a Gaussian matrix with the R diagonal forced positive.

    The sign fix makes the factorization unique, which is exactly what turns
    numpy's QR into Haar measure on the Stiefel manifold.
    """
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs = np.where(signs == 0.0, 1.0, signs)
    return q * signs[..., None, :]


def sample_frame(n: int, m: int, rng: np.random.Generator) -> OrthonormalFrame:
    """Haar-distributed n x m orthonormal frame."""
    if not 1 <= m < n:
        raise ContractViolation("need 1 <= m < n")
    return OrthonormalFrame(n, m, _haar_from_gaussian(rng.standard_normal((n, m))))


def _first_row_norms(n: int, m: int, reps: int, master_seed: int, power: int = 1,
                     offset: int = 0, chunk: int = 8192) -> np.ndarray:
    """||V_r^T e_1||**power for reps Haar frames, replicate r seeded from
    (master_seed, offset + r)."""
    out = np.empty(reps)
    for lo in range(0, reps, chunk):
        hi = min(reps, lo + chunk)

        def draw(r):
            return derive_rng(master_seed, offset + r).standard_normal((n, m))

        gs = np.stack(worker_map(draw, range(lo, hi)))
        qs = _haar_from_gaussian(gs)
        out[lo:hi] = np.linalg.norm(qs[:, 0, :], axis=1) ** power
    return out


def correlation_moment_exact(n: int, m: int, k: int) -> float:
    """E[||V^T u||^k] over Haar frames, for even k: the Beta(m/2, (n-m)/2)
    moment of order k/2, as a Beta-function ratio via log-gamma."""
    if k % 2 != 0 or k < 0:
        raise ContractViolation("k must be a non-negative even integer")
    if not 1 <= m < n:
        raise ContractViolation("need 1 <= m < n")
    if k == 0:
        return 1.0
    a, b = m / 2.0, (n - m) / 2.0
    return float(math.exp(betaln(a + k / 2.0, b) - betaln(a, b)))


class MomentEstimate(float):
    """Monte Carlo mean carrying its standard error."""

    stderr: float

    def __new__(cls, mean, stderr):
        obj = super().__new__(cls, mean)
        obj.stderr = float(stderr)
        return obj


def correlation_moments_mc(n: int, m: int, ks, reps: int, seed: int) -> dict:
    """Monte Carlo estimates of E[||V^T u||^k] for several orders k from one
    shared set of Haar frames (u = e_1, justified by rotation invariance)."""
    if reps < 100:
        raise ContractViolation("at least 100 replicates required")
    base = _first_row_norms(n, m, reps, seed)
    out = {}
    for k in ks:
        if k == 0:
            out[k] = MomentEstimate(1.0, 0.0)
            continue
        vals = base**k
        out[k] = MomentEstimate(float(vals.mean()),
                                float(vals.std(ddof=1) / math.sqrt(reps)))
    return out


def correlation_moment_mc(n: int, m: int, k: int, reps: int, seed: int) -> MomentEstimate:
    """Monte Carlo estimate of E[||V^T u||^k]; mean with standard error."""
    return correlation_moments_mc(n, m, (k,), reps, seed)[k]


# ---------------------------------------------------------------------------
# projected coefficient-tensor norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RidgeTensor:
    """Rank-one coefficient tensor c * u^{tensor k}."""

    scale: float
    direction: np.ndarray
    order: int

    def __post_init__(self):
        u = np.asarray(self.direction, dtype=np.float64).ravel()
        if abs(np.linalg.norm(u) - 1.0) > 1e-9:
            raise ContractViolation("ridge direction must be a unit vector")
        object.__setattr__(self, "direction", u)


def _contract_all_axes(tensor: np.ndarray, vt: np.ndarray, order: int) -> np.ndarray:
    out = tensor
    for _ in range(order):
        out = np.tensordot(out, vt, axes=([0], [1]))
    return out


def projected_coeff_norm(frame: OrthonormalFrame, spec) -> float:
    """||(V^T)^{tensor k} T||_2 for a ridge spec (closed form) or a dense
    order-k array over the ambient dimension."""
    v = frame.matrix
    if isinstance(spec, RidgeTensor):
        proj = float(np.linalg.norm(v.T @ spec.direction))
        return abs(spec.scale) * proj ** spec.order
    tensor = np.asarray(spec, dtype=np.float64)
    order = tensor.ndim
    if tensor.size == 0 or order == 0:
        return float(abs(tensor))
    if tensor.size > DENSE_PROJECTION_BUDGET:
        raise ResourceLimitError(
            f"dense tensor with {tensor.size} entries exceeds {DENSE_PROJECTION_BUDGET}")
    return float(np.linalg.norm(_contract_all_axes(tensor, v.T, order)))


@dataclass(frozen=True)
class LowRankMomentReport:
    mc_mean: float
    mc_stderr: float
    bound: float
    tensor_norm: float
    satisfied: bool


def low_rank_moment_check(n: int, m: int, k: int, a: int, tensor, reps: int,
                          seed: int) -> LowRankMomentReport:
    """Monte Carlo check of E[||(V^T)^{tensor k} T||^a] against the scalar
    correlation-moment bound E[||V^T u||^{a k / 2}] ||T||^a (a even).

    Returns both sides; `satisfied` allows 3 standard errors of slack.
    """
    if a % 2 != 0 or a <= 0:
        raise ContractViolation("a must be a positive even integer")
    if reps < 10**4:
        raise ContractViolation("at least 1e4 replicates required")
    tensor = np.asarray(tensor, dtype=np.float64)
    t_norm = float(np.linalg.norm(tensor))
    vals = np.empty(reps)
    for r in range(reps):
        frame = sample_frame(n, m, derive_rng(seed, r))
        vals[r] = projected_coeff_norm(frame, tensor) ** a
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(reps))
    bound = correlation_moment_exact(n, m, (a * k) // 2) * t_norm**a
    return LowRankMomentReport(mean, stderr, bound, t_norm, mean <= bound + 3.0 * stderr)


def spherical_cap_ratio(n: int, polar_angle: float) -> float:
    """Fraction of the unit sphere within polar angle of a pole: the
    regularized incomplete Beta value I_{sin^2 angle}((n-1)/2, 1/2)."""
    if n < 2:
        raise ContractViolation("n must be at least 2")
    if not 0.0 < polar_angle <= math.pi / 2.0:
        raise ContractViolation("polar angle must lie in (0, pi/2]")
    x = math.sin(polar_angle) ** 2
    return float(betainc((n - 1) / 2.0, 0.5, x))


# ---------------------------------------------------------------------------
# decay experiment
# ---------------------------------------------------------------------------

@dataclass
class DecayStats:
    n_grid: tuple
    m: int
    k_list: tuple
    reps: int
    master_seed: int
    values: dict = field(default_factory=dict)     # (n, k) -> np.ndarray of reps
    medians: dict = field(default_factory=dict)    # (n, k) -> float
    quartiles: dict = field(default_factory=dict)  # (n, k) -> (q1, q3)
    slopes: dict = field(default_factory=dict)     # k -> fitted d log median / d log n

    def rows(self):
        """CSV rows: n, m, k, replicate, seed, value."""
        for ni, n in enumerate(self.n_grid):
            for k in self.k_list:
                vals = self.values[(n, k)]
                for r in range(self.reps):
                    yield (n, self.m, k, r,
                           derived_seed(self.master_seed, ni * self.reps + r),
                           float(vals[r]))


def decay_experiment(n_grid, m: int, k_list, reps: int, seed: int) -> DecayStats:
    """Replicated ||V^T e_1||^k over Haar frames per ambient dimension, with
    per-(n, k) medians/quartiles and the fitted log-log slope per k."""
    n_grid = tuple(int(n) for n in n_grid)
    k_list = tuple(int(k) for k in k_list)
    stats = DecayStats(n_grid, m, k_list, reps, seed)
    for ni, n in enumerate(n_grid):
        # replicate index offset keeps streams distinct across the n grid
        base = _first_row_norms(n, m, reps, seed, offset=ni * reps)
        for k in k_list:
            vals = base**k
            stats.values[(n, k)] = vals
            stats.medians[(n, k)] = float(np.median(vals))
            stats.quartiles[(n, k)] = (float(np.percentile(vals, 25)),
                                       float(np.percentile(vals, 75)))
    if len(n_grid) >= 2:
        for k in k_list:
            logs_n = np.log([float(n) for n in n_grid])
            logs_med = np.log([stats.medians[(n, k)] for n in n_grid])
            stats.slopes[k] = float(np.polyfit(logs_n, logs_med, 1)[0])
    return stats
