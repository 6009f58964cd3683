import math

import numpy as np
import pytest
from scipy.stats import beta as beta_dist
from scipy.stats import ks_2samp, kstest

from ngca_lab.backend import derive_rng
from ngca_lab.errors import ContractViolation, ResourceLimitError
from ngca_lab.subspace import (OrthonormalFrame, RidgeTensor,
                               correlation_moment_exact, correlation_moment_mc,
                               decay_experiment, low_rank_moment_check,
                               projected_coeff_norm, sample_frame, spherical_cap_ratio)


def test_frame_orthonormality():
    rng = derive_rng(0, 0)
    for n, m in ((5, 1), (20, 3), (50, 5)):
        v = sample_frame(n, m, rng).matrix
        assert np.max(np.abs(v.T @ v - np.eye(m))) <= 1e-10


def test_frame_contract():
    with pytest.raises(ContractViolation):
        sample_frame(3, 3, derive_rng(0, 0))
    with pytest.raises(ContractViolation):
        OrthonormalFrame(3, 2, np.ones((3, 2)))


def test_projection_second_moment_is_m_over_n():
    rng = derive_rng(1, 0)
    n, m, reps = 20, 3, 10**5
    u = np.zeros(n)
    u[0] = 1.0
    vals = np.array([np.linalg.norm(sample_frame(n, m, rng).matrix.T @ u) ** 2
                     for _ in range(reps // 10)])
    stderr = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - m / n) <= 4 * stderr


def test_projection_squared_is_beta_distributed():
    n, m = 20, 3
    rng = derive_rng(2, 0)
    vals = np.array([np.linalg.norm(sample_frame(n, m, rng).matrix[0]) ** 2
                     for _ in range(10**5)])
    assert kstest(vals, beta_dist(m / 2, (n - m) / 2).cdf).pvalue > 1e-3


def test_haar_invariance_under_rotation():
    # statistics of ||V^T u|| match those of (R V)^T u for a fixed rotation R
    n, m = 12, 2
    rng = derive_rng(3, 0)
    rot = np.linalg.qr(rng.standard_normal((n, n)))[0]
    u = np.zeros(n)
    u[0] = 1.0
    plain, rotated = [], []
    for _ in range(20000):
        v = sample_frame(n, m, rng).matrix
        plain.append(np.linalg.norm(v.T @ u))
        rotated.append(np.linalg.norm((rot @ v).T @ u))
    assert ks_2samp(plain, rotated).pvalue > 1e-3


def test_correlation_moment_exact_values():
    assert correlation_moment_exact(10, 4, 0) == 1.0
    assert correlation_moment_exact(2, 1, 2) == pytest.approx(0.5, rel=1e-12)
    assert correlation_moment_exact(4, 2, 4) == pytest.approx(1.0 / 3.0, rel=1e-12)
    for n, m in ((7, 2), (40, 5), (250, 3)):
        assert correlation_moment_exact(n, m, 2) == pytest.approx(m / n, rel=1e-12)
    with pytest.raises(ContractViolation):
        correlation_moment_exact(10, 2, 3)


def test_correlation_moment_mc_matches_exact():
    for n, m, k in ((20, 1, 2), (50, 3, 4), (100, 5, 8)):
        est = correlation_moment_mc(n, m, k, 20000, seed=17)
        exact = correlation_moment_exact(n, m, k)
        assert abs(float(est) - exact) <= 3 * est.stderr


def test_correlation_moment_mc_trivial_and_scaling():
    est0 = correlation_moment_mc(30, 2, 0, 1000, seed=5)
    assert float(est0) == 1.0 and est0.stderr == 0.0
    small = correlation_moment_mc(30, 2, 4, 10**3, seed=5)
    large = correlation_moment_mc(30, 2, 4, 10**5, seed=5)
    ratio = small.stderr / large.stderr
    assert abs(ratio - 10.0) / 10.0 < 0.2
    with pytest.raises(ContractViolation):
        correlation_moment_mc(10, 1, 2, 50, seed=0)


def test_projected_norm_ridge_closed_form():
    rng = derive_rng(4, 0)
    n, m = 9, 3
    frame = sample_frame(n, m, rng)
    inside = frame.matrix[:, 0]
    assert projected_coeff_norm(frame, RidgeTensor(1.0, inside, 3)) == pytest.approx(1.0)
    w = rng.standard_normal(n)
    w -= frame.matrix @ (frame.matrix.T @ w)
    w /= np.linalg.norm(w)
    assert projected_coeff_norm(frame, RidgeTensor(1.0, w, 2)) == pytest.approx(0.0, abs=1e-12)


def test_projected_norm_dense_matches_ridge():
    rng = derive_rng(5, 0)
    for n, k in ((5, 2), (8, 3)):
        frame = sample_frame(n, 2, rng)
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        scale = float(rng.normal())
        dense = scale * u
        for _ in range(k - 1):
            dense = np.multiply.outer(dense, u)
        got = projected_coeff_norm(frame, dense)
        want = projected_coeff_norm(frame, RidgeTensor(scale, u, k))
        assert got == pytest.approx(want, abs=1e-10)


def test_projected_norm_budget():
    frame = sample_frame(40, 2, derive_rng(6, 0))
    with pytest.raises(ResourceLimitError):
        projected_coeff_norm(frame, np.zeros((40, 40, 40, 40)))


def test_low_rank_moment_inequality_random_tensor():
    rng = derive_rng(7, 0)
    t = rng.standard_normal((6, 6))
    t = (t + t.T) / 2
    report = low_rank_moment_check(6, 2, 2, 2, t, reps=10**4, seed=7)
    assert report.satisfied
    assert report.mc_mean <= report.bound + 3 * report.mc_stderr


def test_low_rank_moment_ridge_saturates_scalar_reduction():
    # for T = u^{tensor k} the projected norm is exactly ||V^T u||^k, so the
    # a-th moment equals the scalar correlation moment of order a*k; the
    # stated bound (order a*k/2) then holds with room
    n, m, k, a = 8, 2, 2, 2
    u = np.zeros(n)
    u[0] = 1.0
    tensor = np.multiply.outer(u, u)
    report = low_rank_moment_check(n, m, k, a, tensor, reps=2 * 10**4, seed=11)
    exact_sat = correlation_moment_exact(n, m, a * k)
    assert abs(report.mc_mean - exact_sat) <= 3 * report.mc_stderr
    assert report.mc_mean <= report.bound
    zero = low_rank_moment_check(n, m, k, a, np.zeros((n,) * k), reps=10**4, seed=3)
    assert zero.mc_mean == 0.0 and zero.bound == 0.0


def test_spherical_cap_closed_forms():
    assert spherical_cap_ratio(7, math.pi / 2) == pytest.approx(1.0, rel=1e-12)
    assert spherical_cap_ratio(3, math.pi / 6) == pytest.approx(1 - math.sqrt(3) / 2, rel=1e-10)
    for phi in (0.3, 0.7, 1.2):
        assert spherical_cap_ratio(2, phi) == pytest.approx(2 * phi / math.pi, rel=1e-10)
    with pytest.raises(ContractViolation):
        spherical_cap_ratio(1, 0.5)


def test_spherical_cap_log_slope():
    phi = math.pi / 6
    ns = np.arange(20, 201, 10)
    logs = np.log([spherical_cap_ratio(int(n), phi) for n in ns])
    slope = np.polyfit(ns, logs, 1)[0]
    want = math.log(math.sin(phi))
    assert abs(slope - want) / abs(want) < 0.1


def test_decay_experiment_structure_and_monotonicity():
    stats = decay_experiment((50, 100, 200), 1, (0, 2, 4), reps=300, seed=7)
    assert np.allclose(stats.values[(100, 0)], 1.0)
    for k in (2, 4):
        meds = [stats.medians[(n, k)] for n in (50, 100, 200)]
        assert meds[0] > meds[1] > meds[2]
    rows = list(stats.rows())
    assert len(rows) == 3 * 3 * 300
    n0, m0, k0, rep0, seed0, val0 = rows[0]
    assert (n0, m0, k0, rep0) == (50, 1, 0, 0)


def test_decay_rows_reproducible_from_seed_column():
    stats = decay_experiment((50,), 1, (2,), reps=5, seed=21)
    row = next(stats.rows())
    seed_val = row[4]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=21, spawn_key=(0,))))
    first = np.random.SeedSequence(entropy=21, spawn_key=(0,)).generate_state(2, np.uint64)[0]
    assert int(first) == seed_val
