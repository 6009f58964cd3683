import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest

from ngca_lab.backend import derive_rng
from ngca_lab.dist import (Atom, DiscreteGaussianSpec, GaussianComponent, Patch, Planted,
                           ProductLaw, Univariate, chi2_averaged_planted,
                           chi_squared_vs_gaussian, discrete_gaussian_moment,
                           discrete_gaussian_total, gaussian_law, periodic_label,
                           periodic_labels_batch, periodic_sample, planted_ridge_expectation,
                           planted_sample, point_mass, sample_univariate, standard_gaussian,
                           tail_probability, truncate, tv_distance, uni_hermite_coeff,
                           uni_moment, uni_pdf, uni_sample, univariate_from_dict,
                           univariate_to_dict)
from ngca_lab.errors import ContractViolation
from ngca_lab.hermite import Polynomial1D, h_eval, he_monomial_coeffs
from ngca_lab.profiles import CosProfile, PolyProfile
from ngca_lab.subspace import sample_frame

SQRT2PI = math.sqrt(2.0 * math.pi)


def _mixture_battery():
    """Ten assorted laws exercising atoms, shifted/scaled Gaussians, and patches."""
    laws = [
        standard_gaussian(),
        gaussian_law(0.7),
        gaussian_law(-0.4, 1.5),
        point_mass(0.0),
        Univariate(atoms=(Atom(-1.0, 0.25), Atom(2.0, 0.25)),
                   gaussians=(GaussianComponent(0.0, 1.0, 0.5),)),
        Univariate(atoms=(Atom(4.0, 0.3),), gaussians=(GaussianComponent(0.5, 0.8, 0.7),)),
        Univariate(gaussians=(GaussianComponent(0.0, 1.0, 0.6),
                              GaussianComponent(1.0, 0.5, 0.4))),
        Univariate(gaussians=(GaussianComponent(0.0, 1.0, 1.0 - 2.0 / 30),),
                   patches=(Patch(1.5, Polynomial1D("monomial", (2.0 / 90, 0.0, 0.0))),)),
        Univariate(atoms=(Atom(0.5, 0.1),),
                   gaussians=(GaussianComponent(0.0, 1.2, 0.9 - 0.05),),
                   patches=(Patch(1.0, Polynomial1D("monomial", (0.025, 0.0))),)),
        Univariate(gaussians=(GaussianComponent(0.0, 1.0, 0.8, bound=3.0),
                              GaussianComponent(0.0, 2.0, 0.2)),),
    ]
    return [law.validate() for law in laws]


# ---------------------------------------------------------------------------
# moments and Hermite coefficients
# ---------------------------------------------------------------------------

def test_gaussian_moments():
    n01 = standard_gaussian()
    assert uni_moment(n01, 4) == pytest.approx(3.0, abs=1e-14)
    assert uni_moment(n01, 7) == 0.0
    assert uni_moment(point_mass(0.0), 3) == 0.0
    assert uni_moment(gaussian_law(2.0, 0.5), 2) == pytest.approx(4.5, abs=1e-12)


def test_moments_against_quadrature():
    for law in _mixture_battery():
        for t in (1, 2, 3, 6):
            lo, hi = law.effective_support()
            cont, _ = quad(lambda x: x**t * float(law.continuous_pdf(np.asarray(x))),
                           lo, hi, limit=400,
                           points=[p for p in law.boundary_points() if lo < p < hi] or None)
            atoms = sum(a.mass * a.loc**t for a in law.atoms)
            assert uni_moment(law, t) == pytest.approx(cont + atoms, abs=5e-9)


def test_hermite_coeff_basics():
    assert uni_hermite_coeff(standard_gaussian(), 3) == 0.0
    assert uni_hermite_coeff(point_mass(0.0), 2) == pytest.approx(-1 / math.sqrt(2))
    assert uni_hermite_coeff(gaussian_law(0.3), 1) == pytest.approx(0.3, abs=1e-14)
    # N(mu, 1): E[h_k] = mu^k / sqrt(k!)
    for k in range(8):
        want = 0.3**k / math.sqrt(math.factorial(k))
        assert uni_hermite_coeff(gaussian_law(0.3), k) == pytest.approx(want, rel=1e-12)


def test_hermite_coeff_monomial_route_small_orders():
    # independent route: expand h_k in monomials and push through raw moments
    for law in _mixture_battery():
        for k in range(1, 11):
            coeffs = he_monomial_coeffs(k)
            via_moments = sum(c * uni_moment(law, j) for j, c in enumerate(coeffs) if c)
            via_moments /= math.sqrt(math.factorial(k))
            assert uni_hermite_coeff(law, k) == pytest.approx(via_moments, abs=1e-9)


def test_truncated_gaussian_hermite_coeff_vs_quadrature():
    comp = GaussianComponent(0.4, 1.3, 1.0, bound=2.5)
    law = Univariate(gaussians=(comp,))
    for k in (1, 2, 5, 8):
        want, _ = quad(lambda x: h_eval(k, x) * float(comp.pdf(np.asarray(x))),
                       -2.5, 2.5, epsabs=1e-12, limit=300)
        assert uni_hermite_coeff(law, k) == pytest.approx(want, abs=1e-10)


# ---------------------------------------------------------------------------
# pdf and sampling
# ---------------------------------------------------------------------------

def test_pdf_and_atom_rejection():
    assert uni_pdf(standard_gaussian(), 0.0) == pytest.approx(1.0 / SQRT2PI)
    mix = Univariate(atoms=(Atom(1.0, 0.5),), gaussians=(GaussianComponent(0, 1, 0.5),))
    with pytest.raises(ContractViolation):
        uni_pdf(mix, 1.0)


def test_sampling_point_mass_and_mean():
    rng = derive_rng(0, 0)
    assert uni_sample(point_mass(0.0), rng) == 0.0
    draws = sample_univariate(gaussian_law(0.8), rng, 10**6)
    assert abs(draws.mean() - 0.8) < 4.0 / 1000.0


def test_sampling_matches_density_with_signed_patch():
    # law with a signed patch: histogram vs density
    patch = Polynomial1D("monomial", (0.05, 0.0, -0.15))
    mass = patch.moment_integral(0, 1.0)
    law = Univariate(gaussians=(GaussianComponent(0, 1, 1 - mass),),
                     patches=(Patch(1.0, patch),)).validate()
    rng = derive_rng(1, 0)
    draws = sample_univariate(law, rng, 200000)
    hist, edges = np.histogram(draws, bins=60, range=(-3, 3), density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    dens = law.continuous_pdf(centers)
    assert np.max(np.abs(hist - dens)) < 0.02


def test_mass_validation():
    with pytest.raises(ContractViolation):
        Univariate(atoms=(Atom(0.0, 0.5),)).validate()
    # mass is 1 but the density dips negative near the window edge
    with pytest.raises(ContractViolation):
        Univariate(gaussians=(GaussianComponent(0, 1, 2.2),),
                   patches=(Patch(2.0, Polynomial1D("monomial", (-0.3,))),)).validate()


# ---------------------------------------------------------------------------
# truncation / distances
# ---------------------------------------------------------------------------

def test_truncate_gaussian_wide_window():
    trunc, p_out = truncate(standard_gaussian(), 10.0)
    assert p_out < 1e-20
    assert uni_moment(trunc, 2) == pytest.approx(1.0, abs=1e-9)
    assert tv_distance(standard_gaussian(), trunc) < 1e-8


def test_truncate_removes_far_atom():
    mix = Univariate(atoms=(Atom(4.0, 0.3),), gaussians=(GaussianComponent(0, 1, 0.7),))
    trunc, p_out = truncate(mix, 2.0)
    assert not trunc.atoms
    assert p_out == pytest.approx(0.3 + 0.7 * 2 * (1 - 0.9772498680518208), rel=1e-6)
    assert trunc.total_mass() == pytest.approx(1.0, abs=1e-12)


def test_truncate_requires_mass_inside():
    with pytest.raises(ContractViolation):
        truncate(point_mass(5.0), 1.0)


def test_conditioning_identity_battery():
    # d_TV(A, A|window) equals the excluded mass, and the excluded mass obeys
    # the even-moment Markov bound
    for law in _mixture_battery():
        for radius in (1.25, 2.0, 3.5):
            if 1.0 - tail_probability(law, radius) < 1e-3:
                continue
            trunc, p_out = truncate(law, radius)
            assert tv_distance(law, trunc) == pytest.approx(p_out, abs=1e-8)
            for d in (2, 4, 6, 8):
                assert p_out <= uni_moment(law, d) / radius**d + 1e-12


def test_tv_examples():
    assert tv_distance(standard_gaussian(), standard_gaussian()) == pytest.approx(0.0, abs=1e-10)
    assert tv_distance(point_mass(0.0), point_mass(1.0)) == 1.0
    assert tv_distance(gaussian_law(0.0), gaussian_law(3.0)) == pytest.approx(
        2 * 0.9331927987311419 - 1, abs=1e-7)  # 2*Phi(mu/2) - 1


def test_chi_squared_closed_forms():
    assert chi_squared_vs_gaussian(standard_gaussian()) == pytest.approx(0.0, abs=1e-10)
    for mu in (0.3, 0.8):
        assert chi_squared_vs_gaussian(gaussian_law(mu)) == pytest.approx(
            math.exp(mu**2) - 1.0, rel=1e-8)
    mix = Univariate(atoms=(Atom(0.0, 0.5),), gaussians=(GaussianComponent(0, 1, 0.5),))
    assert chi_squared_vs_gaussian(mix) == math.inf


def test_chi_squared_divergence_detected():
    # var 2 is the boundary where the integrand stops decaying
    assert chi_squared_vs_gaussian(gaussian_law(0.0, 2.5)) == math.inf
    assert chi_squared_vs_gaussian(gaussian_law(0.0, 2.0)) == math.inf


# ---------------------------------------------------------------------------
# discrete Gaussian
# ---------------------------------------------------------------------------

def test_discrete_gaussian_symmetry_and_normalization():
    spec = DiscreteGaussianSpec(0.2, 0.0)
    assert discrete_gaussian_moment(spec, 1) == pytest.approx(0.0, abs=1e-15)
    assert discrete_gaussian_moment(spec, 0) == 1.0
    assert discrete_gaussian_moment(DiscreteGaussianSpec(0.1, 0.13), 2) == pytest.approx(
        1.0, abs=1e-3)


def test_discrete_gaussian_total_close_to_one():
    for s, theta in ((0.5, 0.0), (0.25, 0.13), (0.1, 0.5)):
        spec = DiscreteGaussianSpec(s, theta)
        assert abs(discrete_gaussian_total(spec) - 1.0) < math.exp(-spec.cutoff**2 / 4.0) + 1e-12


def test_discrete_gaussian_cutoff_contract():
    with pytest.raises(ContractViolation):
        DiscreteGaussianSpec(0.1, 0.0, cutoff=4.0)


def test_discrete_gaussian_moment_error_shrinks_with_spacing():
    # the true deviations sit far below double precision (exp(-2 pi^2/s^2)),
    # so the monotonicity is checked on an extended-precision evaluation of
    # the same sums with a cutoff wide enough not to mask the spacing effect
    from conftest import mp_discrete_gaussian_dev
    pytest.importorskip("mpmath")
    for k in range(1, 5):
        for theta in (0.0, 0.13, 0.5):
            devs = [mp_discrete_gaussian_dev(s, theta, k) for s in (0.5, 0.25, 0.1)]
            assert devs[0] >= devs[1] >= devs[2]
            if k % 2 == 0:
                assert devs[0] > devs[2]


# ---------------------------------------------------------------------------
# planted laws
# ---------------------------------------------------------------------------

def test_planted_marginals():
    rng = derive_rng(3, 0)
    n = 25
    frame = sample_frame(n, 1, rng).matrix
    law = Univariate(atoms=(Atom(-1.5, 0.2), Atom(1.5, 0.2)),
                     gaussians=(GaussianComponent(0, 1, 0.6),)).validate()
    planted = Planted(n, frame, law)
    x = planted_sample(planted, rng, 10**5)
    proj = x @ frame[:, 0]
    atom_freq = np.mean(np.abs(np.abs(proj) - 1.5) < 1e-9)
    stderr = math.sqrt(0.4 * 0.6 / x.shape[0])
    assert abs(atom_freq - 0.4) <= 4 * stderr
    cont = proj[np.abs(np.abs(proj) - 1.5) > 1e-9]
    assert kstest(cont, "norm").pvalue > 1e-3
    # orthogonal directions stay standard normal
    w = rng.standard_normal(n)
    w -= (w @ frame[:, 0]) * frame[:, 0]
    w /= np.linalg.norm(w)
    assert kstest(x @ w, "norm").pvalue > 1e-3


def test_planted_null_case_covariance():
    rng = derive_rng(4, 0)
    n = 8
    frame = sample_frame(n, 2, rng).matrix
    planted = Planted(n, frame, ProductLaw((standard_gaussian(), standard_gaussian())))
    x = planted_sample(planted, rng, 10**5)
    cov = np.cov(x.T)
    assert np.max(np.abs(cov - np.eye(n))) < 0.05


def test_planted_point_mass_projection():
    rng = derive_rng(5, 0)
    n = 12
    frame = sample_frame(n, 1, rng).matrix
    planted = Planted(n, frame, point_mass(0.0))
    x = planted_sample(planted, rng, 200)
    assert np.max(np.abs(x @ frame[:, 0])) < 1e-12


def test_planted_frame_contract():
    with pytest.raises(ContractViolation):
        Planted(4, np.ones((4, 1)), standard_gaussian())


def test_ridge_expectation_reductions():
    rng = derive_rng(6, 0)
    n = 10
    frame = sample_frame(n, 1, rng).matrix
    profile = PolyProfile((0.0, 0.0, 1.0))  # phi(t) = t^2
    # hidden law standard Gaussian: any direction sees a standard Gaussian
    planted = Planted(n, frame, standard_gaussian())
    u = rng.standard_normal(n)
    u /= np.linalg.norm(u)
    assert planted_ridge_expectation(planted, profile, u) == pytest.approx(1.0, abs=1e-9)
    # orthogonal direction: reduces to the Gaussian mean for any hidden law
    law = Univariate(atoms=(Atom(2.0, 0.5), Atom(-2.0, 0.5)))
    planted2 = Planted(n, frame, law)
    w = rng.standard_normal(n)
    w -= (w @ frame[:, 0]) * frame[:, 0]
    w /= np.linalg.norm(w)
    assert planted_ridge_expectation(planted2, profile, w) == pytest.approx(1.0, abs=1e-9)
    # aligned direction with a point mass at zero: phi(t)=t^2 -> 0
    planted3 = Planted(n, frame, point_mass(0.0))
    v = frame[:, 0]
    assert planted_ridge_expectation(planted3, profile, v) == pytest.approx(0.0, abs=1e-12)


def test_ridge_expectation_against_mc():
    rng = derive_rng(7, 0)
    n = 6
    frame = sample_frame(n, 1, rng).matrix
    law = Univariate(atoms=(Atom(1.0, 0.3),),
                     gaussians=(GaussianComponent(-0.5, 1.4, 0.7, bound=4.0),)).validate()
    planted = Planted(n, frame, law)
    u = rng.standard_normal(n)
    u /= np.linalg.norm(u)
    profile = CosProfile(1.3, 0.4)
    exact = planted_ridge_expectation(planted, profile, u)
    x = planted_sample(planted, rng, 400000)
    vals = profile.evaluate(x @ u)
    assert abs(exact - vals.mean()) <= 4 * vals.std(ddof=1) / math.sqrt(vals.size)


# ---------------------------------------------------------------------------
# radial chi-squared of the rotation-averaged law
# ---------------------------------------------------------------------------

def test_radial_chi2_gaussian_hidden_law():
    rep = chi2_averaged_planted(8, 1, standard_gaussian())
    assert rep.normalization_error <= 1e-6
    assert abs(rep.chi2) <= 1e-6
    assert rep.refinement_change <= 0.01


def test_radial_chi2_point_mass_closed_form():
    from scipy.special import gammaln
    n = 8
    rep = chi2_averaged_planted(n, 1, point_mass(0.0))
    closed = math.exp(gammaln(n / 2) + gammaln(n / 2 - 1) - 2 * gammaln((n - 1) / 2))
    assert rep.value == pytest.approx(closed, rel=1e-6)
    assert rep.normalization_error <= 1e-6
    assert rep.refinement_change <= 0.01


def test_radial_chi2_m_independence():
    # extra hidden Gaussian coordinates pool into the chi-squared block
    a = chi2_averaged_planted(8, 1, point_mass(0.0))
    b = chi2_averaged_planted(8, 3, point_mass(0.0))
    assert a.value == pytest.approx(b.value, rel=1e-12)


# ---------------------------------------------------------------------------
# periodic sampler
# ---------------------------------------------------------------------------

def test_periodic_label_values():
    assert periodic_label(0.0, 0.0, 1.0) == 1.0
    assert periodic_label(0.25, 0.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_periodic_sample_bounds_and_mean():
    rng = derive_rng(8, 0)
    w = np.zeros(6)
    w[2] = 1.0
    x, y = periodic_sample(6, w, 0.3, 0.05, rng)
    assert -1.0 <= y <= 1.0
    freq, sd = 0.25, 0.1
    ys = periodic_labels_batch(10**6, freq, sd, rng)
    want = math.exp(-2 * math.pi**2 * (freq**2 + sd**2))
    stderr = ys.std(ddof=1) / math.sqrt(ys.size)
    assert abs(ys.mean() - want) <= 4 * stderr


# ---------------------------------------------------------------------------
# instance JSON round trip
# ---------------------------------------------------------------------------

def test_instance_json_round_trip_bit_identical(tmp_path):
    law = Univariate(atoms=(Atom(-8.0, 0.125e-3), Atom(8.0, 0.125e-3)),
                     gaussians=(GaussianComponent(0.0, 1.0, 1 - 0.25e-3, bound=9.0),),
                     patches=(Patch(1.0, Polynomial1D("monomial", (0.01, 0.0, -0.03))),))
    payload = univariate_to_dict(law)
    text = json.dumps(payload)
    back = univariate_from_dict(json.loads(text))
    assert univariate_to_dict(back) == payload
    assert json.dumps(univariate_to_dict(back)) == text


def test_mass_conservation_battery():
    for law in _mixture_battery():
        assert law.total_mass() == pytest.approx(1.0, abs=1e-10)


def test_radial_chi2_divergence_detected():
    # hidden variance beyond 2 makes the averaged law heavier-tailed than the
    # ambient Gaussian; the range-extension check must report +inf
    rep = chi2_averaged_planted(8, 1, gaussian_law(0.0, 3.0), grid_points=1024)
    assert rep.diverged and rep.value == math.inf
