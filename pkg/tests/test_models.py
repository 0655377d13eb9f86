import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whmc.models import (
    BetaFamilyParams,
    BetaSubordinatorParams,
    CalibrationError,
    HypergeometricParams,
    InvalidParameters,
    LevyModel,
    calibrate_risk_neutral_drift,
    levy_density_beta,
    levy_density_hypergeometric,
    model_from_json,
    model_to_json,
    phi_beta_subordinator,
    psi_beta,
    psi_hypergeometric,
)


def lk_quadrature(model, theta, x_hi=60.0, n=400_001):
    """Levy-Khinchine integral against the jump density (truncation |x|<1),
    by fine trapezoid on each side with the small-x singularity split off."""
    out = 1j * model.drift * theta
    p = model.params
    if model.variant == "BetaFamily":
        out = out + 0.5 * p.sigma**2 * theta**2
    for sign in (+1.0, -1.0):
        x = np.linspace(1e-9, x_hi, n)
        dens = model.levy_density(sign * x)
        integrand = (1.0 - np.exp(1j * theta * sign * x)
                     + 1j * theta * sign * x * (x < 1.0)) * dens
        out = out + np.trapezoid(integrand, x)
    return out


# --------------------------------------------------------------------------- #
# parameter validation
# --------------------------------------------------------------------------- #

def test_rejects_bad_ranges():
    good = dict(a=0.0, sigma=0.1, c1=1.0, alpha1=1.0, beta1=1.5, lambda1=1.5,
                c2=1.0, alpha2=1.0, beta2=1.5, lambda2=1.5)
    BetaFamilyParams(**good)
    for field, bad in [("sigma", -0.1), ("c1", 0.0), ("alpha2", -1.0),
                       ("beta1", 0.0), ("lambda1", 3.5), ("lambda2", 2.0),
                       ("lambda1", 1.0 + 1e-12)]:
        with pytest.raises(InvalidParameters):
            BetaFamilyParams(**{**good, field: bad})


@given(lam1=st.floats(0.01, 2.99), lam2=st.floats(0.01, 2.99))
@settings(max_examples=40, deadline=None)
def test_index_exclusion_zone(lam1, lam2):
    kw = dict(a=0.0, sigma=0.2, c1=1.0, alpha1=1.0, beta1=1.5,
              c2=1.0, alpha2=1.0, beta2=1.5)
    near = any(abs(v - k) <= 1e-9 for v in (lam1, lam2) for k in (1.0, 2.0))
    if near:
        with pytest.raises(InvalidParameters):
            BetaFamilyParams(lambda1=lam1, lambda2=lam2, **kw)
    else:
        p = BetaFamilyParams(lambda1=lam1, lambda2=lam2, **kw)
        assert p.infinite_activity == (lam1 > 1.0 and lam2 > 1.0)
        assert p.bounded_variation == (lam1 < 2.0 and lam2 < 2.0 and p.sigma == 0.0)


def test_subordinator_constraints():
    BetaSubordinatorParams(c=1.0, alpha=0.7, beta=1.2, gamma=0.4)
    with pytest.raises(InvalidParameters):
        BetaSubordinatorParams(c=1.0, alpha=2.0, beta=1.2, gamma=0.4)  # 1-a+g <= 0
    with pytest.raises(InvalidParameters):
        BetaSubordinatorParams(c=1.0, alpha=0.5, beta=1.2, gamma=1.5)


def test_hypergeometric_constraints():
    s1 = BetaSubordinatorParams(c=1.0, alpha=0.7, beta=1.2, gamma=0.4, kappa=0.1)
    s2 = BetaSubordinatorParams(c=1.0, alpha=0.5, beta=1.2, gamma=0.3, kappa=0.2)
    with pytest.raises(InvalidParameters):
        HypergeometricParams(d=0.0, sigma=0.1, sub1=s1, sub2=s2)  # both killed
    s3 = BetaSubordinatorParams(c=1.0, alpha=0.5, beta=1.4, gamma=0.3)
    with pytest.raises(InvalidParameters):
        HypergeometricParams(d=0.0, sigma=0.1, sub1=s1, sub2=s3)  # beta mismatch


# --------------------------------------------------------------------------- #
# exponent surface
# --------------------------------------------------------------------------- #

def test_psi_zero_and_symmetry(set1, set2, hyp_model):
    th = np.linspace(-12.0, 12.0, 49)
    for m in (set1, set2, hyp_model):
        assert abs(m.psi(0.0)) < 1e-14
        vals = m.psi(th)
        assert np.allclose(m.psi(-th), np.conj(vals), rtol=1e-12, atol=1e-12)
        assert np.all(vals.real >= -1e-12)


def test_calibration(set1, set2):
    for m in (set1, set2):
        assert m.psi(-1j).real == pytest.approx(-0.05, abs=1e-12)
    # fixpoint: a model already at Psi(-i) = 0 keeps its drift for r = 0
    m0 = calibrate_risk_neutral_drift(set1, 0.0)
    again = calibrate_risk_neutral_drift(m0, 0.0)
    assert again.drift == pytest.approx(m0.drift, abs=1e-14)


def test_calibration_divergent():
    # alpha1*beta1 < 1: right jump tail too heavy for E e^X
    p = BetaFamilyParams(a=0.0, sigma=0.2, c1=1.0, alpha1=0.5, beta1=1.2, lambda1=0.5,
                         c2=1.0, alpha2=1.0, beta2=1.5, lambda2=1.5)
    with pytest.raises(CalibrationError):
        calibrate_risk_neutral_drift(LevyModel("BetaFamily", p), 0.05)


def test_psi_beta_vs_levy_khinchine(set1):
    # symmetric jump measure: the displayed exponent and the truncated
    # Levy-Khinchine integral agree exactly
    for th in (0.5, 1.0, 2.0, 5.0):
        direct = psi_beta(set1.params, th)
        quad = lk_quadrature(set1, th)
        assert abs(direct - quad) < 1e-6 * max(1.0, abs(direct))


def test_psi_prime_matches_finite_difference(set1, hyp_model):
    h = 1e-6
    for m in (set1, hyp_model):
        for th in (0.3, 1.7 + 0.4j):
            fd = (m.psi(th + h) - m.psi(th - h)) / (2 * h)
            assert abs(m.psi_prime(th) - fd) < 1e-6 * max(1.0, abs(fd))


def test_cumulants_match_cf_derivatives(set1, hyp_model):
    h = 1e-4
    for m in (set1, hyp_model):
        mean, var = m.cumulants(1.0)
        # numerical derivatives of -Psi at 0
        d1 = (m.psi(h) - m.psi(-h)) / (2 * h)
        d2 = (m.psi(h) - 2 * m.psi(0.0) + m.psi(-h)) / h**2
        assert mean == pytest.approx(float((-d1 / 1j).real), abs=1e-5)
        assert var == pytest.approx(float(d2.real), rel=1e-5)


# --------------------------------------------------------------------------- #
# jump densities
# --------------------------------------------------------------------------- #

def test_density_beta_point_value(set1):
    # x = 1 with alpha1=1, beta1=1.5, lambda1=1.5, c1=1
    want = np.exp(-1.5) / (1.0 - np.exp(-1.5)) ** 1.5
    assert levy_density_beta(set1.params, 1.0) == pytest.approx(want, rel=1e-14)


def test_density_beta_small_x_divergence(set1):
    # pi(x) ~ c1 (beta1 x)^{-lambda1} as x -> 0+
    p = set1.params
    for x in (1e-4, 1e-6):
        lead = p.c1 * (p.beta1 * x) ** (-p.lambda1)
        assert levy_density_beta(p, x) == pytest.approx(lead, rel=5e-2 * np.sqrt(x) + 1e-3)


def test_density_beta_symmetry(set1):
    x = np.linspace(0.1, 4.0, 17)
    assert np.allclose(levy_density_beta(set1.params, x),
                       levy_density_beta(set1.params, -x), rtol=1e-14)


def test_density_zero_rejected(set1):
    with pytest.raises(ValueError):
        levy_density_beta(set1.params, 0.0)


# --------------------------------------------------------------------------- #
# subordinator exponent
# --------------------------------------------------------------------------- #

def test_phi_at_zero_is_kappa():
    s = BetaSubordinatorParams(c=1.3, alpha=0.6, beta=1.1, gamma=0.35, delta=0.2, kappa=0.7)
    assert phi_beta_subordinator(s, 0.0) == pytest.approx(0.7, abs=1e-12)


def test_phi_monotone():
    s = BetaSubordinatorParams(c=1.3, alpha=0.6, beta=1.1, gamma=0.35, delta=0.0, kappa=0.0)
    vals = [phi_beta_subordinator(s, th) for th in (0.0, 1.0, 2.0, 5.0, 20.0)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_phi_vs_levy_measure_quadrature():
    # oracle: int (1 - e^{-th x}) against the subordinator measure, under
    # u = e^{-beta x} (adaptive quadrature handles the u -> 1 singularity)
    from scipy.integrate import quad

    s = BetaSubordinatorParams(c=0.9, alpha=0.4, beta=1.3, gamma=0.45, delta=0.0, kappa=0.0)
    for th in (0.7, 2.0):
        f = lambda u: (1.0 - u ** (th / s.beta)) * u ** (s.gamma - s.alpha) \
            * (1.0 - u) ** (-1.0 - s.gamma)
        val, err = quad(f, 0.0, 1.0, limit=800)
        assert err < 1e-9
        assert phi_beta_subordinator(s, th) == pytest.approx(s.c / s.beta * val, rel=1e-8)


# --------------------------------------------------------------------------- #
# hypergeometric family
# --------------------------------------------------------------------------- #

def test_hyp_psi_zero_with_zero_drift(hyp_model):
    p = hyp_model.params
    zero_d = HypergeometricParams(d=0.0, sigma=p.sigma, sub1=p.sub1, sub2=p.sub2)
    assert abs(psi_hypergeometric(zero_d, 0.0)) < 1e-14


def test_hyp_gaussian_coefficient(hyp_model):
    # effective Gaussian variance sigma^2 + 2 delta1 delta2: the theta^2
    # coefficient of Psi at large theta is half of it
    p = hyp_model.params
    th = np.linspace(1e3, 1e4, 9)
    ratio = np.real(psi_hypergeometric(p, th)) / th**2
    want = 0.5 * (p.sigma**2 + 2.0 * p.sub1.delta * p.sub2.delta)
    # subleading decay ~ theta^{gamma2 - 1}
    basis = np.column_stack([np.ones_like(th), th ** (p.sub2.gamma - 1.0)])
    coef = np.linalg.lstsq(basis, ratio, rcond=None)[0][0]
    assert coef == pytest.approx(want, rel=1e-3)


def test_hyp_density_matches_exponent():
    # pure subordinator difference: Re Psi equals the Levy-Khinchine
    # quadrature of the 2F1 density; Im differs only by a drift line
    s1 = BetaSubordinatorParams(c=1.0, alpha=0.3, beta=1.2, gamma=-0.4)
    s2 = BetaSubordinatorParams(c=0.8, alpha=0.2, beta=1.2, gamma=-0.3)
    m = LevyModel("Hypergeometric", HypergeometricParams(d=0.0, sigma=0.0, sub1=s1, sub2=s2))
    x = np.linspace(1e-7, 50.0, 1_000_001)
    dens_p = levy_density_hypergeometric(m.params, x)
    dens_m = levy_density_hypergeometric(m.params, -x)
    assert np.all(dens_p >= 0.0) and np.all(dens_m >= 0.0)
    for th in (0.5, 1.5):
        quad = np.trapezoid((1.0 - np.cos(th * x)) * (dens_p + dens_m), x)
        assert m.psi(th).real == pytest.approx(quad, rel=2e-5)
    # imaginary part: linear-in-theta mismatch only (compensation drift)
    ths = np.array([0.5, 1.0, 2.0])
    quad_im = [np.trapezoid(np.sin(th * x) * (dens_m - dens_p), x) for th in ths]
    resid = np.imag(m.psi(ths)) - np.array(quad_im)
    slope = resid / ths
    assert np.allclose(slope, slope[0], rtol=1e-3, atol=1e-6)


def test_hyp_density_tail_rate(hyp_model):
    p = hyp_model.params
    x = np.array([6.0, 8.0, 10.0])
    d = levy_density_hypergeometric(p, x)
    slope = np.diff(np.log(d)) / np.diff(x)
    want = -p.beta * (1.0 + p.sub1.gamma - p.sub1.alpha)
    assert np.allclose(slope, want, rtol=5e-2)


def test_hyp_density_vanishing_descending_ladder():
    s1 = BetaSubordinatorParams(c=1.0, alpha=0.7, beta=1.2, gamma=0.4, delta=0.1)
    base = dict(alpha=0.5, beta=1.2, gamma=0.3, delta=0.0, kappa=0.0)
    big = levy_density_hypergeometric(
        HypergeometricParams(d=0.0, sigma=0.0, sub1=s1,
                             sub2=BetaSubordinatorParams(c=1e-2, **base)), 1.0)
    small = levy_density_hypergeometric(
        HypergeometricParams(d=0.0, sigma=0.0, sub1=s1,
                             sub2=BetaSubordinatorParams(c=1e-6, **base)), 1.0)
    assert small < 1e-4 * big / 1e-2 * 1e-2 + 1e-12 or small < big * 1.1e-4


def test_hyp_density_vs_convolution_oracle(hyp_model):
    """Positive-side density equals -d/dx of the ladder convolution tail."""
    from scipy.integrate import quad

    p = hyp_model.params
    s1, s2 = p.sub1, p.sub2
    b = p.beta

    def pi1(u):
        return s1.c * np.exp(s1.alpha * b * u) / (np.exp(b * u) - 1.0) ** (1.0 + s1.gamma)

    def pi2(u):
        return s2.c * np.exp(s2.alpha * b * u) / (np.exp(b * u) - 1.0) ** (1.0 + s2.gamma)

    def tail2(w):
        val, _ = quad(pi2, w, np.inf, limit=200)
        return val

    def upper_tail(x):
        inner = lambda u: pi1(u) * tail2(u - x)
        first, _ = quad(inner, x, np.inf, limit=400, points=[x + 1e-6])
        second = s2.delta * pi1(x)
        third = s2.kappa * quad(pi1, x, np.inf, limit=200)[0]
        return first + second + third

    x0, h = 1.0, 1e-3
    deriv = -(upper_tail(x0 + h) - upper_tail(x0 - h)) / (2 * h)
    direct = levy_density_hypergeometric(p, x0)
    assert direct == pytest.approx(deriv, rel=2e-3)


# --------------------------------------------------------------------------- #
# serialization
# --------------------------------------------------------------------------- #

def test_json_round_trip(set1, hyp_model):
    for m in (set1, hyp_model):
        doc = model_to_json(m)
        back = model_from_json(doc)
        assert back == m
        assert back.content_hash() == m.content_hash()
    with pytest.raises(InvalidParameters):
        model_from_json(json.dumps({"variant": "Nope", "params": {}}))
