import numpy as np
import pytest
from scipy.special import beta as scipy_beta
from scipy.special import gamma as scipy_gamma
from scipy.special import hyp2f1

from whmc.specfun import EvaluationError, beta_complex, beta_real, hyp2f1_series


def test_beta_real_positive_args():
    for x, y in [(1.0, 2.0), (0.3, 0.7), (5.5, 0.01)]:
        assert beta_real(x, y) == pytest.approx(scipy_beta(x, y), rel=1e-13)


def test_beta_real_negative_args():
    # B(-0.3, 0.8) via the Gamma definition
    want = scipy_gamma(-0.3) * scipy_gamma(0.8) / scipy_gamma(0.5)
    assert beta_real(-0.3, 0.8) == pytest.approx(want, rel=1e-12)


def test_beta_real_exact_zero():
    # x + y at a nonpositive integer is a zero of B, not a pole
    assert beta_real(-0.5, -0.5) == 0.0
    assert beta_real(-1.5, 0.5) == 0.0


def test_beta_pole_raises():
    with pytest.raises(EvaluationError):
        beta_real(-2.0, 0.5)
    with pytest.raises(EvaluationError):
        beta_real(0.5, 0.0)


def test_beta_complex_matches_real_limit():
    x = np.array([0.4 + 0j, 2.3 + 0j])
    got = beta_complex(x, -0.5)
    want = np.array([beta_real(0.4, -0.5), beta_real(2.3, -0.5)])
    assert np.allclose(got.real, want, rtol=1e-12)
    assert np.allclose(got.imag, 0.0, atol=1e-12)


def test_beta_complex_offaxis():
    x = 1.0 - 4.0j
    got = beta_complex(np.array([x]), -0.5)[0]
    want = scipy_gamma(x) * scipy_gamma(-0.5) / scipy_gamma(x - 0.5)
    assert got == pytest.approx(want, rel=1e-12)


def test_hyp2f1_series_vs_scipy():
    z = np.array([0.05, 0.3, 0.8, 0.95])
    got = hyp2f1_series(1.4, 0.9, 2.3, z)
    want = hyp2f1(1.4, 0.9, 2.3, z)
    assert np.allclose(got, want, rtol=1e-12)


def test_hyp2f1_domain():
    with pytest.raises(EvaluationError):
        hyp2f1_series(1.0, 1.0, 2.0, 1.5)
    with pytest.raises(EvaluationError):
        hyp2f1_series(1.0, 1.0, -3.0, 0.5)
