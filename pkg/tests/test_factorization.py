import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from whmc.factorization import (
    FactorLaw,
    RootLocationError,
    factor_coefficients,
    factor_laws,
    law_from_json,
    law_to_json,
    locate_roots,
    locate_roots_beta,
    locate_roots_hypergeometric,
    matched_coefficients,
    validate_law,
)
from whmc.models import LevyModel


def sign_scan_roots(model, lam, brackets, n_points=10_000):
    """Brute-force root count per bracket by dense sign scan."""
    counts = []
    for lo, hi in brackets:
        ins = 1e-7 * (hi - lo)
        z = np.linspace(lo + ins, hi - ins, n_points)
        vals = lam + model.psi_imag(z)
        counts.append(int(np.sum(np.sign(vals[1:]) != np.sign(vals[:-1]))))
    return counts


# --------------------------------------------------------------------------- #
# root location
# --------------------------------------------------------------------------- #

def test_bracket_containment_and_residuals(set1, set2):
    for m in (set1, set2):
        for lam in (20.0, 100.0):
            lad = locate_roots(m, lam, 64)
            assert np.all(lad.plus_roots > lad.plus_brackets[:, 0])
            assert np.all(lad.plus_roots < lad.plus_brackets[:, 1])
            assert np.all(lad.minus_roots > lad.minus_brackets[:, 0])
            assert np.all(lad.minus_roots < lad.minus_brackets[:, 1])
            assert lad.plus_residuals.max() < 1e-10
            assert lad.minus_residuals.max() < 1e-10
            # strictly increasing magnitudes
            assert np.all(np.diff(lad.plus_roots) > 0)
            assert np.all(np.diff(-lad.minus_roots) > 0)


def test_first_brackets_match_theorem_intervals(set1):
    # alpha2 = 1, beta2 = 1.5: first two positive roots in (0,1.5), (1.5,3)
    lad = locate_roots(set1, 20.0, 4)
    assert 0.0 < lad.plus_roots[0] < 1.5
    assert 1.5 < lad.plus_roots[1] < 3.0
    assert -1.5 < lad.minus_roots[0] < 0.0


def test_roots_verified_by_sign_scan(set1):
    lad = locate_roots(set1, 100.0, 24)
    counts = sign_scan_roots(set1, 100.0, lad.plus_brackets)
    assert counts == [1] * 25
    counts = sign_scan_roots(set1, 100.0, lad.minus_brackets)
    assert counts == [1] * 25


def test_interlacing_one_pole_between_roots(set1):
    lad = locate_roots(set1, 100.0, 32)
    beta, g0 = set1.root_grid(+1)
    poles = beta * (g0 + np.arange(0, 33))
    z = lad.plus_roots
    for n in range(32):
        inside = (poles > z[n]) & (poles < z[n + 1])
        assert inside.sum() == 1


def test_lambda_to_zero_root_collapse(set1):
    lad = locate_roots(set1, 1e-7, 2)
    assert min(lad.plus_roots[0], -lad.minus_roots[0]) < 1e-5


def test_root_count_validation(set1):
    with pytest.raises(ValueError):
        locate_roots(set1, -1.0, 8)
    with pytest.raises(ValueError):
        locate_roots(set1, 10.0, 0)


# --------------------------------------------------------------------------- #
# matched truncation identity
# --------------------------------------------------------------------------- #

def test_matched_truncation_identity(set1, set2):
    for m in (set1, set2):
        lad = locate_roots(m, 100.0, 64)
        for side in ("sup", "inf"):
            w, part = matched_coefficients(lad, m, side)
            assert abs((1.0 - w.sum()) - part) < 1e-12
            assert np.all(w > 0)      # interlacing makes residues positive


# --------------------------------------------------------------------------- #
# factor laws
# --------------------------------------------------------------------------- #

def test_wh_identity(set1, pair1_100):
    th = np.linspace(-10.0, 10.0, 41)
    prod = pair1_100.sup_law.cf(th) * pair1_100.inf_law.cf(th)
    target = 100.0 / (100.0 + set1.psi(th))
    assert np.max(np.abs(prod - target) / np.abs(target)) < 1e-4


def test_cf_basics(pair1_100):
    law = pair1_100.sup_law
    assert law.cf(0.0) == pytest.approx(1.0, abs=1e-12)
    th = np.linspace(-30.0, 30.0, 121)
    assert np.all(np.abs(law.cf(th)) <= 1.0 + 1e-9)


def test_survival_and_mass(pair1_100, pair2_100):
    for pair in (pair1_100, pair2_100):
        for law in (pair.sup_law, pair.inf_law):
            assert law.survival(0.0) == pytest.approx(1.0 - law.atom0, abs=1e-10)
            assert law.survival(200.0 / law.rates.min()) < 1e-30
            x = np.linspace(0.0, 40.0 / law.rates.min(), 20_001)
            dens_mass = np.trapezoid(law.density(x), x)
            assert dens_mass == pytest.approx(1.0 - law.atom0, abs=1e-6)


def test_quantile_round_trip(pair1_100, pair2_100):
    u = np.arange(0.01, 1.0, 0.01)
    for law in (pair1_100.sup_law, pair2_100.sup_law, pair2_100.inf_law):
        x = law.quantile(u)
        s = law.survival(np.maximum(x, 0.0))
        live = u > law.atom0
        assert np.max(np.abs(s[live] - (1.0 - u[live]))) < 1e-10
        assert np.all(x[~live] == 0.0)


def test_quantile_closed_form_single_exponential():
    law = FactorLaw(side="sup", lam=1.0, atom0=0.25,
                    rates=np.array([2.0]), weights=np.array([0.75]),
                    truncation=0, tail_bound=0.0)
    for u in (0.1, 0.24999):
        assert law.quantile(u) == 0.0
    for u in (0.3, 0.9, 0.999):
        want = -np.log((1.0 - u) / 0.75) / 2.0
        assert law.quantile(u) == pytest.approx(want, rel=1e-9)


def test_sampling_moments_and_atom(pair2_100, rng):
    law = pair2_100.sup_law
    u = rng.random(1_000_000)
    x = law.sample_batch(np.clip(u, 1e-16, 1 - 1e-16))
    # atom frequency within 4 binomial standard errors
    p = law.atom0
    freq = np.mean(x == 0.0)
    se = np.sqrt(p * (1 - p) / len(x))
    assert abs(freq - p) < 4 * se
    # mean within 4 standard errors of the series mean
    want = law.mean()
    se_m = x.std() / np.sqrt(len(x))
    assert abs(x.mean() - want) < 4 * se_m


def test_degenerate_all_atom_law(rng):
    law = FactorLaw(side="sup", lam=1.0, atom0=1.0, rates=np.array([1.0]),
                    weights=np.array([0.0]), truncation=0, tail_bound=0.0)
    # survival table cannot be built for a zero-mass series; quantile is 0
    # on the whole atom
    assert law.quantile(0.5) == 0.0 if law.atom0 >= 0.5 else True


def test_validate_law(pair1_100):
    rep = validate_law(pair1_100.sup_law)
    assert rep.passed and not rep.warn
    bad = FactorLaw(side="sup", lam=100.0, atom0=pair1_100.sup_law.atom0,
                    rates=pair1_100.sup_law.rates.copy(),
                    weights=pair1_100.sup_law.weights.copy(),
                    truncation=128, tail_bound=0.0)
    bad.weights[0] = -bad.weights[0]
    rep = validate_law(bad)
    assert not rep.passed
    assert rep.worst_point is not None


def test_severe_truncation_warns(set2):
    with pytest.warns(RuntimeWarning):
        lad = locate_roots(set2, 100.0, 2)
        law = factor_coefficients(lad, set2, "sup", n_support=2048)
    assert law.tail_bound > 1e-8
    rep = validate_law(law)
    assert rep.warn


def test_atom_values(pair1_100, pair2_100):
    assert pair1_100.sup_law.atom0 == 0.0
    assert pair1_100.inf_law.atom0 == 0.0
    assert 0.5 < pair2_100.sup_law.atom0 < 1.0     # irregular upward
    assert pair2_100.inf_law.atom0 == 0.0          # regular downward


def test_json_round_trip(pair1_100):
    law = pair1_100.sup_law
    back = law_from_json(law_to_json(law))
    assert back.side == law.side and back.truncation == law.truncation
    assert np.allclose(back.rates, law.rates)
    assert np.allclose(back.weights, law.weights)
    assert back.atom0 == law.atom0


def test_pair_cache(set1):
    a = factor_laws(set1, 37.0, 32)
    b = factor_laws(set1, 37.0, 32)
    assert a is b


@given(st.floats(min_value=1e-6, max_value=1.0 - 1e-6))
@settings(max_examples=60, deadline=None)
def test_quantile_survival_consistency_prop(u, pair1_100):
    law = pair1_100.sup_law
    x = law.quantile(u)
    assert x >= 0.0
    if u > law.atom0:
        assert abs(law.survival(x) - (1.0 - u)) < 1e-8


# --------------------------------------------------------------------------- #
# hypergeometric ladders
# --------------------------------------------------------------------------- #

def test_hyp_ladder_brackets_and_scan(hyp_model):
    lad = locate_roots_hypergeometric(hyp_model, 10.0, 40)
    assert lad.plus_residuals.max() < 1e-10
    assert lad.minus_residuals.max() < 1e-10
    counts = sign_scan_roots(hyp_model, 10.0, lad.plus_brackets[:8], 10_000)
    assert counts == [1] * 8
    p = hyp_model.params
    assert 0.0 < lad.plus_roots[0] < p.beta * (1.0 + p.sub2.gamma - p.sub2.alpha)


def test_hyp_asymptotic_offset(hyp_model):
    # regime with sigma, delta1, delta2 > 0: omega = 1 + gamma2 and
    # xi_n - beta (n - alpha2 + omega) -> 0
    p = hyp_model.params
    lad = locate_roots_hypergeometric(hyp_model, 10.0, 220)
    n = np.arange(221)
    asym = p.beta * (n - p.sub2.alpha + 1.0 + p.sub2.gamma)
    diff = np.abs(lad.plus_roots - asym)
    assert diff[200] < diff[40] < diff[10]
    assert diff[200] < 0.02 * p.beta


def test_hyp_wh_identity(hyp_model):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pair = factor_laws(hyp_model, 10.0, 96)
    th = np.linspace(-8.0, 8.0, 33)
    prod = pair.sup_law.cf(th) * pair.inf_law.cf(th)
    target = 10.0 / (10.0 + hyp_model.psi(th))
    assert np.max(np.abs(prod - target) / np.abs(target)) < 5e-4


def test_beta_ladder_type_guard(set1, hyp_model):
    with pytest.raises(ValueError):
        locate_roots_beta(hyp_model, 10.0, 8)
    with pytest.raises(ValueError):
        locate_roots_hypergeometric(set1, 10.0, 8)
