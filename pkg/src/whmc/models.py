"""Process parameterizations, characteristic/Laplace exponents, densities.

Two families are supported, both with exponents built from Beta functions:

* the 10-parameter two-sided family with jump density
      pi(x) = c1 exp(-alpha1 beta1 x) (1 - exp(-beta1 x))^{-lambda1}   x > 0
              c2 exp( alpha2 beta2 x) (1 - exp( beta2 x))^{-lambda2}   x < 0
* the hypergeometric family, assembled from two subordinators acting as
  ascending/descending ladder heights, sharing one decay rate beta.

Characteristic-function convention throughout: E exp(i theta X_t)
= exp(-t Psi(theta)), so Psi(0) = 0 and Re Psi >= 0 on the real line.

Models are immutable; calibration returns a new model. All exponent
evaluations accept scalars or numpy arrays.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from scipy.special import digamma, polygamma

from .specfun import (
    EvaluationError,
    beta_complex,
    beta_near_pole,
    beta_real,
    digamma_diff,
    hyp2f1_series,
)

__all__ = [
    "InvalidParameters",
    "CalibrationError",
    "BetaFamilyParams",
    "BetaSubordinatorParams",
    "HypergeometricParams",
    "LevyModel",
    "psi_beta",
    "levy_density_beta",
    "phi_beta_subordinator",
    "psi_hypergeometric",
    "levy_density_hypergeometric",
    "calibrate_risk_neutral_drift",
    "model_from_json",
    "model_to_json",
]

#: stability-like indices this close to {1, 2} are rejected (Beta terms degenerate)
INDEX_EXCLUSION = 1e-9


class InvalidParameters(ValueError):
    """Parameter record violates its admissible range."""


class CalibrationError(ArithmeticError):
    """Risk-neutral drift cannot be set (Psi(-i) divergent)."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidParameters(msg)


@dataclass(frozen=True)
class BetaFamilyParams:
    """Two-sided jump family: drift a, Gaussian sigma, and per-side
    (c, alpha, beta, lambda) with lambda in (0,3) excluding {1, 2}."""

    a: float
    sigma: float
    c1: float
    alpha1: float
    beta1: float
    lambda1: float
    c2: float
    alpha2: float
    beta2: float
    lambda2: float

    def __post_init__(self):
        _require(self.sigma >= 0.0, "sigma must be >= 0")
        for nm in ("c1", "c2", "alpha1", "alpha2", "beta1", "beta2"):
            _require(getattr(self, nm) > 0.0, f"{nm} must be > 0")
        for nm in ("lambda1", "lambda2"):
            lam = getattr(self, nm)
            _require(0.0 < lam < 3.0, f"{nm} must lie in (0, 3)")
            _require(
                abs(lam - 1.0) > INDEX_EXCLUSION and abs(lam - 2.0) > INDEX_EXCLUSION,
                f"{nm} within {INDEX_EXCLUSION} of a degenerate index (1 or 2)",
            )

    @property
    def bounded_variation(self) -> bool:
        return self.sigma == 0.0 and self.lambda1 < 2.0 and self.lambda2 < 2.0

    @property
    def infinite_activity(self) -> bool:
        return self.lambda1 > 1.0 and self.lambda2 > 1.0


@dataclass(frozen=True)
class BetaSubordinatorParams:
    """Subordinator with Levy density c exp(alpha beta x) (exp(beta x)-1)^{-1-gamma},
    drift delta and killing rate kappa. Requires 1 - alpha + gamma > 0."""

    c: float
    alpha: float
    beta: float
    gamma: float
    delta: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        _require(self.c > 0.0, "c must be > 0")
        _require(self.beta > 0.0, "beta must be > 0")
        _require(self.gamma < 1.0 and self.gamma != 0.0, "gamma must lie in (-inf,0) or (0,1)")
        _require(self.delta >= 0.0, "delta must be >= 0")
        _require(self.kappa >= 0.0, "kappa must be >= 0")
        _require(1.0 - self.alpha + self.gamma > 0.0, "need 1 - alpha + gamma > 0")


@dataclass(frozen=True)
class HypergeometricParams:
    """Linear drift d, Gaussian add-on sigma, and two subordinator records
    (ascending sub1, descending sub2) sharing one beta with kappa1*kappa2 = 0."""

    d: float
    sigma: float
    sub1: BetaSubordinatorParams
    sub2: BetaSubordinatorParams

    def __post_init__(self):
        _require(self.sigma >= 0.0, "sigma must be >= 0")
        _require(self.sub1.beta == self.sub2.beta, "sub1 and sub2 must share beta")
        _require(self.sub1.kappa * self.sub2.kappa == 0.0, "at least one subordinator must be unkilled")

    @property
    def beta(self) -> float:
        return self.sub1.beta


Params = Union[BetaFamilyParams, HypergeometricParams]


# --------------------------------------------------------------------------- #
# beta-family exponent and density
# --------------------------------------------------------------------------- #

def psi_beta(params: BetaFamilyParams, theta):
    """Characteristic exponent of the two-sided Beta family at theta
    (real or complex, scalars or arrays)."""
    th = np.asarray(theta, dtype=complex)
    b01 = beta_real(params.alpha1, 1.0 - params.lambda1)
    b02 = beta_real(params.alpha2, 1.0 - params.lambda2)
    x1 = params.alpha1 - 1j * th / params.beta1
    x2 = params.alpha2 + 1j * th / params.beta2
    t1 = params.c1 / params.beta1 * (b01 - beta_complex(x1, 1.0 - params.lambda1))
    t2 = params.c2 / params.beta2 * (b02 - beta_complex(x2, 1.0 - params.lambda2))
    out = 1j * params.a * th + 0.5 * params.sigma**2 * th**2 + t1 + t2
    return out if out.ndim else complex(out)


def _psi_beta_imag(params: BetaFamilyParams, z):
    """Psi(i z) for real z: real-valued; used by root scans."""
    z = np.asarray(z, dtype=float)
    b01 = beta_real(params.alpha1, 1.0 - params.lambda1)
    b02 = beta_real(params.alpha2, 1.0 - params.lambda2)
    t1 = params.c1 / params.beta1 * (
        b01 - beta_real(params.alpha1 + z / params.beta1, 1.0 - params.lambda1, check=False)
    )
    t2 = params.c2 / params.beta2 * (
        b02 - beta_real(params.alpha2 - z / params.beta2, 1.0 - params.lambda2, check=False)
    )
    out = -params.a * z - 0.5 * params.sigma**2 * z**2 + t1 + t2
    return out if out.ndim else float(out)


def _psi_beta_prime(params: BetaFamilyParams, theta):
    """d Psi / d theta, complex-capable (digamma differences)."""
    th = np.asarray(theta, dtype=complex)
    x1 = params.alpha1 - 1j * th / params.beta1
    x2 = params.alpha2 + 1j * th / params.beta2
    d1 = beta_complex(x1, 1.0 - params.lambda1) * digamma_diff(x1, 1.0 - params.lambda1)
    d2 = beta_complex(x2, 1.0 - params.lambda2) * digamma_diff(x2, 1.0 - params.lambda2)
    out = (
        1j * params.a
        + params.sigma**2 * th
        + 1j * params.c1 / params.beta1**2 * d1
        - 1j * params.c2 / params.beta2**2 * d2
    )
    return out if out.ndim else complex(out)


def levy_density_beta(params: BetaFamilyParams, x):
    """Jump density pi(x), x != 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise ValueError("Levy density undefined at x = 0")
    xp = np.where(x > 0, x, 1.0)
    xn = np.where(x < 0, x, -1.0)
    pos = params.c1 * np.exp(-params.alpha1 * params.beta1 * xp) / (
        1.0 - np.exp(-params.beta1 * xp)
    ) ** params.lambda1
    neg = params.c2 * np.exp(params.alpha2 * params.beta2 * xn) / (
        1.0 - np.exp(params.beta2 * xn)
    ) ** params.lambda2
    out = np.where(x > 0, pos, neg)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------- #
# subordinator Laplace exponent, hypergeometric exponent and density
# --------------------------------------------------------------------------- #

def phi_beta_subordinator(params: BetaSubordinatorParams, theta):
    """Laplace exponent Phi(theta) = kappa + delta*theta
    + (c/beta) { B(1-alpha+gamma, -gamma) - B(1-alpha+gamma+theta/beta, -gamma) }.

    Accepts real theta >= 0 or complex theta (for exponent evaluation)."""
    th = np.asarray(theta)
    base = 1.0 - params.alpha + params.gamma
    b0 = beta_real(base, -params.gamma)
    if np.iscomplexobj(th):
        bt = beta_complex(base + th / params.beta, -params.gamma)
    else:
        arg = base + th / params.beta
        if np.any(beta_near_pole(arg, -params.gamma)):
            raise EvaluationError("subordinator exponent at a Beta pole")
        bt = beta_real(arg, -params.gamma, check=False)
    out = params.kappa + params.delta * th + params.c / params.beta * (b0 - bt)
    return out if np.ndim(out) else (complex(out) if np.iscomplexobj(th) else float(out))


def _phi_prime(params: BetaSubordinatorParams, theta):
    th = np.asarray(theta, dtype=complex)
    w = 1.0 - params.alpha + params.gamma + th / params.beta
    b = beta_complex(w, -params.gamma) * digamma_diff(w, -params.gamma)
    out = params.delta - params.c / params.beta**2 * b
    return out if out.ndim else complex(out)


def psi_hypergeometric(params: HypergeometricParams, theta):
    """Psi(theta) = d*i*theta + sigma^2 theta^2 / 2 + Phi1(-i theta) Phi2(i theta)."""
    th = np.asarray(theta, dtype=complex)
    out = (
        1j * params.d * th
        + 0.5 * params.sigma**2 * th**2
        + phi_beta_subordinator(params.sub1, -1j * th)
        * phi_beta_subordinator(params.sub2, 1j * th)
    )
    return out if out.ndim else complex(out)


def _phi_real_unchecked(params: BetaSubordinatorParams, theta):
    base = 1.0 - params.alpha + params.gamma
    b0 = beta_real(base, -params.gamma)
    bt = beta_real(base + np.asarray(theta, dtype=float) / params.beta, -params.gamma, check=False)
    return params.kappa + params.delta * np.asarray(theta, dtype=float) + params.c / params.beta * (b0 - bt)


def _psi_hyp_imag_impl(params: HypergeometricParams, z):
    z = np.asarray(z, dtype=float)
    out = (
        -params.d * z
        - 0.5 * params.sigma**2 * z**2
        + _phi_real_unchecked(params.sub1, z) * _phi_real_unchecked(params.sub2, -z)
    )
    return out if out.ndim else float(out)


def _psi_hyp_prime(params: HypergeometricParams, theta):
    th = np.asarray(theta, dtype=complex)
    p1 = phi_beta_subordinator(params.sub1, -1j * th)
    p2 = phi_beta_subordinator(params.sub2, 1j * th)
    d1 = _phi_prime(params.sub1, -1j * th)
    d2 = _phi_prime(params.sub2, 1j * th)
    out = 1j * params.d + params.sigma**2 * th - 1j * d1 * p2 + 1j * p1 * d2
    return out if out.ndim else complex(out)


def levy_density_hypergeometric(params: HypergeometricParams, x):
    """Jump density of the hypergeometric family, x != 0.

    For x > 0 the three-term expression with 2F1(1+gamma1, rho; rho-gamma2; e^{-beta x}),
    rho = 2 + gamma1 + gamma2 - alpha1 - alpha2; x < 0 by swapping the subordinator roles.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise ValueError("Levy density undefined at x = 0")

    def one_side(xa, s1: BetaSubordinatorParams, s2: BetaSubordinatorParams):
        b = s1.beta
        g1, g2 = s1.gamma, s2.gamma
        a1, a2 = s1.alpha, s2.alpha
        rho = 2.0 + g1 + g2 - a1 - a2
        if beta_near_pole(rho - g2, 1.0):  # 2F1 lower parameter
            raise EvaluationError("2F1 parameter rho - gamma2 at a nonpositive integer")
        q = np.exp(-b * xa)
        f = hyp2f1_series(1.0 + g1, rho, rho - g2, q)
        term1 = -(s1.c * s2.c / b) * beta_real(rho, -g2) * np.exp(-b * xa * (1.0 + g1 - a1)) * f
        mll = np.exp(a1 * b * xa) / (np.exp(b * xa) - 1.0) ** (1.0 + g1)
        term2 = s1.c * (s2.kappa + s2.c / b * beta_real(1.0 + g2 - a2, -g2)) * mll
        # d/dx of the subordinator density kernel (used with the opposite drift)
        dmll = (
            b
            * np.exp(a1 * b * xa)
            / (np.exp(b * xa) - 1.0) ** (2.0 + g1)
            * (a1 * (np.exp(b * xa) - 1.0) - (1.0 + g1) * np.exp(b * xa))
        )
        term3 = -s2.delta * s1.c * dmll
        return term1 + term2 + term3

    xp = np.where(x > 0, x, 1.0)
    xn = np.where(x < 0, -x, 1.0)
    pos = one_side(xp, params.sub1, params.sub2)
    neg = one_side(xn, params.sub2, params.sub1)
    out = np.where(x > 0, pos, neg)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------- #
# model wrapper
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class LevyModel:
    """A process specification: which family plus its parameter record.

    The model exposes the evaluations the factorization and transform layers
    need: psi(theta) for complex theta, the real restriction psi_imag(z)
    = Psi(i z) for root scans, and psi_prime for Newton steps.
    """

    variant: str
    params: Params

    def __post_init__(self):
        if self.variant == "BetaFamily":
            _require(isinstance(self.params, BetaFamilyParams), "params/variant mismatch")
        elif self.variant == "Hypergeometric":
            _require(isinstance(self.params, HypergeometricParams), "params/variant mismatch")
        else:
            raise InvalidParameters(f"unknown variant {self.variant!r}")
        z0 = abs(self.psi(0.0))
        _require(z0 < 1e-14, f"Psi(0) = {z0} differs from 0")

    # -- exponent surface ---------------------------------------------------
    def psi(self, theta):
        if self.variant == "BetaFamily":
            return psi_beta(self.params, theta)
        return psi_hypergeometric(self.params, theta)

    def psi_imag(self, z):
        """Psi(i z) for real z; real-valued away from poles."""
        if self.variant == "BetaFamily":
            return _psi_beta_imag(self.params, z)
        return _psi_hyp_imag_impl(self.params, z)

    def psi_prime(self, theta):
        if self.variant == "BetaFamily":
            return _psi_beta_prime(self.params, theta)
        return _psi_hyp_prime(self.params, theta)

    def levy_density(self, x):
        if self.variant == "BetaFamily":
            return levy_density_beta(self.params, x)
        return levy_density_hypergeometric(self.params, x)

    # -- cumulants (needed by increment tables / diagnostics) ---------------
    def cumulants(self, t: float = 1.0):
        """(mean, variance) of X_t from exponent derivatives at 0."""
        mean = -t * float(np.imag(self.psi_prime(0.0)))
        var = t * float(np.real(self._psi_second_at_zero()))
        return mean, var

    def _psi_second_at_zero(self) -> float:
        if self.variant == "BetaFamily":
            p = self.params
            out = p.sigma**2
            for c, al, be, la in ((p.c1, p.alpha1, p.beta1, p.lambda1),
                                  (p.c2, p.alpha2, p.beta2, p.lambda2)):
                b = beta_real(al, 1.0 - la)
                dpsi = digamma(al) - digamma(al + 1.0 - la)
                tpsi = polygamma(1, al) - polygamma(1, al + 1.0 - la)
                out += c / be**3 * b * (dpsi**2 + tpsi)
            return out
        p = self.params
        out = p.sigma**2
        # product rule for Phi1(-i th) Phi2(i th) at th = 0
        f1, f2 = phi_beta_subordinator(p.sub1, 0.0), phi_beta_subordinator(p.sub2, 0.0)
        d1, d2 = complex(_phi_prime(p.sub1, 0.0)).real, complex(_phi_prime(p.sub2, 0.0)).real

        def phi2nd(s: BetaSubordinatorParams) -> float:
            w = 1.0 - s.alpha + s.gamma
            b = beta_real(w, -s.gamma)
            dd = digamma(w) - digamma(w - s.gamma)
            tt = polygamma(1, w) - polygamma(1, w - s.gamma)
            return -s.c / s.beta**3 * b * (dd**2 + tt)

        out += -f1 * phi2nd(p.sub2) - f2 * phi2nd(p.sub1) + 2.0 * d1 * d2
        return out

    # -- ladder grid for root brackets --------------------------------------
    def root_grid(self, side: int):
        """(beta, offset) so the n-th root magnitude on ``side`` lies in
        (max(0, beta*(offset+n) - beta), beta*(offset+n)), n = 0, 1, ...

        side=-1: roots on the negative imaginary half-line (supremum factor);
        side=+1: positive half-line (infimum factor)."""
        if self.variant == "BetaFamily":
            p = self.params
            if side < 0:
                return p.beta1, p.alpha1
            return p.beta2, p.alpha2
        p = self.params
        if side < 0:
            return p.beta, 1.0 + p.sub1.gamma - p.sub1.alpha
        return p.beta, 1.0 + p.sub2.gamma - p.sub2.alpha

    def right_tail_rate(self) -> float:
        """Exponential decay rate of the jump density at +inf; E e^{p X_t}
        is finite iff p is below this rate."""
        if self.variant == "BetaFamily":
            return self.params.alpha1 * self.params.beta1
        s1 = self.params.sub1
        return s1.beta * (1.0 + s1.gamma - s1.alpha)

    def with_drift(self, a: float) -> "LevyModel":
        if self.variant == "BetaFamily":
            return LevyModel("BetaFamily", replace(self.params, a=a))
        return LevyModel("Hypergeometric", replace(self.params, d=a))

    @property
    def drift(self) -> float:
        return self.params.a if self.variant == "BetaFamily" else self.params.d

    def content_hash(self) -> str:
        return hashlib.sha256(model_to_json(self).encode()).hexdigest()[:16]


def calibrate_risk_neutral_drift(model: LevyModel, r: float) -> LevyModel:
    """Return a copy with linear drift set so Psi(-i) = -r exactly.

    The drift enters as i*a*theta, so Psi(-i) = a + Psi0(-i) with Psi0 the
    zero-drift exponent; requires the exponential moment E e^{X_1} to exist
    (right jump tail decaying faster than e^{-x})."""
    if model.right_tail_rate() <= 1.0:
        raise CalibrationError(
            f"E exp(X_1) divergent: right tail rate {model.right_tail_rate()} <= 1"
        )
    zero = model.with_drift(0.0)
    try:
        psi0 = zero.psi(-1j)
    except EvaluationError as exc:
        raise CalibrationError(f"Psi(-i) not evaluable: {exc}") from exc
    if not np.isfinite(psi0.real) or abs(psi0.imag) > 1e-10 * max(1.0, abs(psi0)):
        raise CalibrationError(f"Psi(-i) = {psi0} is not finite real")
    return model.with_drift(-r - psi0.real)


# --------------------------------------------------------------------------- #
# JSON interface (exact field names)
# --------------------------------------------------------------------------- #

def model_to_json(model: LevyModel) -> str:
    if model.variant == "BetaFamily":
        p = model.params
        params = {k: getattr(p, k) for k in (
            "a", "sigma", "c1", "alpha1", "beta1", "lambda1",
            "c2", "alpha2", "beta2", "lambda2")}
    else:
        p = model.params
        params = {
            "d": p.d,
            "sigma": p.sigma,
            "sub1": {k: getattr(p.sub1, k) for k in ("c", "alpha", "beta", "gamma", "delta", "kappa")},
            "sub2": {k: getattr(p.sub2, k) for k in ("c", "alpha", "beta", "gamma", "delta", "kappa")},
        }
    return json.dumps({"variant": model.variant, "params": params}, sort_keys=True)


def model_from_json(doc) -> LevyModel:
    """Build a model from a JSON string or parsed dict with exact field names."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    variant = doc["variant"]
    params = doc["params"]
    if variant == "BetaFamily":
        return LevyModel(variant, BetaFamilyParams(**params))
    if variant == "Hypergeometric":
        sub1 = BetaSubordinatorParams(**params["sub1"])
        sub2 = BetaSubordinatorParams(**params["sub2"])
        return LevyModel(variant, HypergeometricParams(
            d=params["d"], sigma=params["sigma"], sub1=sub1, sub2=sub2))
    raise InvalidParameters(f"unknown variant {variant!r}")
