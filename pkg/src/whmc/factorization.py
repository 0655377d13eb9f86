"""Roots of lam + Psi(i z) = 0 and the exponential-series factor laws.

The supremum of the process at an independent exponential time has survival
function S(x) = sum_k w_k exp(-r_k x) plus a possible atom at zero; the rates
are the root magnitudes on the negative imaginary half-line and the weights
are infinite products over the interlacing root/pole ladder. The infimum
factor is the mirror image built from the positive half-line.

Numerical scheme
----------------
Roots are bracketed between consecutive Beta-function poles and solved in
*offset coordinates* w, where z = beta*(g0 + n - 1 + w) measures the position
inside the bracket. Near a pole the exponent is evaluated through the Beta
reflection identity in w, which keeps the residual |lam + Psi(i z)| at the
1e-12 level even where d(Psi)/dz is ~1e6 (plain float64 evaluation of the
same quantity stalls near 1e-8).

Weights are the infinite products, truncated at ``n_support`` computed roots
with the remainder summed in closed form (a Gamma-function ratio at constant
offset). The truncated series mass is folded into one compensation term at
the next-root rate; the atom at zero is detected from the limiting offset
(roots approaching the pole lattice from below <=> no atom) and, on the
irregular side, extrapolated from the partial product with a fitted
power-law offset tail.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import digamma, gammaln, gammasgn, loggamma, zeta

from .models import LevyModel
from .specfun import beta_real

__all__ = [
    "RootLocationError",
    "DegenerateLawError",
    "LawValidityError",
    "RootLadder",
    "FactorLaw",
    "FactorizationPair",
    "locate_roots",
    "locate_roots_beta",
    "locate_roots_hypergeometric",
    "factor_coefficients",
    "matched_coefficients",
    "factor_laws",
    "factor_cf",
    "survival",
    "density",
    "quantile",
    "sample_factor",
    "validate_law",
    "law_to_json",
    "law_from_json",
]

BRACKET_INSET = 1e-9        # endpoint inset, in units of bracket width
BISECT_WIDTH = 1e-13        # bisection target width, in units of bracket width
NEWTON_POLISH = 3
RESIDUAL_TOL = 1e-10
TAIL_WARN = 1e-8            # warn when estimated truncated mass exceeds this


class RootLocationError(ArithmeticError):
    """No sign change inside a theorem bracket."""


class DegenerateLawError(ArithmeticError):
    """Coincident roots made a product term vanish."""


class LawValidityError(ArithmeticError):
    """Factor law failed a validity check (truncation too coarse)."""


# --------------------------------------------------------------------------- #
# offset-form exponent evaluation
# --------------------------------------------------------------------------- #

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _gamma_ratio(a, b):
    """Gamma(a)/Gamma(b) at full relative precision.

    exp(gammaln(a) - gammaln(b)) loses absolute accuracy once gammaln is
    large (~eps * x log x), which caps root residuals near 1e-10 for deep
    brackets; where both arguments are comfortably positive the log-ratio is
    instead integrated as int_b^a psi(t) dt (12-point Gauss-Legendre), which
    is eps-accurate for |a - b| of a few units. Complex capable.
    """
    a = np.atleast_1d(np.asarray(a))
    b = np.atleast_1d(np.asarray(b))
    a, b = np.broadcast_arrays(a, b)
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        # continuation work runs at ~1e-9 tolerance: the plain log-difference
        # is accurate enough off the real axis and much cheaper
        return np.exp(loggamma(np.asarray(a, dtype=complex))
                      - loggamma(np.asarray(b, dtype=complex)))
    with np.errstate(all="ignore"):
        big = (a > 8.0) & (b > 8.0) & (np.abs(a - b) < 6.0)
        mid = np.where(big, 0.5 * (a + b), 10.0)
        half = np.where(big, 0.5 * (a - b), 0.0)
        t = mid[..., None] + half[..., None] * _GL_NODES
        lr = half * (digamma(t) @ _GL_WEIGHTS)
        direct = gammasgn(a) * gammasgn(b) * np.exp(gammaln(a) - gammaln(b))
        out = np.where(big, np.exp(lr), direct)
    return out


def _beta_pole_form(m, w, y):
    """B(-m - w, y) through the reflection identity, m integer >= 0.

    = -Gamma(y) * sin(pi (y - w)) / sin(pi w) * Gamma(1+m+w-y) / Gamma(1+m+w)

    Exact in w, so the value keeps full relative precision however close
    -m-w sits to the pole at -m. Complex w supported; roots continued far
    off the real lattice (|Im w| large, where sin overflows but no pole is
    near) fall back to the direct log-Gamma form, as does m = -1 (the first
    bracket, where -m-w = 1-w may cross positive integers).
    """
    m = np.asarray(m)
    w = np.asarray(w)
    gy = gammasgn(y) * np.exp(gammaln(y))
    direct = m < 0
    if np.iscomplexobj(w):
        direct = direct | (np.abs(np.imag(w)) > 12.0)
    ws = np.where(direct, 0.5, w)  # keep the reflection path off its artifacts
    out = -gy * np.sin(np.pi * (y - ws)) / np.sin(np.pi * ws) * _gamma_ratio(
        1.0 + m + ws - y, 1.0 + m + ws
    )
    if np.any(direct):
        out = np.where(direct, _beta_direct(-m - w + 0j, y) if np.iscomplexobj(w)
                       else _beta_direct(np.where(m < 0, 1.0 - w, -m - w), y), out)
    return out


def _beta_pole_form_pair(m, w, y):
    """(B(-m-w, y), dB/dw) computed together (shared ratio and digammas)."""
    m = np.asarray(m)
    w = np.asarray(w)
    direct = m < 0
    if np.iscomplexobj(w):
        direct = direct | (np.abs(np.imag(w)) > 12.0)
    ws = np.where(direct, 0.5, w)
    gy = gammasgn(y) * np.exp(gammaln(y))
    sy = np.sin(np.pi * (y - ws))
    sw = np.sin(np.pi * ws)
    da = digamma(1.0 + m + ws - y)
    db = digamma(1.0 + m + ws)
    b = -gy * sy / sw * _gamma_ratio(1.0 + m + ws - y, 1.0 + m + ws)
    d = b * (-np.pi * np.cos(np.pi * (y - ws)) / sy
             - np.pi * np.cos(np.pi * ws) / sw + da - db)
    if np.any(direct):
        if np.iscomplexobj(w):
            x = np.where(m < 0, 1.0 - w, -m - w) + 0j
        else:
            x = np.where(m < 0, 1.0 - w, -m - w)
        bd = _beta_direct(x, y)
        dd = bd * (digamma(x) - digamma(x + y))   # d/dx; dx/dw = -1
        b = np.where(direct, bd, b)
        d = np.where(direct, -dd, d)
    return b, d


def _beta_pole_form_dw(m, w, y):
    """d/dw of _beta_pole_form at fixed (m, y)."""
    return _beta_pole_form_pair(m, w, y)[1]


def _beta_direct(x, y):
    """B(x, y), complex- and negative-real-capable, no pole checks."""
    if np.iscomplexobj(x):
        return gammasgn(y) * np.exp(loggamma(x) + gammaln(y) - loggamma(x + y))
    return beta_real(x, y, check=False)


class _SideExponent:
    """Evaluates h(w) = lam + Psi(i * side * z(w)) in offset coordinates.

    z(w) = beta * (g0 + n - 1 + w) is the root magnitude; the Beta factor
    whose poles delimit the brackets is evaluated in reflection form.
    Bracket n >= 1 has w in (0, 1); bracket 0 has w in (1 - g0, 1).
    """

    def __init__(self, model: LevyModel, side: int):
        self.model = model
        self.side = side
        self.beta, self.g0 = model.root_grid(side)
        p = model.params
        if model.variant == "BetaFamily":
            if side < 0:
                self._pole = (p.c1, 1.0 - p.lambda1)
                self._oth = (p.c2, p.alpha2, p.beta2, 1.0 - p.lambda2)
            else:
                self._pole = (p.c2, 1.0 - p.lambda2)
                self._oth = (p.c1, p.alpha1, p.beta1, 1.0 - p.lambda1)
        else:
            s_pole, s_oth = (p.sub1, p.sub2) if side < 0 else (p.sub2, p.sub1)
            self._pole = (s_pole.c, -s_pole.gamma)
            self._sub_pole, self._sub_oth = s_pole, s_oth

    def z_of(self, n, w):
        return self.beta * (self.g0 + n - 1.0 + w)

    # -- beta family ---------------------------------------------------------
    def _h_beta(self, lam, n, w, deriv=False):
        p = self.model.params
        z = self.z_of(n, w)
        c_p, y_p = self._pole
        c_o, a_o, b_o, y_o = self._oth
        b0p = beta_real(self.g0, y_p)            # B(alpha_pole, 1-lambda_pole)
        b0o = beta_real(a_o, y_o)
        x_o = a_o + z / b_o
        bo = _beta_direct(x_o, y_o)
        drift = -p.a * (self.side * z)
        gauss = -0.5 * p.sigma**2 * z**2
        dz = self.beta  # d z / d w
        if not deriv:
            bp = _beta_pole_form(n - 1, w, y_p)
            return lam + drift + gauss + c_p / self.beta * (b0p - bp) + c_o / b_o * (b0o - bo)
        bp, dbp = _beta_pole_form_pair(n - 1, w, y_p)
        h = lam + drift + gauss + c_p / self.beta * (b0p - bp) + c_o / b_o * (b0o - bo)
        dbo = bo * (digamma(x_o) - digamma(x_o + y_o)) * (dz / b_o)
        dh = (
            -p.a * self.side * dz
            - p.sigma**2 * z * dz
            - c_p / self.beta * dbp
            - c_o / b_o * dbo
        )
        return h, dh

    # -- hypergeometric family ------------------------------------------------
    def _phi_pole(self, n, w, deriv=False):
        s = self._sub_pole
        z = self.z_of(n, w)
        b0 = beta_real(1.0 - s.alpha + s.gamma, -s.gamma)
        if not deriv:
            bp = _beta_pole_form(n - 1, w, -s.gamma)
            return s.kappa - s.delta * z + s.c / s.beta * (b0 - bp)
        bp, dbp = _beta_pole_form_pair(n - 1, w, -s.gamma)
        val = s.kappa - s.delta * z + s.c / s.beta * (b0 - bp)
        dv = -s.delta * self.beta - s.c / s.beta * dbp
        return val, dv

    def _phi_smooth(self, z, deriv=False):
        s = self._sub_oth
        base = 1.0 - s.alpha + s.gamma
        b0 = beta_real(base, -s.gamma)
        x = base + z / s.beta
        b = _beta_direct(x, -s.gamma)
        val = s.kappa + s.delta * z + s.c / s.beta * (b0 - b)
        if not deriv:
            return val
        dv = s.delta - s.c / s.beta**2 * b * (digamma(x) - digamma(x - s.gamma))
        return val, dv

    def _h_hyp(self, lam, n, w, deriv=False):
        p = self.model.params
        z = self.z_of(n, w)
        drift = -p.d * (self.side * z)
        gauss = -0.5 * p.sigma**2 * z**2
        if not deriv:
            return lam + drift + gauss + self._phi_pole(n, w) * self._phi_smooth(z)
        f1, df1 = self._phi_pole(n, w, deriv=True)
        f2, df2 = self._phi_smooth(z, deriv=True)
        h = lam + drift + gauss + f1 * f2
        dh = -p.d * self.side * self.beta - p.sigma**2 * z * self.beta + df1 * f2 + f1 * df2 * self.beta
        return h, dh

    def h(self, lam, n, w, deriv=False):
        if self.model.variant == "BetaFamily":
            return self._h_beta(lam, n, w, deriv)
        return self._h_hyp(lam, n, w, deriv)


# --------------------------------------------------------------------------- #
# root location
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class RootLadder:
    """Ordered roots of lam + Psi(i z) = 0 with bracket metadata.

    plus_roots are positive reals (roots i*zeta on the positive imaginary
    axis), minus_roots negative, both increasing in magnitude. offsets hold
    the within-bracket position w used for full-precision residual checks.
    """

    lam: float
    plus_roots: np.ndarray
    minus_roots: np.ndarray
    plus_offsets: np.ndarray
    minus_offsets: np.ndarray
    plus_brackets: np.ndarray   # (K+1, 2)
    minus_brackets: np.ndarray  # (K+1, 2) on the negative axis, (lo, hi)
    plus_residuals: np.ndarray
    minus_residuals: np.ndarray
    count: int

    def side(self, side: int):
        """(magnitudes, offsets, residuals) for one side."""
        if side > 0:
            return self.plus_roots, self.plus_offsets, self.plus_residuals
        return -self.minus_roots, self.minus_offsets, self.minus_residuals


def _solve_side(model: LevyModel, lam: float, count: int, side: int,
                seed_w=None):
    """Magnitudes, offsets and residuals of roots n = 0..count on one side.

    seed_w: optional array of offset seeds (NaN where no seed); seeded
    brackets try Newton first and fall back to bisection on failure.
    """
    ex = _SideExponent(model, side)
    n = np.arange(count + 1)
    raw_lo = np.where(n == 0, min(1.0 - ex.g0, 0.0), 0.0)
    width = 1.0 - raw_lo
    w_lo = raw_lo + BRACKET_INSET * width
    w_hi = 1.0 - BRACKET_INSET * width

    w = np.full(count + 1, np.nan)
    if seed_w is not None:
        cand = np.where((seed_w > w_lo) & (seed_w < w_hi), seed_w, np.nan)
        todo = np.isfinite(cand)
        wi = cand[todo]
        ni = n[todo]
        for _ in range(8):
            hval, hder = ex.h(lam, ni, wi, deriv=True)
            wn = wi - hval / hder
            wi = np.where((wn > w_lo[todo]) & (wn < w_hi[todo]) & np.isfinite(wn), wn, wi)
        res_i = np.abs(ex.h(lam, ni, wi))
        # accept only fully converged seeds; the rest go to bisection
        scale = np.maximum(lam, np.abs(ex.h(lam, ni, np.full_like(wi, 0.5))))
        good = res_i < 1e-11 * np.maximum(1.0, scale)
        w[n[todo][good]] = wi[good]

    rem = ~np.isfinite(w)
    if np.any(rem):
        ni = n[rem]
        lo = w_lo[rem].copy()
        hi = w_hi[rem].copy()
        flo = ex.h(lam, ni, lo)
        fhi = ex.h(lam, ni, hi)
        if np.any(np.sign(flo) == np.sign(fhi)):
            bad = int(ni[np.argmax(np.sign(flo) == np.sign(fhi))])
            raise RootLocationError(
                f"no sign change in bracket {bad} (side {side:+d}, lam={lam})"
            )
        it = max(45, int(np.ceil(-np.log2(BISECT_WIDTH))))
        for _ in range(it):
            mid = 0.5 * (lo + hi)
            fm = ex.h(lam, ni, mid)
            left = np.sign(fm) == np.sign(flo)
            lo = np.where(left, mid, lo)
            flo = np.where(left, fm, flo)
            hi = np.where(left, hi, mid)
        wb = 0.5 * (lo + hi)
        span = hi - lo
        for _ in range(NEWTON_POLISH):
            hval, hder = ex.h(lam, ni, wb, deriv=True)
            wn = wb - hval / hder
            # the converged bracket is only a few ulp wide; allow the polish
            # to step just past its edge but never accept a worse residual
            ok = (wn > lo - 4 * span) & (wn < hi + 4 * span) & np.isfinite(wn)
            cand = np.where(ok, wn, wb)
            better = np.abs(ex.h(lam, ni, cand)) <= np.abs(hval)
            wb = np.where(ok & better, cand, wb)
        w[rem] = wb
    res = np.abs(ex.h(lam, n, w))
    return ex.z_of(n, w), w, res


def locate_roots(model: LevyModel, lam: float, count: int,
                 asymptotic_from: int = 32) -> RootLadder:
    """Locate the first count+1 roots on each side of the imaginary axis."""
    if lam <= 0:
        raise ValueError("lam must be > 0")
    if count < 1:
        raise ValueError("count must be >= 1")
    seed_p = seed_m = None
    if model.variant == "Hypergeometric" and count >= asymptotic_from:
        seed_p = _hyp_seed(model, +1, count, asymptotic_from)
        seed_m = _hyp_seed(model, -1, count, asymptotic_from)
    zp, wp, rp = _solve_side(model, lam, count, +1, seed_w=seed_p)
    zm, wm, rm = _solve_side(model, lam, count, -1, seed_w=seed_m)
    bp, gp = model.root_grid(+1)
    bm, gm = model.root_grid(-1)
    n = np.arange(count + 1)
    upper_p = bp * (gp + n)
    lower_p = np.maximum(upper_p - bp, 0.0)
    upper_m = bm * (gm + n)
    lower_m = np.maximum(upper_m - bm, 0.0)
    return RootLadder(
        lam=lam,
        plus_roots=zp,
        minus_roots=-zm,
        plus_offsets=wp,
        minus_offsets=wm,
        plus_brackets=np.column_stack([lower_p, upper_p]),
        minus_brackets=np.column_stack([-upper_m, -lower_m]),
        plus_residuals=rp,
        minus_residuals=rm,
        count=count,
    )


def locate_roots_beta(model, lam: float, count: int) -> RootLadder:
    """Root ladder for a two-sided Beta-family model (params or LevyModel)."""
    if not isinstance(model, LevyModel):
        model = LevyModel("BetaFamily", model)
    if model.variant != "BetaFamily":
        raise ValueError("expected a BetaFamily model")
    return locate_roots(model, lam, count)


def _hyp_seed(model: LevyModel, side: int, count: int, start: int):
    """Offset seeds from the asymptote z_n ~ beta(n - alpha + omega) + C n^rho.

    The correction magnitude |C| n^rho is applied toward the bracket interior
    (the roots approach the upper pole from below); regimes without a defined
    constant return no seeds.
    """
    try:
        omega, C, rho = asymptotic_root_coefficients(model, side)
    except ValueError:
        return None
    if C is None:
        return None
    beta, g0 = model.root_grid(side)
    p = model.params
    alpha = p.sub1.alpha if side < 0 else p.sub2.alpha
    n = np.arange(count + 1).astype(float)
    z_seed = beta * (n - alpha + omega)
    w = z_seed / beta - (g0 + n - 1.0) - np.abs(C) * n**rho / beta
    w[: start] = np.nan
    return w


def locate_roots_hypergeometric(model, lam: float, count: int,
                                asymptotic_from: int = 32) -> RootLadder:
    """Root ladder for a hypergeometric model.

    For n >= asymptotic_from the coefficient-table asymptote seeds a Newton
    solve in the regimes where its constant is defined; brackets stay the
    authority (unconverged seeds fall back to bisection).
    """
    if not isinstance(model, LevyModel):
        model = LevyModel("Hypergeometric", model)
    if model.variant != "Hypergeometric":
        raise ValueError("expected a Hypergeometric model")
    return locate_roots(model, lam, count, asymptotic_from=asymptotic_from)


def asymptotic_root_coefficients(model: LevyModel, side: int = +1):
    """(omega, C, rho) of z_n ~ beta*(n - alpha + omega) + C*n^rho on ``side``.

    Returns C = None in the drift-dominated regime whose constant involves an
    undefined auxiliary quantity; callers then have no Newton seed and rely on
    bisection alone.
    """
    if model.variant != "Hypergeometric":
        raise ValueError("asymptotic table applies to hypergeometric models")
    p = model.params
    s_far, s_near = (p.sub1, p.sub2) if side > 0 else (p.sub2, p.sub1)
    # side>0 roots interlace the descending-ladder (sub2) pole lattice
    g, gf = s_near.gamma, s_far.gamma
    c, cf = s_near.c, s_far.c
    d_near, d_far = s_near.delta, s_far.delta
    b = p.beta
    sig2 = p.sigma**2
    gam1 = np.exp(gammaln(1.0 + g)) * gammasgn(1.0 + g)
    if sig2 > 0 and d_far > 0 and d_near > 0:
        return 1.0 + g, 2.0 * d_far * c / (b * gam1 * (sig2 + 2.0 * d_far * d_near)), g - 1.0
    if sig2 == 0 and d_far > 0 and d_near > 0:
        return 1.0 + g, c / (b * gam1 * d_near), g - 1.0
    if sig2 > 0 and d_near > 0 and d_far == 0:
        gfm = np.exp(gammaln(1.0 - gf)) * gammasgn(1.0 - gf)
        return 1.0 + g, 2.0 * cf * c * gfm / (b ** (3.0 + gf - g) * gam1 * gf * sig2), gf + g - 2.0
    if sig2 > 0 and d_far > 0 and d_near == 0:
        return 1.0 + g, 2.0 * d_far * c / (b * gam1 * sig2), g - 1.0
    if d_near > 0 and sig2 == 0 and d_far == 0:
        return 1.0 + g, c / (b * d_near * gam1), g - 1.0
    if d_far > 0 and sig2 == 0 and d_near == 0:
        return 0.0, None, -g   # constant not defined; bisection only
    if sig2 > 0 and d_far == 0 and d_near == 0:
        gfm = np.exp(gammaln(1.0 - gf)) * gammasgn(1.0 - gf)
        return 1.0 + g, 2.0 * cf * c * gfm / (b ** (3.0 + gf - g) * gam1 * gf * sig2), gf + g - 2.0
    # sigma = delta1 = delta2 = 0
    gm = np.exp(gammaln(1.0 - g)) * gammasgn(1.0 - g)
    const = (s_near.kappa + c / b * beta_real(1.0 + g - s_near.alpha, -g))
    return 1.0, b**2 * g / (c * gm) * np.sin(np.pi * g) / np.pi * const, -g


# --------------------------------------------------------------------------- #
# factor coefficients
# --------------------------------------------------------------------------- #

def _support_roots(model: LevyModel, lam: float, side: int, n_support: int):
    z, w, _ = _solve_side(model, lam, n_support, side)
    return z, w


def _hurwitz(s, a):
    """Hurwitz zeta(s, a) for large a by Euler-Maclaurin; complex s capable."""
    return a ** (1.0 - s) / (s - 1.0) + 0.5 * a ** (-s) + s * a ** (-s - 1.0) / 12.0


def _series_weights(beta: float, g0: float, z, w, K: int):
    """Weights, atom and deficit from support roots z with offsets w.

    Shared by the real factor laws and the complex-lam continuation: real
    input arrays give the real law, complex arrays the analytically
    continued one. z_n = beta*(g0 + n - 1 + w_n); the ladder grid is
    grid_n = beta*(g0 + n).
    """
    cplx = np.iscomplexobj(z)
    N = len(z) - 1
    grid = beta * (g0 + np.arange(N + 1))
    zk = z[: K + 1]
    wk = zk / beta

    num = 1.0 - zk[:, None] / grid[None, :]
    den = 1.0 - zk[:, None] / z[None, :]
    # near-diagonal entries from offsets (the plain differences cancel badly)
    idx = np.arange(K + 1)
    num[idx, idx] = (1.0 - w[: K + 1]) * beta / grid[idx]         # grid_k - z_k
    mask = idx >= 1
    num[idx[mask], idx[mask] - 1] = -w[idx[mask]] * beta / grid[idx[mask] - 1]
    den[idx, idx] = 1.0
    if np.any(den == 0.0):
        raise DegenerateLawError("coincident roots in weight product")
    core = np.prod(num / den, axis=1)

    u_ref = w[-1]
    M = N + 1
    if cplx:
        lg = loggamma
        lt = (
            lg(complex(M + g0))
            + lg(M + g0 - 1.0 + u_ref - wk)
            - lg(M + g0 - wk)
            - lg(complex(M + g0 - 1.0 + u_ref))
        )
    else:
        lt = (
            gammaln(M + g0)
            + gammaln(M + g0 - 1.0 + u_ref - wk)
            - gammaln(M + g0 - wk)
            - gammaln(M + g0 - 1.0 + u_ref)
        )
    weights = core * np.exp(lt)

    # atom: partial product over the support roots extrapolated through a
    # fitted power-law offset tail; offsets approaching the pole lattice from
    # below (u -> 0) mean the infinite product vanishes (regular side).
    n_idx = np.arange(N + 1)
    ratios = (g0 + n_idx - 1.0 + w) / (g0 + n_idx)
    if np.real(u_ref) > 0.5:
        log_part = np.log(ratios).sum()
        nn = np.arange(N // 2, N + 1).astype(float)
        resid = 1.0 - w[N // 2:]
        good = np.abs(resid) > 0
        A = np.column_stack([np.ones(int(good.sum())), np.log(nn[good])])
        rhs = np.log(resid[good].astype(complex)) if cplx else np.log(resid[good])
        sol, *_ = np.linalg.lstsq(A.astype(rhs.dtype), rhs, rcond=None)
        Cf, qf = np.exp(sol[0]), -sol[1]
        tail = Cf * (_hurwitz(1.0 + qf, N + 1.0 + g0)
                     - g0 * _hurwitz(2.0 + qf, N + 1.0 + g0))
        atom = np.exp(log_part - tail)
        atom = complex(atom) if cplx else float(np.real(atom))
    else:
        atom = 0.0
    deficit = 1.0 - atom - weights.sum()
    return zk, weights, atom, deficit


def _converged_weights(model: LevyModel, lam: float, side: int, K: int,
                       n_support: int):
    """Infinite-product weights for roots 0..K, plus atom and deficit."""
    beta, g0 = model.root_grid(side)
    z, w = _support_roots(model, lam, side, n_support)
    zk, weights, atom, deficit = _series_weights(beta, g0, z, w, K)
    return zk, weights, float(atom), float(deficit)


def _matched_weights(ladder: RootLadder, model: LevyModel, side: int):
    """Truncation-matched residue weights over the ladder's own root set.

    These are the partial-fraction coefficients of the rational function with
    the ladder's K+1 poles and the first K+1 lattice zeros; they satisfy
    1 - sum(weights) = prod_n z_n / grid_n exactly.
    """
    beta, g0 = model.root_grid(side)
    z, w, _ = ladder.side(side)
    K = ladder.count
    grid = beta * (g0 + np.arange(K + 1))
    num = 1.0 - z[:, None] / grid[None, :]
    den = 1.0 - z[:, None] / z[None, :]
    idx = np.arange(K + 1)
    num[idx, idx] = (1.0 - w) * beta / grid[idx]
    mask = idx >= 1
    num[idx[mask], idx[mask] - 1] = -w[idx[mask]] * beta / grid[idx[mask] - 1]
    den[idx, idx] = 1.0
    weights = np.prod(num / den, axis=1)
    partial_product = float(np.prod(z / grid))
    return weights, partial_product


def matched_coefficients(ladder: RootLadder, model: LevyModel, side: str):
    """(weights, partial_product) at matched truncation; see _matched_weights."""
    s = -1 if side == "sup" else +1
    return _matched_weights(ladder, model, s)


@dataclass
class FactorLaw:
    """Atom-plus-exponential-series law of the running extremum at an
    exponential time (sup: X-bar, inf: the law of -X-underbar >= 0).

    survival S(x) = sum_k weights_k exp(-rates_k x); S(0) + atom0 = 1. The
    last entry of rates/weights is the tail-compensation term when the
    truncated series mass was positive. tail_bound records that mass.
    """

    side: str                 # "sup" or "inf"
    lam: float
    atom0: float
    rates: np.ndarray
    weights: np.ndarray
    truncation: int
    tail_bound: float
    _table: Optional[tuple] = field(default=None, repr=False, compare=False)

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("survival defined on x >= 0")
        out = np.exp(-np.multiply.outer(x, self.rates)) @ self.weights
        return out if out.ndim else float(out)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(-np.multiply.outer(x, self.rates)) @ (self.weights * self.rates)
        return out if out.ndim else float(out)

    def cdf(self, x):
        return 1.0 - self.survival(x)

    def mean(self):
        return float(np.sum(self.weights / self.rates))

    def cf(self, theta):
        """E exp(i theta Y) for the signed extremum Y (sup: Y >= 0, inf: Y <= 0)."""
        th = np.asarray(theta, dtype=complex)
        sign = 1.0 if self.side == "sup" else -1.0
        r = self.rates[:, None]
        out = self.atom0 + np.sum(
            self.weights[:, None] * r / (r - 1j * sign * th[None, ...]), axis=0
        )
        return out if out.ndim else complex(out)

    # -- sampling -------------------------------------------------------------
    def _ensure_table(self, nodes: int = 4096):
        if self._table is not None:
            return self._table
        s0 = float(self.weights.sum())
        p_min = 1e-9 * s0
        levels = np.exp(np.linspace(np.log(s0), np.log(p_min), nodes))
        x = self._solve_survival(levels)
        self._table = (np.log(levels[::-1] / s0), x[::-1], s0)
        return self._table

    def _solve_survival(self, levels):
        """x with S(x) = level, bracketed Newton on the monotone survival."""
        x_lo = np.zeros_like(levels)
        x_hi = np.full_like(levels, 60.0 / self.rates.min())
        smallest = self.survival(np.array([x_hi[0]]))[()]
        tries = 0
        while np.any(smallest > levels.min()) and tries < 40:
            x_hi *= 2.0
            smallest = self.survival(np.array([x_hi[0]]))[()]
            tries += 1
        x = np.full_like(levels, 1.0 / self.lam)
        for _ in range(90):
            s = self.survival(x)
            up = s > levels
            x_lo = np.where(up, x, x_lo)
            x_hi = np.where(up, x_hi, x)
            d = self.density(x)
            xn = x + (s - levels) / np.maximum(d, 1e-300)
            bad = (xn <= x_lo) | (xn >= x_hi) | ~np.isfinite(xn)
            x = np.where(bad, 0.5 * (x_lo + x_hi), xn)
        err = np.abs(self.survival(x) - levels) / levels
        if err.max() > 1e-9:
            raise LawValidityError(
                f"survival solve stalled (max rel err {err.max():.2e}); "
                "non-monotone survival or truncation too coarse"
            )
        return x

    def quantile(self, u):
        """Generalized inverse CDF; returns 0 on the atom."""
        scalar = np.isscalar(u)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any((u <= 0) | (u >= 1)):
            raise ValueError("u must lie in (0,1)")
        logs, xs, s0 = self._ensure_table()
        p = 1.0 - u
        out = np.zeros_like(u)
        series = p < s0
        ps = np.minimum(p[series] / s0, 1.0)
        out[series] = np.interp(np.log(ps), logs, xs)
        deep = series & (p < s0 * 1e-9 * 1.0000001)
        if np.any(deep):
            out[deep] = self._solve_survival(p[deep])
        return float(out[0]) if scalar else out

    def sample(self, rng) -> float:
        return float(self.quantile(rng.random()))

    def sample_batch(self, u: np.ndarray) -> np.ndarray:
        return self.quantile(u)


@dataclass(frozen=True)
class FactorizationPair:
    """Sup and inf factor laws at one rate lam."""

    lam: float
    sup_law: FactorLaw
    inf_law: FactorLaw


def factor_coefficients(ladder: RootLadder, model: LevyModel, side: str,
                        n_support: int = 8192) -> FactorLaw:
    """Build a FactorLaw from a root ladder.

    side="sup" consumes the minus roots (law of the supremum), side="inf"
    the plus roots (law of minus the infimum).
    """
    if side not in ("sup", "inf"):
        raise ValueError("side must be 'sup' or 'inf'")
    s = -1 if side == "sup" else +1
    K = ladder.count
    n_support = max(n_support, 4 * K)
    rates, weights, atom, deficit = _converged_weights(
        model, ladder.lam, s, K, n_support
    )
    beta, _ = model.root_grid(s)
    if deficit > TAIL_WARN:
        warnings.warn(
            f"{side} law truncated mass {deficit:.2e} exceeds {TAIL_WARN:.0e} "
            f"at K={K}; folding into a tail compensation term",
            RuntimeWarning,
            stacklevel=2,
        )
    if deficit > 0:
        rates = np.append(rates, rates[-1] + beta)
        weights = np.append(weights, deficit)
    else:
        weights = weights * (1.0 - atom) / weights.sum()
    return FactorLaw(
        side=side,
        lam=ladder.lam,
        atom0=atom,
        rates=rates,
        weights=weights,
        truncation=K,
        tail_bound=abs(deficit),
    )


_PAIR_CACHE: dict = {}


def factor_laws(model: LevyModel, lam: float, K: int = 128,
                n_support: int = 8192, cache: bool = True) -> FactorizationPair:
    """Locate roots and build both factor laws, memoized on (model, lam, K)."""
    key = (model.content_hash(), float(lam), int(K), int(n_support))
    if cache and key in _PAIR_CACHE:
        return _PAIR_CACHE[key]
    ladder = locate_roots(model, lam, K)
    pair = FactorizationPair(
        lam=lam,
        sup_law=factor_coefficients(ladder, model, "sup", n_support),
        inf_law=factor_coefficients(ladder, model, "inf", n_support),
    )
    if cache:
        _PAIR_CACHE[key] = pair
    return pair


# --------------------------------------------------------------------------- #
# module-level functional forms of the law operations
# --------------------------------------------------------------------------- #

def factor_cf(law: FactorLaw, theta):
    return law.cf(theta)


def survival(law: FactorLaw, x):
    return law.survival(x)


def density(law: FactorLaw, x):
    return law.density(x)


def quantile(law: FactorLaw, u):
    return law.quantile(u)


def sample_factor(law: FactorLaw, rng):
    return law.sample(rng)


# --------------------------------------------------------------------------- #
# validation and serialization
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    warn: bool
    messages: tuple
    worst_point: Optional[float]
    worst_value: Optional[float]


def validate_law(law: FactorLaw, grid: Optional[np.ndarray] = None) -> ValidationReport:
    """Density nonnegativity, survival monotonicity, CF bound, mass balance."""
    if grid is None:
        grid = np.linspace(0.0, 40.0 / law.rates.min(), 2001)[1:]
    msgs = []
    worst_x = worst_v = None
    ok = True

    dens = law.density(grid)
    if np.any(dens < -1e-12):
        ok = False
        i = int(np.argmin(dens))
        worst_x, worst_v = float(grid[i]), float(dens[i])
        msgs.append(f"negative density {worst_v:.3e} at x={worst_x:.4g}")

    surv = law.survival(grid)
    d = np.diff(np.concatenate([[law.survival(0.0)], surv]))
    if np.any(d > 1e-12):
        ok = False
        i = int(np.argmax(d))
        worst_x, worst_v = float(grid[i]), float(d[i])
        msgs.append(f"survival increases by {worst_v:.3e} near x={worst_x:.4g}")
    if np.any(surv < -1e-12) or np.any(surv > 1.0 + 1e-12):
        ok = False
        msgs.append("survival left [0,1]")

    th = np.linspace(-25.0, 25.0, 101)
    cf = law.cf(th)
    if np.any(np.abs(cf) > 1.0 + 1e-9):
        ok = False
        msgs.append(f"CF modulus {np.abs(cf).max():.6f} exceeds 1")

    balance = abs(law.atom0 + law.weights.sum() - 1.0)
    if balance > 1e-10:
        ok = False
        msgs.append(f"mass balance off by {balance:.3e}")

    warn = law.tail_bound > TAIL_WARN
    if warn:
        msgs.append(f"estimated truncated mass {law.tail_bound:.2e} (truncation coarse)")
    return ValidationReport(passed=ok, warn=warn, messages=tuple(msgs),
                            worst_point=worst_x, worst_value=worst_v)


def law_to_json(law: FactorLaw) -> str:
    return json.dumps({
        "side": law.side,
        "lam": law.lam,
        "atom0": law.atom0,
        "rates": law.rates.tolist(),
        "weights": law.weights.tolist(),
        "truncation": law.truncation,
        "tail_bound": law.tail_bound,
    })


def law_from_json(doc) -> FactorLaw:
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    return FactorLaw(
        side=doc["side"],
        lam=float(doc["lam"]),
        atom0=float(doc["atom0"]),
        rates=np.asarray(doc["rates"], dtype=float),
        weights=np.asarray(doc["weights"], dtype=float),
        truncation=int(doc["truncation"]),
        tail_bound=float(doc["tail_bound"]),
    )
