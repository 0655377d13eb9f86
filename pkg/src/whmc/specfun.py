"""Log-space Beta/Gamma helpers and a direct Gauss 2F1 power series.

All Beta evaluations go through log-Gamma so that root scans can cross
large negative arguments without overflow. Real arguments use gammaln +
gammasgn (sign tracked separately); complex arguments use the principal
branch of loggamma, which is safe off the negative real axis.
"""

from __future__ import annotations

import numpy as np
from scipy.special import digamma, gammaln, gammasgn, loggamma

__all__ = [
    "EvaluationError",
    "beta_real",
    "beta_complex",
    "beta_near_pole",
    "digamma_diff",
    "hyp2f1_series",
]

#: arguments this close to a nonpositive integer are treated as poles
POLE_TOL = 1e-12


class EvaluationError(ArithmeticError):
    """Special-function argument hit (or grazed) a pole."""


def _is_nonpos_int(x, tol=POLE_TOL):
    x = np.asarray(x)
    r = np.real(x)
    near = np.abs(r - np.round(r)) <= tol * np.maximum(1.0, np.abs(r))
    if np.iscomplexobj(x):
        near = near & (np.abs(np.imag(x)) <= tol)
    return near & (r <= tol)


def beta_near_pole(x, y):
    """True where B(x, y) has a pole at x or y (nonpositive-integer argument)."""
    return _is_nonpos_int(x) | _is_nonpos_int(y)


def beta_real(x, y, check=True):
    """B(x, y) = Gamma(x)Gamma(y)/Gamma(x+y) for real arguments.

    Handles negative non-integer arguments; exact zeros of B (x+y at a
    nonpositive integer) return 0.0. Poles raise EvaluationError when
    ``check`` is set, otherwise propagate +-inf.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if check and np.any(beta_near_pole(x, y)):
        raise EvaluationError("Beta argument within tolerance of a nonpositive integer")
    s = x + y
    lb = gammaln(x) + gammaln(y) - gammaln(s)
    sg = gammasgn(x) * gammasgn(y) * gammasgn(s)
    # Gamma(s) pole in the denominator is a zero of B, not a pole.
    zero = (s == np.round(s)) & (s <= 0)
    out = np.where(zero, 0.0, sg * np.exp(lb))
    return out if out.ndim else float(out)


def beta_complex(x, y, check=True):
    """B(x, y) for complex x and real y (the case the exponents need)."""
    x = np.asarray(x, dtype=complex)
    if check and np.any(beta_near_pole(x, y)):
        raise EvaluationError("Beta argument within tolerance of a nonpositive integer")
    s = x + y
    lb = loggamma(x) + (gammaln(y) if np.isrealobj(y) else loggamma(y)) - loggamma(s)
    sg = gammasgn(y) if np.isrealobj(y) else 1.0
    # loggamma's branch cut is the negative real axis; purely real negative
    # arguments would land on it, so route those through the real path.
    on_cut = (np.imag(x) == 0) & (np.real(x) < 0)
    if np.any(on_cut):
        out = np.asarray(sg * np.exp(lb), dtype=complex)
        xr = np.real(x)
        out[on_cut] = beta_real(xr[on_cut] if xr.ndim else xr, y, check=check)
        return out if out.ndim else complex(out)
    out = sg * np.exp(lb)
    return out if out.ndim else complex(out)


def digamma_diff(x, y):
    """psi(x) - psi(x + y): the logarithmic derivative of B(x, y) in x."""
    x = np.asarray(x)
    return digamma(x) - digamma(x + y)


def hyp2f1_series(a, b, c, z, rtol=1e-14, max_terms=100_000):
    """Gauss 2F1(a, b; c; z) by direct power series, |z| < 1.

    Terms are accumulated until the running term falls below ``rtol`` times
    the partial sum. The argument regime used by the jump densities is
    z = exp(-beta*x) in (0, 1), where convergence is geometric.
    """
    if _is_nonpos_int(c):
        raise EvaluationError("2F1 lower parameter at a nonpositive integer")
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1.0):
        raise EvaluationError("2F1 series requires |z| < 1")
    total = np.ones_like(z)
    term = np.ones_like(z)
    for n in range(max_terms):
        term = term * ((a + n) * (b + n)) / ((c + n) * (1.0 + n)) * z
        total = total + term
        if np.all(np.abs(term) <= rtol * np.maximum(np.abs(total), 1e-300)):
            return total if total.ndim else float(total)
    raise EvaluationError("2F1 series did not converge")
