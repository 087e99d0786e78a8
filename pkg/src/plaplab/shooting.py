"""Independent ODE shooting oracles for 1-D cross-checks.

These routines never touch the finite-difference kernel: they integrate
the first-order flux system with scipy's adaptive Runge-Kutta and exist so
that eigenvalues and solution amplitudes can be verified against a second,
unrelated discretization.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

__all__ = ["pi_p", "lambda1_closed_form", "shooting_lambda1", "shooting_logistic_sup"]


def pi_p(p: float) -> float:
    """Half-period of the generalized sine: 2*pi / (p * sin(pi/p))."""
    return 2.0 * math.pi / (p * math.sin(math.pi / p))


def lambda1_closed_form(p: float, length: float) -> float:
    """First Dirichlet eigenvalue of -(|u'|^(p-2)u')' on an interval."""
    return (p - 1.0) * (pi_p(p) / length) ** p


def _sign_power(x: float, k: float) -> float:
    return math.copysign(abs(x) ** k, x)


def shooting_lambda1(p: float, length: float, rtol: float = 1e-11) -> float:
    """First eigenvalue via the flux system u' = |F|^(1/(p-1)-1) F, F' = -u^(p-1).

    Integrates with lambda = 1 from (u, F) = (0, 1) until u returns to zero;
    by p-homogeneous rescaling the eigenvalue on (0, length) is
    (first_zero / length)^p.
    """
    k = 1.0 / (p - 1.0)

    def rhs(t, y):
        u, flux = y
        return [_sign_power(flux, k), -_sign_power(u, p - 1.0)]

    def hit_zero(t, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1.0

    t_max = 4.0 * pi_p(p)
    sol = solve_ivp(
        rhs,
        (0.0, t_max),
        [0.0, 1.0],
        events=hit_zero,
        rtol=rtol,
        atol=1e-13,
        dense_output=True,
        method="DOP853",
    )
    if not sol.t_events[0].size:
        raise RuntimeError("shooting oracle found no zero crossing")
    first_zero = float(sol.t_events[0][0])
    return (first_zero / length) ** p


def _integrate_logistic(slope0: float, a: float, q: float, length: float, rtol: float):
    """Integrate -u'' = a*u - u^q from u(0)=0, u'(0)=slope0 over (0, length)."""

    def rhs(t, y):
        u, du = y
        return [du, -(a * u - _sign_power(u, q))]

    sol = solve_ivp(
        rhs,
        (0.0, length),
        [0.0, slope0],
        rtol=rtol,
        atol=1e-13,
        dense_output=True,
        method="DOP853",
    )
    return sol


def shooting_logistic_sup(
    a: float, q: float, length: float = 1.0, rtol: float = 1e-11
) -> float:
    """Sup-norm of the positive solution of -u'' = a*u - u^q, u(0)=u(L)=0.

    p = 2 only.  Shoots on the initial slope with bisection on u(L); the
    positive solution exists for a > (pi/length)^2 and is symmetric, so the
    endpoint value is monotone in the initial slope on the relevant bracket.
    """
    lam1 = (math.pi / length) ** 2
    if a <= lam1:
        raise ValueError(f"no positive solution for a = {a} <= {lam1}")

    def end_value(slope0: float) -> float:
        sol = _integrate_logistic(slope0, a, q, length, rtol)
        return float(sol.y[0, -1])

    # Small slopes give eigenfunction-like arcs that dip negative before L;
    # large slopes overshoot. Bracket by scanning a geometric slope ladder.
    lo = None
    hi = None
    s = 1e-6
    while s < 1e12:
        v = end_value(s)
        if v < 0.0:
            lo = s
        else:
            hi = s
            break
        s *= 2.0
    if lo is None or hi is None:
        raise RuntimeError("failed to bracket the shooting slope")
    slope = brentq(end_value, lo, hi, xtol=1e-14, rtol=1e-15)
    sol = _integrate_logistic(slope, a, q, length, rtol)
    ts = np.linspace(0.0, length, 20001)
    return float(np.max(sol.sol(ts)[0]))
