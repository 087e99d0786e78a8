"""Principal Dirichlet eigenpair of the p-Laplacian with a potential.

Solves -div(|Du|^(p-2)Du) + phi*|u|^(p-2)u = lambda*|u|^(p-2)u for the
smallest eigenvalue and its positive eigenfunction (sup-normalized to 1),
and inverts the strictly increasing map alpha -> lambda1(alpha*b) that
fixes the scale of the small-q limit profile.

Algorithm: inverse-power outer loop.  The potential is shifted by a
constant so its minimum is 1 (the eigenvalue shifts by the exact same
constant, which is removed afterwards); each outer step solves the shifted
resolvent problem

    -div(flux(Dv)) + phi' * v^(p-1) = mu_k * u_k^(p-1)

by damped Newton on a strictly diagonally dominant tridiagonal system,
then renormalizes v to sup-norm 1 and Rayleigh-updates mu.  A projected
descent step on the Rayleigh quotient is the fallback when the linear
step stalls.  The flux regularization eps is continued through
{1e-2, 1e-4, 1e-6, 1e-8}; the reported residual is at the final eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import AlphaOutOfRange, NoConvergence
from .mesh import Field, Grid1D, build_grid, detect_zero_set
from .plap_core import (
    _apply_interior,
    _flux_jacobian_arrays,
    safe_pow,
)

__all__ = [
    "EigenResult",
    "AlphaResult",
    "principal_eigenpair",
    "solve_alpha",
    "lambda_curve",
    "EPS_SCHEDULE",
]

EPS_SCHEDULE = (1e-2, 1e-4, 1e-6, 1e-8)


@dataclass(frozen=True)
class EigenResult:
    """Principal eigenvalue `lam` and positive eigenfunction U, sup(U) = 1."""

    lam: float
    U: Field
    iterations: int
    residual: float


@dataclass(frozen=True)
class AlphaResult:
    """Scale alpha with lambda1(alpha*b) = a, plus its eigenpair and bracket."""

    alpha: float
    eigen: EigenResult
    bracket: tuple


def _bump(grid: Grid1D) -> np.ndarray:
    x = (grid.nodes - grid.x_left) / (grid.x_right - grid.x_left)
    return np.sin(math.pi * x)


def _mu(values: np.ndarray, phi_int: np.ndarray, p: float, eps: float, h: float):
    """Operator Rayleigh quotient <A(u) + phi u^(p-1), u> / <u^(p-1), u>."""
    s = np.diff(values) / h
    flux_part = np.sum(s * s * (s * s + eps * eps) ** ((p - 2.0) / 2.0))
    ui = values[1:-1]
    up = safe_pow(ui, p)
    return (flux_part + float(phi_int @ up)) / float(np.sum(up))


def _eig_residual_int(
    values: np.ndarray, phi_int: np.ndarray, lam: float, p: float, eps: float, h: float
) -> np.ndarray:
    return (
        _apply_interior(values, p, eps, h)
        + (phi_int - lam) * safe_pow(values[1:-1], p - 1.0)
    )


def _resolvent_newton(
    values: np.ndarray,
    phi_int: np.ndarray,
    rhs: np.ndarray,
    p: float,
    eps: float,
    h: float,
    tol: float,
    max_iters: int = 60,
) -> Optional[np.ndarray]:
    """Solve A(v) + phi*v^(p-1) = rhs (phi >= 1 > 0) by damped Newton.

    Returns the full-length solution array or None on failure.  The
    Jacobian is an irreducible M-matrix for v > 0, so the solve is benign;
    damping only guards the transient.
    """
    v = values.copy()
    r = _apply_interior(v, p, eps, h) + phi_int * safe_pow(v[1:-1], p - 1.0) - rhs
    merit = float(r @ r)
    start_res = float(np.max(np.abs(r)))
    for _ in range(max_iters):
        res = float(np.max(np.abs(r)))
        if res <= tol:
            return v
        jac = _flux_jacobian_arrays(v, p, eps, h).with_diagonal_added(
            (p - 1.0) * phi_int * safe_pow(v[1:-1], p - 2.0)
        )
        step = jac.solve(-r)
        t = 1.0
        improved = False
        for _ in range(25):
            trial = v.copy()
            trial[1:-1] = np.maximum(v[1:-1] + t * step, 0.0)
            r_trial = (
                _apply_interior(trial, p, eps, h)
                + phi_int * safe_pow(trial[1:-1], p - 1.0)
                - rhs
            )
            merit_trial = float(r_trial @ r_trial)
            if merit_trial <= merit * (1.0 - 1e-4 * t) or merit_trial <= tol * tol:
                v, r, merit = trial, r_trial, merit_trial
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    # Roundoff can pin the inner residual above an aggressive tol; a
    # substantially improved iterate is still useful to the outer loop.
    res = float(np.max(np.abs(r)))
    if res <= tol or res <= 0.5 * start_res:
        return v
    return None


def _rayleigh_descent(
    values: np.ndarray, phi_int: np.ndarray, p: float, eps: float, h: float
) -> Optional[np.ndarray]:
    """Projected gradient fallback: decrease the Rayleigh quotient directly."""
    lam = _mu(values, phi_int, p, eps, h)
    g = _eig_residual_int(values, phi_int, lam, p, eps, h)
    t = 0.1 / max(1.0, float(np.max(np.abs(g))))
    for _ in range(40):
        trial = values.copy()
        trial[1:-1] = np.maximum(values[1:-1] - t * g, 0.0)
        m = np.max(trial)
        if m > 0.0:
            trial /= m
            if _mu(trial, phi_int, p, eps, h) < lam:
                return trial
        t *= 0.5
    return None


def principal_eigenpair(
    grid: Grid1D,
    phi: Field,
    p: float,
    tol: float = 1e-8,
    *,
    init: Optional[Field] = None,
    max_outer: int = 400,
) -> EigenResult:
    """Smallest eigenvalue and positive sup-normalized eigenfunction."""
    grid.require_same(phi.grid)
    if not tol > 0:
        raise ValueError(f"need tol > 0, got {tol}")
    if not p > 1:
        raise ValueError(f"need p > 1, got {p}")
    phi_arr = np.asarray(phi.values, dtype=float)
    if not np.all(np.isfinite(phi_arr)):
        raise ValueError("phi must be bounded")
    h = grid.h

    # Shift the potential so its interior minimum is exactly 1: the shifted
    # problem has a positive potential (M-matrix resolvent) and its
    # eigenvalue is the original one plus the same constant.
    shift = 1.0 - float(np.min(phi_arr[1:-1]))
    phi_int = phi_arr[1:-1] + shift

    if init is not None:
        grid.require_same(init.grid)
        u = np.maximum(init.values.copy(), 0.0)
    else:
        u = _bump(grid)
    u[0] = u[-1] = 0.0
    m = float(np.max(u))
    if m <= 0.0:
        u = _bump(grid)
        m = float(np.max(u))
    u = u / m

    iterations = 0
    lam_shifted = _mu(u, phi_int, p, EPS_SCHEDULE[0], h)
    for stage, eps in enumerate(EPS_SCHEDULE):
        final = stage == len(EPS_SCHEDULE) - 1
        scale = max(1.0, abs(lam_shifted))
        target = tol if final else max(tol, 1e-6 * scale)
        best = math.inf
        stale = 0
        converged = False
        for _ in range(max_outer):
            lam_shifted = _mu(u, phi_int, p, eps, h)
            g = _eig_residual_int(u, phi_int, lam_shifted, p, eps, h)
            res = float(np.max(np.abs(g)))
            iterations += 1
            if res <= target:
                converged = True
                break
            if res < 0.999 * best:
                best, stale = res, 0
            else:
                stale += 1
            v = None
            if stale <= 20:
                rhs = lam_shifted * safe_pow(u[1:-1], p - 1.0)
                v = _resolvent_newton(
                    u, phi_int, rhs, p, eps, h, tol=max(0.01 * res, 1e-13 * scale)
                )
            if v is None:
                v = _rayleigh_descent(u, phi_int, p, eps, h)
                stale = 0
            if v is None:
                break
            m = float(np.max(v))
            if m <= 0.0:
                break
            u = v / m
        if final and not converged:
            raise NoConvergence(
                f"eigenpair residual {res:.3e} > tol {tol:.3e}",
                iterations=iterations,
                residual=res,
            )

    lam = lam_shifted - shift
    U = Field.from_values(grid, u)
    residual = float(
        np.max(np.abs(_eig_residual_int(u, phi_arr[1:-1], lam, p, EPS_SCHEDULE[-1], h)))
    )
    return EigenResult(lam=lam, U=U, iterations=iterations, residual=residual)


def _subdomain_lambda1(b: Field, p: float, tol: float) -> Optional[float]:
    """lambda1 of the zero set of b (Dirichlet at the zero-run endpoints)."""
    mask = detect_zero_set(b)
    if mask is None:
        return None
    span = mask.node_span()
    if span is None or span[1] - span[0] < 4:
        return None
    j, k = span
    nodes = b.grid.nodes
    sub = build_grid(nodes[j], nodes[k], k - j)
    eig = principal_eigenpair(sub, Field.zeros(sub), p, tol)
    return eig.lam


def solve_alpha(
    grid: Grid1D, b: Field, a: float, p: float, tol: float = 1e-8
) -> AlphaResult:
    """Bisection on the strictly increasing map alpha -> lambda1(alpha*b).

    Returns alpha with |lambda1(alpha*b) - a| <= tol*max(1, |a|).  Raises
    AlphaOutOfRange when a < lambda1, or, for b vanishing on an interior
    interval, when a is at or above lambda1 of that interval (the map
    saturates below a in that regime).
    """
    grid.require_same(b.grid)
    eig0 = principal_eigenpair(grid, Field.zeros(grid), p, tol)
    scale = tol * max(1.0, abs(a))
    if a < eig0.lam - scale:
        raise AlphaOutOfRange(f"a = {a} below lambda1 = {eig0.lam}")
    if abs(a - eig0.lam) <= scale:
        return AlphaResult(alpha=0.0, eigen=eig0, bracket=(0.0, 0.0))

    lam_sub = _subdomain_lambda1(b, p, tol)
    if lam_sub is not None and a >= lam_sub - scale:
        raise AlphaOutOfRange(
            f"a = {a} at or above lambda1 = {lam_sub} of the zero set of b"
        )

    warm = eig0.U

    def eig_at(alpha: float) -> EigenResult:
        nonlocal warm
        res = principal_eigenpair(
            grid, Field.from_values(grid, alpha * b.values), p, tol, init=warm
        )
        warm = res.U
        return res

    hi = 1.0
    eig_hi = eig_at(hi)
    while eig_hi.lam <= a:
        hi *= 2.0
        if hi > 1e8:
            raise AlphaOutOfRange("lambda1(alpha*b) stays below a up to alpha = 1e8")
        eig_hi = eig_at(hi)
    lo = 0.0

    alpha, eig = hi, eig_hi
    if abs(eig.lam - a) > scale:
        for _ in range(300):
            mid = 0.5 * (lo + hi)
            eig_mid = eig_at(mid)
            alpha, eig = mid, eig_mid
            if abs(eig_mid.lam - a) <= scale:
                break
            if eig_mid.lam < a:
                lo = mid
            else:
                hi = mid
        else:
            raise NoConvergence(
                f"alpha bisection stalled at |lambda - a| = {abs(eig.lam - a):.3e}"
            )
    return AlphaResult(alpha=alpha, eigen=eig, bracket=(lo, hi))


def lambda_curve(
    grid: Grid1D,
    b: Field,
    alphas: Sequence[float],
    p: float,
    tol: float = 1e-8,
) -> list:
    """(alpha, lambda1(alpha*b)) along an increasing nonnegative schedule."""
    alphas = [float(a) for a in alphas]
    if any(a < 0 for a in alphas) or any(
        a2 <= a1 for a1, a2 in zip(alphas, alphas[1:])
    ):
        raise ValueError("alphas must be increasing and nonnegative")
    out = []
    warm = None
    for alpha in alphas:
        eig = principal_eigenpair(
            grid, Field.from_values(grid, alpha * b.values), p, tol, init=warm
        )
        warm = eig.U
        out.append((alpha, eig.lam))
    return out
