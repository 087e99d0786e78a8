"""Unique positive solution of -div(|Du|^(p-2)Du) = a*u^(p-1) - b(x)*u^q.

The solve runs in scaled variables: with M = sup(u), w = u/M, and
m = M^(q-p+1), the problem becomes

    -div(flux(Dw)) = a*w^(p-1) - m*b(x)*w^q,   sup(w) = 1,

which stays O(1) even where M itself overflows or underflows (q near
p-1).  A damped Newton iteration solves for (w, m) jointly: the node
carrying the maximum is pinned at 1 and the scalar m absorbs the freed
equation (bordered tridiagonal solve).  Regularization eps is continued
through {1e-2, 1e-4, 1e-6, 1e-8}; the reported residual is the sup-norm
of the scaled equation at the final eps.

Existence is checked before any Newton step: a at or below lambda1 of the
domain means no positive solution, and when b vanishes on an interior
interval, a at or above lambda1 of that interval does too.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AlphaOutOfRange, InfeasibleWindow, NegativeCoefficient, NoConvergence
from .eigensolver import EPS_SCHEDULE, principal_eigenpair, solve_alpha, _subdomain_lambda1
from .mesh import Field, Grid1D
from .plap_core import (
    PLapParams,
    POW_CAP,
    TridiagonalOperator,
    _apply_interior,
    _flux_jacobian_arrays,
    safe_pow,
)

__all__ = [
    "Existence",
    "LogisticResult",
    "solve_logistic",
    "default_init",
    "monotonicity_check",
]


class Existence(enum.Enum):
    EXISTS = "exists"
    BELOW_LAMBDA1 = "below-lambda1"
    ABOVE_LAMBDA_OMEGA0 = "above-lambda-omega0"


@dataclass(frozen=True)
class LogisticResult:
    """Positive solution with diagnostics.

    M is sup(u) (capped at 1e300; ln_M is always exact), alpha_q is
    M^(q-p+1), i.e. the coefficient multiplying b in the equation solved
    by u/M, and profile is u/M itself.
    """

    u: Field
    M: float
    iterations: int
    residual: float
    eps_final: float
    existence: Existence
    ln_M: float
    alpha_q: float
    profile: Field


def _scaled_residual(w, m, b_int, p, a, q, eps, h):
    return (
        _apply_interior(w, p, eps, h)
        - a * safe_pow(w[1:-1], p - 1.0)
        + m * b_int * safe_pow(w[1:-1], q)
    )


def _scaled_newton(w, m, b_int, p, a, q, eps, h, tol, max_iters):
    """Damped bordered Newton on the scaled system; returns (w, m, iters, res).

    Returns None on failure.  w enters and leaves sup-normalized with the
    maximum node exactly 1; m stays positive.
    """
    t_exp = q - p + 1.0
    r = _scaled_residual(w, m, b_int, p, a, q, eps, h)
    merit = float(r @ r)
    iters = 0
    for _ in range(max_iters):
        res = float(np.max(np.abs(r)))
        if res <= tol:
            return w, m, iters, res
        iters += 1
        k = int(np.argmax(w[1:-1]))  # pinned interior index
        wi = w[1:-1]
        reaction = -a * (p - 1.0) * safe_pow(wi, p - 2.0) + m * q * b_int * safe_pow(
            wi, q - 1.0
        )
        jac = _flux_jacobian_arrays(w, p, eps, h).with_diagonal_added(reaction)
        row = (jac.sub[k], jac.diag[k], jac.sup[k])
        gcol = b_int * safe_pow(wi, q)

        sub = jac.sub.copy()
        diag = jac.diag.copy()
        sup = jac.sup.copy()
        sub[k] = 0.0
        diag[k] = 1.0
        sup[k] = 0.0
        jac_pinned = TridiagonalOperator(sub, diag, sup)

        rhs1 = -r.copy()
        rhs1[k] = 0.0
        rhs2 = -gcol.copy()
        rhs2[k] = 0.0
        s1 = jac_pinned.solve(rhs1)
        s2 = jac_pinned.solve(rhs2)

        def row_dot(vec):
            total = row[1] * vec[k]
            if k > 0:
                total += row[0] * vec[k - 1]
            if k < len(vec) - 1:
                total += row[2] * vec[k + 1]
            return total

        denom = row_dot(s2) + gcol[k]
        if not np.isfinite(denom) or abs(denom) < 1e-300:
            return None
        dm = -(r[k] + row_dot(s1)) / denom
        dw = s1 + dm * s2

        t = 1.0
        if dm < 0.0:
            t = min(t, -0.95 * m / dm)  # keep m positive
        accepted = False
        for _ in range(30):
            trial = w.copy()
            trial[1:-1] = np.maximum(w[1:-1] + t * dw, 0.0)
            m_trial = m + t * dm
            r_trial = _scaled_residual(trial, m_trial, b_int, p, a, q, eps, h)
            merit_trial = float(r_trial @ r_trial)
            if merit_trial <= merit * (1.0 - 1e-4 * t) or merit_trial <= tol * tol:
                c = float(np.max(trial))
                if c <= 0.0 or not np.isfinite(merit_trial):
                    break
                w = trial / c
                m = m_trial * math.exp(t_exp * math.log(c))
                r = _scaled_residual(w, m, b_int, p, a, q, eps, h)
                merit = float(r @ r)
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return None
    res = float(np.max(np.abs(r)))
    if res <= tol:
        return w, m, iters, res
    return None


def _normalize_init(values: np.ndarray, t_exp: float):
    """Split a positive field into (profile, m) for the scaled system."""
    v = np.maximum(np.asarray(values, dtype=float), 0.0)
    v[0] = v[-1] = 0.0
    sup = float(np.max(v))
    if sup <= 0.0:
        return None
    return v / sup, math.exp(t_exp * math.log(sup))


def solve_logistic(
    grid: Grid1D,
    b: Field,
    params: PLapParams,
    init: Optional[Field] = None,
    tol: float = 1e-8,
    *,
    init_profile=None,
    lambda1: Optional[float] = None,
    lambda_omega0: Optional[float] = None,
    max_iters: int = 120,
) -> LogisticResult:
    """Solve the logistic problem for one (p, a, q, b); verdicts cover
    nonexistence, NoConvergence covers solver failure.

    init is an unscaled positive field; init_profile = (w, ln_M) passes a
    warm start in scaled variables (used by the q-sweeps).  lambda1 /
    lambda_omega0 short-circuit the existence eigensolves when the caller
    already knows them.
    """
    grid.require_same(b.grid)
    if np.any(b.values < 0):
        raise NegativeCoefficient("b must be nonnegative")
    p, a, q = params.p, params.a, params.q
    t_exp = q - p + 1.0

    if lambda1 is None:
        lambda1 = principal_eigenpair(grid, Field.zeros(grid), p, tol).lam
    zeros = Field.zeros(grid)
    if a <= lambda1:
        return LogisticResult(
            u=zeros, M=0.0, iterations=0, residual=0.0,
            eps_final=params.eps, existence=Existence.BELOW_LAMBDA1,
            ln_M=-math.inf, alpha_q=0.0, profile=zeros,
        )
    if lambda_omega0 is None:
        lambda_omega0 = _subdomain_lambda1(b, p, tol)
    if lambda_omega0 is not None and a >= lambda_omega0:
        return LogisticResult(
            u=zeros, M=0.0, iterations=0, residual=0.0,
            eps_final=params.eps, existence=Existence.ABOVE_LAMBDA_OMEGA0,
            ln_M=math.inf, alpha_q=0.0, profile=zeros,
        )

    b_int = b.values[1:-1]
    min_b = float(np.min(b.values))

    def default_start():
        try:
            ar = solve_alpha(grid, b, a, p, tol)
            if ar.alpha > 0.0:
                return ar.eigen.U.values.copy(), ar.alpha
        except AlphaOutOfRange:
            pass
        eig = principal_eigenpair(grid, Field.zeros(grid), p, tol)
        return eig.U.values.copy(), 1.0

    def candidate_starts():
        if init_profile is not None:
            w0, ln_m0 = init_profile
            arr = np.asarray(w0.values if isinstance(w0, Field) else w0, dtype=float)
            pair = _normalize_init(arr, t_exp)
            if pair is not None:
                yield pair[0], pair[1] * math.exp(t_exp * ln_m0)
        elif init is not None:
            grid.require_same(init.grid)
            pair = _normalize_init(init.values, t_exp)
            if pair is not None:
                yield pair
        w_def, m_def = default_start()
        yield w_def.copy(), m_def
        yield w_def.copy(), 0.5 * m_def

    stages = [e for e in EPS_SCHEDULE[:-1] if e > params.eps] + [params.eps]
    scale = max(1.0, abs(a))
    total_iters = 0
    failure = None
    for w0, m0 in candidate_starts():
        if min_b > 0.0:
            m0 = min(m0, 0.999 * a / min_b)
        w = w0.copy()
        w[0] = w[-1] = 0.0
        c = float(np.max(w))
        if c <= 0:
            continue
        w /= c
        m = max(m0, 1e-300)
        ok = True
        res = math.inf
        for eps in stages:
            stage_tol = tol if eps == stages[-1] else max(tol, 1e-6 * scale)
            out = _scaled_newton(w, m, b_int, p, a, q, eps, grid.h, stage_tol, max_iters)
            if out is None:
                ok = False
                break
            w, m, its, res = out
            total_iters += its
        if ok:
            ln_M = math.log(m) / t_exp
            M = math.exp(min(ln_M, math.log(POW_CAP)))
            with np.errstate(over="ignore", under="ignore"):
                u_vals = np.minimum(M * w, POW_CAP)
            profile = Field.from_values(grid, w)
            return LogisticResult(
                u=Field.from_values(grid, u_vals),
                M=M,
                iterations=total_iters,
                residual=res,
                eps_final=params.eps,
                existence=Existence.EXISTS,
                ln_M=ln_M,
                alpha_q=m,
                profile=profile,
            )
        failure = res
    raise NoConvergence(
        f"logistic solve failed for p={p}, a={a}, q={q}",
        iterations=total_iters,
        residual=failure,
    )


def default_init(grid: Grid1D, b: Field, params: PLapParams, tol: float = 1e-8) -> Field:
    """Leading-order profile alpha^(1/(q-p+1)) * U_alpha (capped at 1e300).

    Falls back to half the principal eigenfunction when the scale relation
    has no solution.
    """
    try:
        ar = solve_alpha(grid, b, params.a, params.p, tol)
    except AlphaOutOfRange:
        eig = principal_eigenpair(grid, Field.zeros(grid), params.p, tol)
        return Field.from_values(grid, 0.5 * eig.U.values)
    t_exp = params.q - params.p + 1.0
    if ar.alpha <= 0.0:
        amp = 0.0
    else:
        with np.errstate(over="ignore", under="ignore"):
            amp = math.exp(min(math.log(ar.alpha) / t_exp, math.log(POW_CAP)))
    return Field.from_values(grid, amp * ar.eigen.U.values)


def monotonicity_check(
    grid: Grid1D,
    b: Field,
    p: float,
    q: float,
    a1: float,
    a2: float,
    tol: float = 1e-8,
) -> bool:
    """True iff the solution at a1 sits below the one at a2 (plus 1e-8)."""
    if a1 > a2:
        raise ValueError(f"need a1 <= a2, got {a1} > {a2}")
    lam1 = principal_eigenpair(grid, Field.zeros(grid), p, tol).lam
    out = []
    for a in (a1, a2):
        res = solve_logistic(
            grid, b, PLapParams(p=p, a=a, q=q), tol=tol, lambda1=lam1
        )
        if res.existence is not Existence.EXISTS:
            raise InfeasibleWindow(f"a = {a} outside the existence window")
        out.append(res.u.values)
    return bool(np.all(out[0] <= out[1] + 1e-8))
