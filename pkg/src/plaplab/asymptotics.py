"""q-sweeps toward p-1 and toward infinity, with limit diagnostics.

Low sweeps track the scale law (q-p+1)*ln sup(u_q) -> ln alpha and the
profile convergence u_q/sup(u_q) -> U_alpha; high sweeps track convergence
of u_q to the constrained limit solution (free-boundary problem for
strictly positive b, variational inequality when b has an interior zero
set).  Records are produced by warm-started solves along the schedule;
limits are accelerated with Aitken's delta-squared rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import NoConvergence, TooFewRecords
from .eigensolver import principal_eigenpair, solve_alpha, _subdomain_lambda1
from .logistic_solver import Existence, solve_logistic
from .mesh import Field, Grid1D, detect_zero_set
from .obstacle_solver import solve_free_boundary, solve_vi
from .plap_core import PLapParams

__all__ = [
    "SweepRecord",
    "LimitEstimate",
    "sweep_q_low",
    "sweep_q_high",
    "critical_constant_c",
    "extrapolate_limit",
]


@dataclass(frozen=True)
class SweepRecord:
    """One warm-started solve along a q-schedule.

    log_gap = (q-p+1)*ln sup(u_q) - ln alpha (nan when alpha is unknown);
    profile_dist is sup|u_q/sup(u_q) - U_alpha| on low sweeps and
    sup|u_q - limit| on high sweeps.  flag is "ok" or "no-convergence".
    """

    q: float
    M: float
    log_gap: float
    profile_dist: float
    iterations: int
    residual: float
    flag: str = "ok"


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    trend: bool
    last_gap: float


def _failed_record(q: float) -> SweepRecord:
    return SweepRecord(
        q=q, M=math.nan, log_gap=math.nan, profile_dist=math.nan,
        iterations=0, residual=math.nan, flag="no-convergence",
    )


def sweep_q_low(
    grid: Grid1D,
    b: Field,
    p: float,
    a: float,
    schedule: Sequence[float],
    tol: float = 1e-8,
) -> list:
    """Warm-started solves along q decreasing to p-1.

    The scale alpha and profile U_alpha come from the eigenvalue relation
    a = lambda1(alpha*b); each record carries the log-space gap of the
    scale law and the sup-distance of the normalized profile.
    """
    schedule = [float(q) for q in schedule]
    if any(q2 >= q1 for q1, q2 in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly decreasing")
    if any(q <= p - 1.0 for q in schedule):
        raise ValueError("every q must exceed p - 1")

    lam1 = principal_eigenpair(grid, Field.zeros(grid), p, tol).lam
    lam_sub = _subdomain_lambda1(b, p, tol)
    ar = solve_alpha(grid, b, a, p, tol)
    ln_alpha = math.log(ar.alpha) if ar.alpha > 0 else -math.inf
    target = ar.eigen.U.values

    records = []
    warm = None
    for q in schedule:
        params = PLapParams(p=p, a=a, q=q)
        try:
            res = solve_logistic(
                grid, b, params, tol=tol, init_profile=warm,
                lambda1=lam1, lambda_omega0=lam_sub,
            )
        except NoConvergence:
            warm = None
            records.append(_failed_record(q))
            continue
        if res.existence is not Existence.EXISTS:
            warm = None
            records.append(_failed_record(q))
            continue
        warm = (res.profile, res.ln_M)
        records.append(
            SweepRecord(
                q=q,
                M=res.M,
                log_gap=(q - p + 1.0) * res.ln_M - ln_alpha,
                profile_dist=float(np.max(np.abs(res.profile.values - target))),
                iterations=res.iterations,
                residual=res.residual,
            )
        )
    return records


def sweep_q_high(
    grid: Grid1D,
    b: Field,
    p: float,
    a: float,
    schedule: Sequence[float],
    tol: float = 1e-8,
) -> list:
    """Warm-started solves along q increasing toward infinity.

    profile_dist compares u_q with the free-boundary solution when
    min b > 0, and with the variational-inequality solution when b
    vanishes on an interior interval.  log_gap is reported relative to
    the a-priori scale a/min b when that is finite (it tends to 0 exactly
    when sup(u_q)^(q-p+1) approaches its limit a/min b).
    """
    schedule = [float(q) for q in schedule]
    if any(q2 <= q1 for q1, q2 in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    if any(q <= p - 1.0 for q in schedule):
        raise ValueError("every q must exceed p - 1")

    lam1 = principal_eigenpair(grid, Field.zeros(grid), p, tol).lam
    mask = detect_zero_set(b)
    min_b = float(np.min(b.values))
    if mask is None and min_b > 0.0:
        limit = solve_free_boundary(grid, p, a, tol).w.values
        ln_alpha_limit = math.log(a / min_b)
        lam_sub = None
    else:
        lam_sub = _subdomain_lambda1(b, p, tol)
        limit = solve_vi(grid, p, a, mask, tol).u.values
        ln_alpha_limit = math.nan

    records = []
    warm = None
    for q in schedule:
        params = PLapParams(p=p, a=a, q=q)
        try:
            res = solve_logistic(
                grid, b, params, tol=tol, init_profile=warm,
                lambda1=lam1, lambda_omega0=lam_sub,
            )
        except NoConvergence:
            warm = None
            records.append(_failed_record(q))
            continue
        if res.existence is not Existence.EXISTS:
            warm = None
            records.append(_failed_record(q))
            continue
        warm = (res.profile, res.ln_M)
        gap = (
            (q - p + 1.0) * res.ln_M - ln_alpha_limit
            if math.isfinite(ln_alpha_limit)
            else math.nan
        )
        records.append(
            SweepRecord(
                q=q,
                M=res.M,
                log_gap=gap,
                profile_dist=float(np.max(np.abs(res.u.values - limit))),
                iterations=res.iterations,
                residual=res.residual,
            )
        )
    return records


def critical_constant_c(
    U1: Field,
    b: Field,
    p: float,
    denominator_exponent: Optional[float] = None,
) -> float:
    """Limit constant exp(int b*U1^p*ln U1 / int b*U1^s), s = p by default.

    Trapezoidal quadrature with the convention U^s * ln U -> 0 at nodes
    where U1 vanishes (boundary nodes of the normalized eigenfunction).
    The denominator exponent can be overridden to report the alternative
    reading s = q+1 alongside the adopted s = p.
    """
    U1.grid.require_same(b.grid)
    s = p if denominator_exponent is None else float(denominator_exponent)
    u = np.asarray(U1.values, dtype=float)
    w = np.ones_like(u)
    w[0] = w[-1] = 0.5
    pos = u > 0.0
    num_i = np.zeros_like(u)
    num_i[pos] = b.values[pos] * u[pos] ** p * np.log(u[pos])
    den_i = np.zeros_like(u)
    den_i[pos] = b.values[pos] * u[pos] ** s
    h = U1.grid.h
    num = h * float(np.sum(w * num_i))
    den = h * float(np.sum(w * den_i))
    return math.exp(num / den)


def extrapolate_limit(
    records: Sequence[SweepRecord], field: Union[str, Callable]
) -> LimitEstimate:
    """Aitken delta-squared limit of a record sequence.

    Uses the last three valid records.  When the tail is monotone with
    shrinking increments the accelerated value is returned (exact for
    geometric tails); otherwise the last value with trend=False.
    """
    getter = field if callable(field) else lambda r: getattr(r, field)
    xs = [
        getter(r)
        for r in records
        if r.flag == "ok" and math.isfinite(getter(r))
    ]
    if len(xs) < 3:
        raise TooFewRecords(f"need >= 3 valid records, got {len(xs)}")
    x0, x1, x2 = xs[-3], xs[-2], xs[-1]
    d0 = x1 - x0
    d1 = x2 - x1
    last_gap = abs(d1)
    if d0 == 0.0 and d1 == 0.0:
        return LimitEstimate(value=x2, trend=True, last_gap=0.0)
    monotone = d0 * d1 > 0.0 and abs(d1) < abs(d0)
    if not monotone:
        return LimitEstimate(value=x2, trend=False, last_gap=last_gap)
    denom = d1 - d0
    value = x2 - d1 * d1 / denom
    return LimitEstimate(value=float(value), trend=True, last_gap=last_gap)
