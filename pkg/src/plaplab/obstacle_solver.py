"""Free-boundary limit problem and variational-inequality limit.

The q -> infinity limit of the logistic problem with strictly positive b is

    -div(|Dw|^(p-2)Dw) = a * 1_{w<1} * w^(p-1),  w > 0,  w|_boundary = 0,
    sup(w) = 1,

whose unknown plateau {w = 1} is found by a primal active-set iteration:
pin a guessed coincidence set at 1, solve the equation on the complement
(mixed Dirichlet data, damped Newton), then grow the set where w reaches 1
and shrink it where the pinned nodes stop acting as supersolutions
(flux divergence exceeding a).  When b vanishes on an interior interval
the constraint w <= 1 applies only outside that interval and the same
iteration computes the variational-inequality solution, which exceeds 1
inside the unconstrained region.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    InfeasibleWindow,
    NoConvergence,
    PlateauTooSmall,
)
from .eigensolver import EPS_SCHEDULE, principal_eigenpair
from .mesh import Field, Grid1D, SubdomainMask, build_grid
from .plap_core import (
    TridiagonalOperator,
    _apply_interior,
    _flux_jacobian_arrays,
)
from .shooting import pi_p

__all__ = [
    "FreeBoundaryExistence",
    "ObstacleResult",
    "VIResult",
    "MultistartReport",
    "solve_free_boundary",
    "solve_vi",
    "compose_reference_vi",
    "multistart_uniqueness",
]


class FreeBoundaryExistence(enum.Enum):
    EXISTS = "exists"
    NO_SOLUTION = "no-solution"


@dataclass(frozen=True)
class ObstacleResult:
    """Free-boundary solution with its coincidence set.

    coincidence marks nodes where w = 1 with an active multiplier;
    residual_pde is the sup-norm equation residual off the coincidence
    set, residual_comp the worst violation of the complementarity sign
    conditions on it.
    """

    w: Field
    coincidence: np.ndarray
    residual_pde: float
    residual_comp: float
    existence: FreeBoundaryExistence


@dataclass(frozen=True)
class VIResult:
    """Variational-inequality solution; constraint only outside omega0."""

    u: Field
    active: np.ndarray
    vi_defect: float


@dataclass(frozen=True)
class MultistartReport:
    existences: list
    max_pairwise_distance: float
    consistent: bool


def _sign_pow(values: np.ndarray, k: float) -> np.ndarray:
    return np.sign(values) * np.abs(values) ** k


def _mixed_residual(w, pinned_int, p, a, eps, h):
    r = _apply_interior(w, p, eps, h) - a * _sign_pow(w[1:-1], p - 1.0)
    r[pinned_int] = 0.0
    return r


def _mixed_newton(w, pinned_int, p, a, eps, h, tol, max_iters=80):
    """Damped Newton for A(w) = a*|w|^(p-2)w on non-pinned interior nodes.

    Pinned interior nodes keep their current values (Dirichlet data).
    Returns the solved array or None.
    """
    w = w.copy()
    r = _mixed_residual(w, pinned_int, p, a, eps, h)
    merit = float(r @ r)
    for _ in range(max_iters):
        if float(np.max(np.abs(r))) <= tol:
            return w
        jac = _flux_jacobian_arrays(w, p, eps, h).with_diagonal_added(
            -a * (p - 1.0) * np.abs(w[1:-1]) ** (p - 2.0)
            if p != 2.0
            else np.full(len(w) - 2, -a)
        )
        sub = jac.sub.copy()
        diag = jac.diag.copy()
        sup = jac.sup.copy()
        sub[pinned_int] = 0.0
        diag[pinned_int] = 1.0
        sup[pinned_int] = 0.0
        step = TridiagonalOperator(sub, diag, sup).solve(-r)
        if not np.all(np.isfinite(step)):
            return None
        t = 1.0
        accepted = False
        for _ in range(30):
            trial = w.copy()
            trial[1:-1] = w[1:-1] + t * step
            r_trial = _mixed_residual(trial, pinned_int, p, a, eps, h)
            merit_trial = float(r_trial @ r_trial)
            if merit_trial <= merit * (1.0 - 1e-4 * t) or merit_trial <= tol * tol:
                w, r, merit = trial, r_trial, merit_trial
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return None
    return w if float(np.max(np.abs(r))) <= tol else None


def _default_plateau(grid: Grid1D, p: float, a: float, allowed: np.ndarray):
    """Analytic first guess: the free boundary of the quarter-wave profile.

    The rising arc of -div(|Dw|^(p-2)Dw) = a*w^(p-1) from 0 to its first
    flat point spans (pi_p/2)*((p-1)/a)^(1/p); nodes farther than that
    from both endpoints start in the plateau.
    """
    ell = 0.5 * pi_p(p) * ((p - 1.0) / a) ** (1.0 / p)
    x = grid.nodes[1:-1]
    dist = np.minimum(x - grid.x_left, grid.x_right - x)
    active = (dist > ell) & allowed
    if not active.any():
        center = 0.5 * (grid.x_left + grid.x_right)
        order = np.argsort(np.abs(x - center))
        for idx in order:
            if allowed[idx]:
                active = np.zeros_like(allowed)
                active[idx] = True
                break
    return active


def _tent(grid: Grid1D, p: float, a: float) -> np.ndarray:
    ell = 0.5 * pi_p(p) * ((p - 1.0) / a) ** (1.0 / p)
    ell = min(ell, 0.5 * (grid.x_right - grid.x_left))
    x = grid.nodes
    dist = np.minimum(x - grid.x_left, grid.x_right - x)
    return np.minimum(1.0, dist / ell)


def _active_set_solve(
    grid: Grid1D,
    p: float,
    a: float,
    allowed: np.ndarray,
    tol: float,
    initial_active: Optional[np.ndarray],
    max_outer: int,
):
    """Primal active-set iteration; returns (w, active, iterations).

    allowed/active are boolean over interior nodes (length n_cells - 1).
    """
    h = grid.h
    eps_final = EPS_SCHEDULE[-1]
    add_tol = 1e-10
    slack = 10.0 * tol * max(1.0, abs(a))

    if initial_active is not None:
        initial_active = np.asarray(initial_active, dtype=bool)
        if len(initial_active) == grid.n_nodes:
            initial_active = initial_active[1:-1]
        active = initial_active & allowed
        if not active.any():
            active = _default_plateau(grid, p, a, allowed)
    else:
        active = _default_plateau(grid, p, a, allowed)

    w = _tent(grid, p, a)
    stages: Sequence[float] = EPS_SCHEDULE
    seen = set()
    for outer in range(max_outer):
        signature = active.tobytes()
        if signature in seen:
            raise CycleDetected(
                f"active set of size {int(active.sum())} revisited at outer {outer}"
            )
        seen.add(signature)

        w[1:-1] = np.where(active, 1.0, w[1:-1])
        w[0] = w[-1] = 0.0
        solved = None
        for eps in stages:
            stage_tol = tol if eps == stages[-1] else max(tol, 1e-6 * max(1.0, a))
            solved = _mixed_newton(w, active, p, a, eps, h, stage_tol)
            if solved is None:
                break
            w = solved
        stages = (eps_final,)  # warm starts after the first outer pass
        if solved is None:
            # Split every long free run by pinning its middle node: failed
            # mixed solves mean a free component is near-resonant.
            runs = _runs(~active & allowed)
            grew = False
            for lo, hi in runs:
                if hi - lo >= 2:
                    active[(lo + hi) // 2] = True
                    grew = True
            if not grew:
                raise NoConvergence(
                    f"mixed solve failed with no free run to split (outer {outer})"
                )
            stages = EPS_SCHEDULE
            continue

        # A negative dip means a free component is longer than the half
        # wavelength of the rising arc: pin its middle to break it up (the
        # positive solution has no sign change; spurious signed arches do).
        negative = (w[1:-1] < -1e-10) & ~active
        if negative.any():
            grew = False
            for lo, hi in _runs(~active & allowed):
                if negative[lo : hi + 1].any() and hi - lo >= 2:
                    mid = (lo + hi) // 2
                    if allowed[mid]:
                        active[mid] = True
                        grew = True
            if grew:
                stages = EPS_SCHEDULE
                continue

        add = allowed & ~active & (w[1:-1] >= 1.0 - add_tol)
        if add.any():
            active = active | add
            continue

        flux_div = _apply_interior(w, p, eps_final, h)
        viol = active & (flux_div > a * _sign_pow(w[1:-1], p - 1.0) + slack)
        if viol.any() and not viol.all():
            active = active & ~viol
            continue
        return w, active, outer + 1
    raise NoConvergence(f"active set did not settle in {max_outer} outer iterations")


def _runs(mask: np.ndarray):
    """Maximal runs of True as (start, stop) index pairs (inclusive)."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    stops = np.concatenate((breaks, [idx.size - 1]))
    return [(int(idx[s]), int(idx[e])) for s, e in zip(starts, stops)]


def _multiplier_active(w, active, p, a, eps, h, tol):
    """Keep only active nodes whose constrained-equation residual is real.

    A pinned node where the unconstrained equation already holds (the
    anchor at a = lambda1, where the eigenfunction merely touches 1) is
    not part of the coincidence set.
    """
    r = _apply_interior(w, p, eps, h) - a * _sign_pow(w[1:-1], p - 1.0)
    return active & (np.abs(r) > 10.0 * tol * max(1.0, abs(a)))


def solve_free_boundary(
    grid: Grid1D,
    p: float,
    a: float,
    tol: float = 1e-8,
    *,
    initial_active: Optional[np.ndarray] = None,
    max_outer: int = 4000,
) -> ObstacleResult:
    """Solve the free-boundary problem; verdict NoSolution when a < lambda1."""
    eps_final = EPS_SCHEDULE[-1]
    lam1 = principal_eigenpair(grid, Field.zeros(grid), p, tol).lam
    if a < lam1 - tol * max(1.0, abs(a)):
        zeros = Field.zeros(grid)
        return ObstacleResult(
            w=zeros,
            coincidence=np.zeros(grid.n_nodes, dtype=bool),
            residual_pde=0.0,
            residual_comp=0.0,
            existence=FreeBoundaryExistence.NO_SOLUTION,
        )
    allowed = np.ones(grid.n_cells - 1, dtype=bool)
    w, active, _ = _active_set_solve(
        grid, p, a, allowed, tol, initial_active, max_outer
    )
    h = grid.h
    coincidence = _multiplier_active(w, active, p, a, eps_final, h, tol)
    r = _apply_interior(w, p, eps_final, h) - a * _sign_pow(w[1:-1], p - 1.0)
    free = ~coincidence
    residual_pde = float(np.max(np.abs(r[free]))) if free.any() else 0.0
    flux_div = _apply_interior(w, p, eps_final, h)
    comp_terms = [0.0]
    if coincidence.any():
        comp_terms.append(float(np.max(-flux_div[coincidence])))
        comp_terms.append(
            float(np.max(flux_div[coincidence] - a * _sign_pow(w[1:-1], p - 1.0)[coincidence]))
        )
    if (~active).any():
        comp_terms.append(float(np.max(w[1:-1][~active] - 1.0)))
    return ObstacleResult(
        w=Field.from_values(grid, w),
        coincidence=_full_mask(grid, coincidence),
        residual_pde=residual_pde,
        residual_comp=max(comp_terms),
        existence=FreeBoundaryExistence.EXISTS,
    )


def _full_mask(grid: Grid1D, interior_mask: np.ndarray) -> np.ndarray:
    full = np.zeros(grid.n_nodes, dtype=bool)
    full[1:-1] = interior_mask
    full.setflags(write=False)
    return full


def _subinterval_lambda1(grid: Grid1D, omega0: SubdomainMask, p: float, tol: float):
    span = omega0.node_span()
    if span is None:
        return None
    n_sub = max(64, span[1] - span[0] + 1)
    sub = build_grid(omega0.a_0, omega0.b_0, n_sub)
    return principal_eigenpair(sub, Field.zeros(sub), p, tol).lam


def _vi_form(w, v, p, a, eps, h):
    """Discrete bilinear form <flux(Dw), D(v-w)> - a <|w|^(p-2)w, v-w>."""
    s_w = np.diff(w) / h
    flux = s_w * (s_w * s_w + eps * eps) ** ((p - 2.0) / 2.0)
    d = v - w
    grad_part = h * float(flux @ (np.diff(d) / h))
    mass_part = h * float((_sign_pow(w[1:-1], p - 1.0)) @ d[1:-1])
    return grad_part - a * mass_part


def _vi_defect(w, inside_full, p, a, eps, h, grid: Grid1D) -> float:
    """Worst negative value of the VI form over a fixed probe family."""
    x = grid.nodes
    length = grid.x_right - grid.x_left
    probes = []

    def sine_bump(lo_idx, hi_idx):
        bump = np.zeros_like(w)
        if hi_idx - lo_idx < 2:
            return None
        seg = x[lo_idx : hi_idx + 1]
        bump[lo_idx : hi_idx + 1] = np.sin(
            math.pi * (seg - seg[0]) / (seg[-1] - seg[0])
        )
        return bump

    # Downward moves are admissible everywhere.
    for frac in (0.25, 0.5, 0.75):
        center = grid.x_left + frac * length
        width = 0.15 * length
        bump = np.exp(-(((x - center) / width) ** 2))
        bump[0] = bump[-1] = 0.0
        probes.append(w - 0.1 * bump)
    probes.append(np.minimum(w, 0.5))

    # Two-sided moves inside the unconstrained region.
    for lo, hi in _runs(inside_full[1:-1]):
        bump = sine_bump(lo + 1, hi + 1)
        if bump is not None:
            probes.append(w + 0.1 * bump)
            probes.append(w - 0.1 * bump)

    # Upward room below the obstacle on the constrained region.
    delta = 0.05
    eligible = np.zeros_like(w, dtype=bool)
    eligible[1:-1] = (~inside_full[1:-1]) & (w[1:-1] < 1.0 - delta)
    for lo, hi in _runs(eligible[1:-1])[:4]:
        bump = sine_bump(lo + 1, hi + 1)
        if bump is not None:
            probes.append(w + 0.5 * delta * bump)

    worst = 0.0
    for v in probes:
        v = v.copy()
        v[0] = v[-1] = 0.0
        worst = min(worst, _vi_form(w, v, p, a, eps, h))
    return -worst


def solve_vi(
    grid: Grid1D,
    p: float,
    a: float,
    omega0: SubdomainMask,
    tol: float = 1e-8,
    *,
    initial_active: Optional[np.ndarray] = None,
    max_outer: int = 4000,
) -> VIResult:
    """Solve the variational inequality with u <= 1 imposed off omega0 only."""
    grid.require_same(omega0.grid)
    eps_final = EPS_SCHEDULE[-1]
    lam1 = principal_eigenpair(grid, Field.zeros(grid), p, tol).lam
    if a <= lam1:
        raise InfeasibleWindow(f"a = {a} <= lambda1 = {lam1}")
    lam_sub = _subinterval_lambda1(grid, omega0, p, tol)
    if lam_sub is not None and a >= lam_sub:
        raise InfeasibleWindow(f"a = {a} >= lambda1({omega0.a_0}, {omega0.b_0}) = {lam_sub}")

    allowed = ~omega0.inside[1:-1]
    w, active, _ = _active_set_solve(
        grid, p, a, allowed, tol, initial_active, max_outer
    )
    active = _multiplier_active(w, active, p, a, eps_final, grid.h, tol)
    defect = _vi_defect(w, omega0.inside, p, a, eps_final, grid.h, grid)
    return VIResult(
        u=Field.from_values(grid, w),
        active=_full_mask(grid, active),
        vi_defect=defect,
    )


def compose_reference_vi(
    w: ObstacleResult,
    omega0: SubdomainMask,
    p: float,
    a: float,
    tol: float = 1e-8,
) -> Field:
    """Glue the free-boundary solution to the interior Dirichlet bump.

    Returns w outside omega0 and, inside, the solution of
    -div(|Du|^(p-2)Du) = a*|u|^(p-2)u with u = 1 on the interval ends;
    requires the plateau of w to cover omega0.
    """
    if w.existence is not FreeBoundaryExistence.EXISTS:
        raise InfeasibleWindow("free-boundary problem has no solution to glue")
    grid = w.w.grid
    grid.require_same(omega0.grid)
    span = omega0.node_span()
    values = w.w.values.copy()
    if span is None:
        return Field.from_values(grid, values)
    j, k = span
    closure = values[max(j - 1, 0) : min(k + 2, len(values))]
    if np.any(closure < 1.0 - 1e-9):
        raise PlateauTooSmall(
            f"plateau of w does not cover [{omega0.a_0}, {omega0.b_0}]"
        )
    lam_sub = _subinterval_lambda1(grid, omega0, p, tol)
    if lam_sub is not None and a >= lam_sub:
        raise InfeasibleWindow(f"a = {a} >= lambda1 of omega0 = {lam_sub}")

    pinned = np.ones(grid.n_cells - 1, dtype=bool)
    pinned[j - 1 : k] = False  # interior indices of the inside nodes j..k
    init = values.copy()
    solved = None
    for eps in EPS_SCHEDULE:
        stage_tol = tol if eps == EPS_SCHEDULE[-1] else max(tol, 1e-6 * max(1.0, a))
        solved = _mixed_newton(init, pinned, p, a, eps, grid.h, stage_tol)
        if solved is None:
            raise NoConvergence("interior Dirichlet solve failed")
        init = solved
    values[omega0.inside] = solved[omega0.inside]
    return Field.from_values(grid, values)


def multistart_uniqueness(
    grid: Grid1D,
    p: float,
    a: float,
    k: int,
    tol: float = 1e-8,
    seed: int = 0,
) -> MultistartReport:
    """Run the free-boundary solve from k randomized initial active sets."""
    if k < 2:
        raise ValueError(f"need k >= 2 starts, got {k}")
    rng = np.random.default_rng(seed)
    n_int = grid.n_cells - 1
    solutions = []
    existences = []
    for _ in range(k):
        lo = int(rng.integers(0, n_int))
        length = int(rng.integers(0, max(1, n_int // 2)))
        active = np.zeros(n_int, dtype=bool)
        active[lo : min(lo + length + 1, n_int)] = True
        res = solve_free_boundary(grid, p, a, tol, initial_active=active)
        existences.append(res.existence)
        if res.existence is FreeBoundaryExistence.EXISTS:
            solutions.append(res.w.values)
    max_dist = 0.0
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            max_dist = max(max_dist, float(np.max(np.abs(solutions[i] - solutions[j]))))
    consistent = len(set(existences)) == 1
    return MultistartReport(
        existences=existences,
        max_pairwise_distance=max_dist,
        consistent=consistent,
    )
