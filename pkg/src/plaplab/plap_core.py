"""Discrete p-Laplacian kernel: fluxes, residuals, linearizations, norms.

The operator is the cell-flux divergence on a uniform grid: with slopes
s_{i+1/2} = (u_{i+1} - u_i)/h and the regularized flux

    F(s) = s * (s^2 + eps^2)^((p-2)/2),

interior node i receives -(F_{i+1/2} - F_{i-1/2})/h, and boundary entries
are zero by convention.  Every function here is pure; solvers own all
iteration state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import BadExponent, DegenerateJacobian, GridMismatch, NegativeInput
from .mesh import Field, Grid1D

__all__ = [
    "PLapParams",
    "TridiagonalOperator",
    "safe_pow",
    "p_flux",
    "dp_flux",
    "apply_p_laplacian",
    "residual_logistic",
    "linearize",
    "flux_jacobian",
    "norm",
    "p_energy",
]

# Powers of nonnegative fields go through log space below this threshold the
# result is defined to be 0 (avoids overflow/underflow traps for extreme q).
POW_FLOOR = 1e-300
POW_CAP = 1e300


@dataclass(frozen=True)
class PLapParams:
    """Problem parameters: exponent p, regularization eps, growth a, power q."""

    p: float
    a: float
    q: float
    eps: float = 1e-8

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"need p > 1, got {self.p}")
        if self.eps < 0:
            raise ValueError(f"need eps >= 0, got {self.eps}")
        if not self.q > self.p - 1:
            raise ValueError(f"need q > p - 1, got q={self.q}, p={self.p}")


def safe_pow(x, k: float):
    """x**k for x >= 0 via exp(k*log x); x <= 1e-300 maps to 0, capped at 1e300.

    k == 0 and k == 1 are returned exactly (1 and x) so that the p = 2 /
    q = 2 cases reduce to plain arithmetic.
    """
    if k == 0.0:
        return np.ones_like(np.asarray(x, dtype=float))
    x = np.asarray(x, dtype=float)
    if k == 1.0:
        return x.copy()
    out = np.zeros_like(x)
    alive = x > POW_FLOOR
    with np.errstate(over="ignore"):
        out[alive] = np.exp(np.minimum(k * np.log(x[alive]), math.log(POW_CAP)))
    return out


def _as_float_array(s):
    arr = np.asarray(s, dtype=float)
    return arr, arr.ndim == 0


def p_flux(s, p: float, eps: float):
    """Regularized flux s*(s^2+eps^2)^((p-2)/2); odd and increasing in s."""
    arr, scalar = _as_float_array(s)
    mag2 = arr * arr + eps * eps
    if p == 2.0:
        out = arr.copy()
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = arr * mag2 ** ((p - 2.0) / 2.0)
        out = np.where(mag2 == 0.0, 0.0, out)  # 0^(negative) guard for p < 2
    return float(out) if scalar else out


def dp_flux(s, p: float, eps: float):
    """Flux derivative (s^2+eps^2)^((p-4)/2) * ((p-1)s^2 + eps^2).

    For p < 2, eps = 0 this is infinite at s = 0; callers that build
    Jacobians must treat non-finite entries as a degenerate linearization.
    """
    arr, scalar = _as_float_array(s)
    if p == 2.0:
        out = np.ones_like(arr)
    else:
        mag2 = arr * arr + eps * eps
        with np.errstate(divide="ignore", invalid="ignore"):
            out = mag2 ** ((p - 4.0) / 2.0) * ((p - 1.0) * arr * arr + eps * eps)
        if p > 2.0:
            out = np.where(mag2 == 0.0, 0.0, out)
        else:
            out = np.where(mag2 == 0.0, np.inf, out)
    return float(out) if scalar else out


@dataclass(frozen=True)
class TridiagonalOperator:
    """Tridiagonal matrix over the interior nodes (sub[0] = sup[-1] = 0)."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        if not (len(self.sub) == len(self.diag) == len(self.sup)):
            raise ValueError("sub/diag/sup must share one length")

    @property
    def size(self) -> int:
        return len(self.diag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.sup[:-1] * v[1:]
        out[1:] += self.sub[1:] * v[:-1]
        return out

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        ab = np.zeros((3, self.size))
        ab[0, 1:] = self.sup[:-1]
        ab[1, :] = self.diag
        ab[2, :-1] = self.sub[1:]
        return solve_banded((1, 1), ab, rhs)

    def with_diagonal_added(self, extra: np.ndarray) -> "TridiagonalOperator":
        return TridiagonalOperator(self.sub, self.diag + extra, self.sup)

    def to_dense(self) -> np.ndarray:
        m = np.diag(self.diag)
        if self.size > 1:
            m += np.diag(self.sup[:-1], 1) + np.diag(self.sub[1:], -1)
        return m


def _slopes(values: np.ndarray, h: float) -> np.ndarray:
    return np.diff(values) / h


def _apply_interior(values: np.ndarray, p: float, eps: float, h: float) -> np.ndarray:
    flux = p_flux(_slopes(values, h), p, eps)
    return -np.diff(flux) / h


def apply_p_laplacian(u: Field, params: PLapParams) -> Field:
    """-div(flux) at interior nodes; boundary entries are 0 by convention."""
    out = np.zeros(u.grid.n_nodes)
    out[1:-1] = _apply_interior(u.values, params.p, params.eps, u.grid.h)
    return Field.from_values(u.grid, out)


def _clamped_nonnegative(values: np.ndarray) -> np.ndarray:
    if np.any(values < -1e-12):
        raise NegativeInput(f"min(u) = {values.min()} < -1e-12")
    return np.maximum(values, 0.0)


def residual_logistic(u: Field, b: Field, params: PLapParams) -> Field:
    """apply_p_laplacian(u) - a*u^(p-1) + b*u^q at interior nodes."""
    u.grid.require_same(b.grid)
    v = _clamped_nonnegative(u.values)
    r = np.zeros(u.grid.n_nodes)
    r[1:-1] = (
        _apply_interior(v, params.p, params.eps, u.grid.h)
        - params.a * safe_pow(v[1:-1], params.p - 1.0)
        + b.values[1:-1] * safe_pow(v[1:-1], params.q)
    )
    return Field.from_values(u.grid, r)


def flux_jacobian(u: Field, params: PLapParams) -> TridiagonalOperator:
    """Jacobian of apply_p_laplacian at u (no reaction terms)."""
    return _flux_jacobian_arrays(u.values, params.p, params.eps, u.grid.h)


def _flux_jacobian_arrays(
    values: np.ndarray, p: float, eps: float, h: float
) -> TridiagonalOperator:
    g = dp_flux(_slopes(values, h), p, eps)
    if not np.all(np.isfinite(g)):
        raise DegenerateJacobian(
            "zero slope with p < 2 and eps = 0; use eps > 0"
        )
    inv_h2 = 1.0 / (h * h)
    diag = (g[:-1] + g[1:]) * inv_h2
    sub = np.zeros_like(diag)
    sup = np.zeros_like(diag)
    sub[1:] = -g[1:-1] * inv_h2
    sup[:-1] = -g[1:-1] * inv_h2
    return TridiagonalOperator(sub, diag, sup)


def linearize(u: Field, b: Field, params: PLapParams) -> TridiagonalOperator:
    """Exact Jacobian of residual_logistic at u for the regularized flux."""
    u.grid.require_same(b.grid)
    v = _clamped_nonnegative(u.values)
    op = _flux_jacobian_arrays(v, params.p, params.eps, u.grid.h)
    vi = v[1:-1]
    reaction = -params.a * (params.p - 1.0) * safe_pow(vi, params.p - 2.0) + b.values[
        1:-1
    ] * params.q * safe_pow(vi, params.q - 1.0)
    return op.with_diagonal_added(reaction)


def norm(u: Field, m) -> float:
    """Sup-norm (m = inf) or L^m norm by trapezoidal quadrature, m >= 1."""
    if m in (np.inf, math.inf) or (isinstance(m, str) and m == "inf"):
        return float(np.max(np.abs(u.values)))
    m = float(m)
    if not m >= 1.0:
        raise BadExponent(f"norm exponent must be >= 1 or inf, got {m}")
    w = np.abs(u.values) ** m
    integral = u.grid.h * (w.sum() - 0.5 * (w[0] + w[-1]))
    return float(integral ** (1.0 / m))


def p_energy(u: Field, params: PLapParams) -> float:
    """(1/p) * sum_cells h*(slope^2 + eps^2)^(p/2); gradient is h*A(u)."""
    s = _slopes(u.values, u.grid.h)
    return float(
        u.grid.h / params.p * np.sum((s * s + params.eps**2) ** (params.p / 2.0))
    )
