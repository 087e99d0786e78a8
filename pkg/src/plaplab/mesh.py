"""1-D grids, subdomain masks, and coefficient fields.

Everything downstream (operators, eigensolves, continuation, obstacle
iterations) runs on a uniform partition of an interval with homogeneous
Dirichlet end nodes.  Grids and fields are value objects: their arrays are
frozen after construction, so they can be shared read-only by concurrent
solves.

Node i of an ``n_cells`` grid sits at ``x_left + i*(x_right-x_left)/n_cells``.
That formula is used verbatim (not ``linspace``) so that doubling
``n_cells`` reproduces the coarse nodes bit-exactly as a subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import (
    GridMismatch,
    InvalidDomain,
    InvalidSubdomain,
    NegativeCoefficient,
)

__all__ = [
    "Grid1D",
    "Field",
    "SubdomainMask",
    "ConstantCoefficient",
    "BumpZeroCoefficient",
    "build_grid",
    "subdomain_mask",
    "coefficient_field",
    "detect_zero_set",
    "write_field_csv",
    "read_field_csv",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Uniform partition of [x_left, x_right] with ``n_cells + 1`` nodes."""

    x_left: float
    x_right: float
    n_cells: int
    h: float
    nodes: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    def same_as(self, other: "Grid1D") -> bool:
        return self is other or (
            self.n_cells == other.n_cells
            and self.x_left == other.x_left
            and self.x_right == other.x_right
        )

    def require_same(self, other: "Grid1D") -> None:
        if not self.same_as(other):
            raise GridMismatch(
                f"grid ({self.x_left}, {self.x_right}, {self.n_cells}) vs "
                f"({other.x_left}, {other.x_right}, {other.n_cells})"
            )


def build_grid(x_left: float, x_right: float, n_cells: int) -> Grid1D:
    """Build a uniform grid; requires x_left < x_right and n_cells >= 4."""
    x_left = float(x_left)
    x_right = float(x_right)
    n_cells = int(n_cells)
    if not (np.isfinite(x_left) and np.isfinite(x_right)) or x_left >= x_right:
        raise InvalidDomain(f"need x_left < x_right, got ({x_left}, {x_right})")
    if n_cells < 4:
        raise InvalidDomain(f"need n_cells >= 4, got {n_cells}")
    length = x_right - x_left
    nodes = x_left + (np.arange(n_cells + 1) * length) / n_cells
    return Grid1D(x_left, x_right, n_cells, length / n_cells, _frozen(nodes))


@dataclass(frozen=True, eq=False)
class Field:
    """Real-valued grid function (solution, coefficient, eigenfunction)."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.grid.n_nodes:
            raise GridMismatch(
                f"{len(self.values)} values on a grid with {self.grid.n_nodes} nodes"
            )

    @classmethod
    def from_values(cls, grid: Grid1D, values) -> "Field":
        return cls(grid, _frozen(values))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "Field":
        return cls(grid, _frozen(np.zeros(grid.n_nodes)))

    @classmethod
    def from_function(cls, grid: Grid1D, f) -> "Field":
        return cls(grid, _frozen(f(grid.nodes)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class SubdomainMask:
    """Nodes strictly inside an interval (a_0, b_0) compactly inside the grid."""

    grid: Grid1D
    inside: np.ndarray
    a_0: float
    b_0: float

    @classmethod
    def empty(cls, grid: Grid1D) -> "SubdomainMask":
        """Degenerate mask with no inside node (constraint active everywhere)."""
        inside = np.zeros(grid.n_nodes, dtype=bool)
        inside.setflags(write=False)
        mid = 0.5 * (grid.x_left + grid.x_right)
        return cls(grid, inside, mid, mid)

    def node_span(self):
        """Index range [first, last] of inside nodes, or None when empty."""
        idx = np.flatnonzero(self.inside)
        if idx.size == 0:
            return None
        return int(idx[0]), int(idx[-1])


def subdomain_mask(grid: Grid1D, a_0: float, b_0: float) -> SubdomainMask:
    """Mark nodes with a_0 < x < b_0; the interval must be strictly interior."""
    a_0 = float(a_0)
    b_0 = float(b_0)
    if not (grid.x_left < a_0 < b_0 < grid.x_right):
        raise InvalidSubdomain(
            f"need x_left < a_0 < b_0 < x_right, got ({a_0}, {b_0}) in "
            f"({grid.x_left}, {grid.x_right})"
        )
    inside = (grid.nodes > a_0) & (grid.nodes < b_0)
    if not inside.any():
        raise InvalidSubdomain(f"no grid node falls inside ({a_0}, {b_0})")
    runs = np.flatnonzero(inside)
    if not np.all(np.diff(runs) == 1):
        raise InvalidSubdomain("mask is not a single contiguous run")
    inside.setflags(write=False)
    return SubdomainMask(grid, inside, a_0, b_0)


@dataclass(frozen=True)
class ConstantCoefficient:
    """b(x) = level everywhere, level >= 0."""

    level: float


@dataclass(frozen=True)
class BumpZeroCoefficient:
    """Continuous b(x) vanishing exactly on [a_0, b_0], rising to `level`.

    The profile is level * min(1, (d/ramp_width)^2) with d the distance to
    [a_0, b_0]: a C0 quadratic ramp that saturates at `level` a distance
    ramp_width away from the zero interval.  Default ramp_width is half the
    gap between the zero interval and the nearest domain endpoint.
    """

    a_0: float
    b_0: float
    level: float
    ramp_width: Optional[float] = None


CoefficientSpec = Union[ConstantCoefficient, BumpZeroCoefficient]


def coefficient_field(grid: Grid1D, spec: CoefficientSpec) -> Field:
    """Evaluate a coefficient descriptor on the grid nodes."""
    if isinstance(spec, ConstantCoefficient):
        if spec.level < 0:
            raise NegativeCoefficient(f"constant level {spec.level} < 0")
        return Field.from_values(grid, np.full(grid.n_nodes, float(spec.level)))
    if isinstance(spec, BumpZeroCoefficient):
        if spec.level <= 0:
            raise NegativeCoefficient(
                f"outside level must be > 0, got {spec.level}"
            )
        if not (grid.x_left < spec.a_0 < spec.b_0 < grid.x_right):
            raise InvalidSubdomain(
                f"zero interval ({spec.a_0}, {spec.b_0}) must be strictly "
                f"inside ({grid.x_left}, {grid.x_right})"
            )
        width = spec.ramp_width
        if width is None:
            width = 0.5 * min(spec.a_0 - grid.x_left, grid.x_right - spec.b_0)
        if width <= 0:
            raise NegativeCoefficient(f"ramp width {width} must be > 0")
        x = grid.nodes
        dist = np.maximum(0.0, np.maximum(spec.a_0 - x, x - spec.b_0))
        values = spec.level * np.minimum(1.0, (dist / width) ** 2)
        return Field.from_values(grid, values)
    raise TypeError(f"unknown coefficient descriptor {spec!r}")


def detect_zero_set(b: Field) -> Optional[SubdomainMask]:
    """Find the interior interval where b vanishes exactly, if there is one.

    Returns a mask whose inside nodes are exactly the zero nodes of b, or
    None when b has no zeros, zeros touching the boundary, or several
    separate zero runs (no usable connected zero set).
    """
    zero = b.values == 0.0
    idx = np.flatnonzero(zero)
    if idx.size == 0:
        return None
    if idx[0] == 0 or idx[-1] == b.grid.n_nodes - 1:
        return None
    if not np.all(np.diff(idx) == 1):
        return None
    nodes = b.grid.nodes
    a_0 = 0.5 * (nodes[idx[0] - 1] + nodes[idx[0]])
    b_0 = 0.5 * (nodes[idx[-1]] + nodes[idx[-1] + 1])
    inside = np.zeros(b.grid.n_nodes, dtype=bool)
    inside[idx] = True
    inside.setflags(write=False)
    return SubdomainMask(b.grid, inside, a_0, b_0)


def write_field_csv(field: Field, path) -> None:
    """Dump a field as `x,value` rows; 17 significant digits round-trip."""
    with open(path, "w") as fh:
        fh.write("x,value\n")
        for x, v in zip(field.grid.nodes, field.values):
            fh.write(f"{x:.17g},{v:.17g}\n")


def read_field_csv(path, grid: Optional[Grid1D] = None) -> Field:
    """Read a field dump back; values are bit-exact with the written field."""
    xs = []
    vs = []
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "x,value":
            raise ValueError(f"not a field CSV (header {header!r})")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            sx, sv = line.split(",")
            xs.append(float(sx))
            vs.append(float(sv))
    x = np.asarray(xs)
    if grid is None:
        grid = build_grid(x[0], x[-1], len(x) - 1)
    if len(x) != grid.n_nodes or not np.array_equal(x, grid.nodes):
        raise GridMismatch(f"{path}: x column does not match the grid nodes")
    return Field.from_values(grid, vs)
