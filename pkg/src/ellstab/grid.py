"""Radial grids on (0, 1] and quadrature against power-law weights r^w.

Grids exclude r = 0; integrals whose lower bound is 0 extend the first cell
analytically from the value and slope at the smallest node.  All cell
integrals treat the weight r^w in closed form (stable power moments), so
weights that are singular or degenerate at the origin never degrade the
accuracy of the rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SingularityError

#: smallest node count accepted by make_grid (cubic stencils need 4 points)
MIN_NODES = 4

#: default grid settings: graded toward the origin, resolving r down to 1e-6
DEFAULT_NODE_COUNT = 2048
DEFAULT_R_MIN = 1.0e-6


def sphere_area(n_dim: int | float) -> float:
    """Surface measure of the unit sphere S^{N-1} in R^N."""
    return 2.0 * math.pi ** (n_dim / 2.0) / math.gamma(n_dim / 2.0)


def ball_volume(n_dim: int | float) -> float:
    """Volume of the unit ball in R^N."""
    return sphere_area(n_dim) / n_dim


@dataclass(frozen=True)
class ProblemParams:
    """Dimension N and radial weight exponent alpha of -div(grad u) = r^alpha f(u)."""

    N: int
    alpha: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ParameterError(f"dimension N must be an integer >= 2, got {self.N}")
        if not (self.alpha > -2.0):
            raise ParameterError(f"weight exponent alpha must exceed -2, got {self.alpha}")

    @property
    def critical_dim(self) -> float:
        """Threshold dimension 10 + 4*alpha separating bounded from singular stable solutions."""
        return 10.0 + 4.0 * self.alpha


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing nodes in (0, 1] with last node exactly 1."""

    nodes: np.ndarray
    kind: str
    anchor: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < MIN_NODES:
            raise ParameterError(f"grid needs at least {MIN_NODES} nodes")
        if not np.all(np.diff(nodes) > 0):
            raise ParameterError("grid nodes must be strictly increasing")
        if nodes[0] <= 0.0:
            raise ParameterError("grid nodes must be positive")
        if nodes[-1] != 1.0:
            raise ParameterError("last grid node must equal 1")
        if self.anchor is not None and not np.any(nodes == self.anchor):
            raise ParameterError(f"anchor {self.anchor} is not a grid node")
        nodes.setflags(write=False)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def r_min(self) -> float:
        return float(self.nodes[0])

    def index_of(self, r: float, tol: float = 1e-12) -> int:
        """Index of the node equal to r (within tol), else a parameter error."""
        i = int(np.argmin(np.abs(self.nodes - r)))
        if abs(self.nodes[i] - r) > tol * max(1.0, abs(r)):
            raise ParameterError(f"{r} is not a node of the grid")
        return i


def _geometric_nodes(lo: float, hi: float, count: int) -> np.ndarray:
    pts = np.exp(np.linspace(math.log(lo), math.log(hi), count))
    pts[0], pts[-1] = lo, hi
    return pts


def make_grid(
    kind: str = "graded",
    node_count: int = DEFAULT_NODE_COUNT,
    r_min: float | None = None,
    anchor: float | None = None,
) -> RadialGrid:
    """Build a radial grid of the requested kind.

    uniform   equally spaced nodes ending at 1 (first node r_min, default 1/n);
    geometric constant node ratio from r_min to 1;
    graded    geometric refinement toward 0, splitting at the anchor so the
              anchor is a node exactly.
    """
    if node_count < MIN_NODES:
        raise ParameterError(f"node_count must be >= {MIN_NODES}, got {node_count}")
    if kind == "uniform":
        lo = 1.0 / node_count if r_min is None else r_min
        if not 0.0 < lo < 1.0:
            raise ParameterError(f"r_min must lie in (0, 1), got {lo}")
        nodes = np.linspace(lo, 1.0, node_count)
        nodes[-1] = 1.0
        return RadialGrid(nodes, kind="uniform")
    if r_min is None:
        r_min = DEFAULT_R_MIN
    if not 0.0 < r_min < 1.0:
        raise ParameterError(f"r_min must lie in (0, 1), got {r_min}")
    if kind == "geometric":
        if anchor is not None:
            raise ParameterError("geometric grids do not place anchors; use kind='graded'")
        return RadialGrid(_geometric_nodes(r_min, 1.0, node_count), kind="geometric")
    if kind == "graded":
        if anchor is None:
            return RadialGrid(_geometric_nodes(r_min, 1.0, node_count), kind="graded")
        if not r_min < anchor < 1.0:
            raise ParameterError(f"anchor must lie in (r_min, 1), got {anchor}")
        # split the log range at the anchor so spacing stays near-geometric
        l_in = math.log(anchor / r_min)
        l_out = math.log(1.0 / anchor)
        cells = node_count - 1
        n_in = int(round(cells * l_in / (l_in + l_out)))
        n_in = min(max(n_in, 2), cells - 2)
        inner = _geometric_nodes(r_min, anchor, n_in + 1)
        outer = _geometric_nodes(anchor, 1.0, cells - n_in + 1)
        nodes = np.concatenate([inner, outer[1:]])
        return RadialGrid(nodes, kind="graded", anchor=anchor)
    raise ParameterError(f"unknown grid kind {kind!r}")


def power_moments(lo, hi, exponent: float, order: int) -> np.ndarray:
    """Moments M_j = int_lo^hi r^(exponent+j) dr for j = 0..order, per interval.

    lo and hi are arrays of positive interval endpoints. Evaluated as
    a^(e+1) * expm1((e+1) * log1p((b-a)/a)) / (e+1), which keeps full relative
    precision for narrow intervals far from the origin.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = np.empty((order + 1,) + lo.shape, dtype=float)
    dlog = np.log1p((hi - lo) / lo)
    for j in range(order + 1):
        e1 = exponent + j + 1.0
        if e1 == 0.0:
            out[j] = dlog
        else:
            out[j] = lo**e1 * np.expm1(e1 * dlog) / e1
    return out


def shifted_cell_moments(nodes: np.ndarray, exponent: float, order: int) -> np.ndarray:
    """T_j = int_cell ((r - r_left)/h)^j r^exponent dr for every grid cell.

    These are the building blocks for piecewise-linear assembly: products of
    hat functions and interpolated coefficients are polynomials in the local
    coordinate (r - r_left)/h.
    """
    lo = nodes[:-1]
    hi = nodes[1:]
    h = hi - lo
    mu = power_moments(lo, hi, exponent, order)
    T = np.empty_like(mu)
    T[0] = mu[0]
    if order >= 1:
        T[1] = (mu[1] - lo * mu[0]) / h
    if order >= 2:
        T[2] = (mu[2] - 2.0 * lo * mu[1] + lo**2 * mu[0]) / h**2
    if order >= 3:
        T[3] = (mu[3] - 3.0 * lo * mu[2] + 3.0 * lo**2 * mu[1] - lo**3 * mu[0]) / h**3
    return T


def _cubic_cell_coeffs(nodes: np.ndarray, values: np.ndarray):
    """Monomial coefficients of the per-cell cubic interpolant of the samples.

    Cell i uses the four nodes nearest to it (one-sided at the ends), so any
    cubic sampled on the grid is reproduced exactly on every cell.
    """
    n = nodes.size
    start = np.clip(np.arange(n - 1) - 1, 0, n - 4)
    x0, x1, x2, x3 = (nodes[start + k] for k in range(4))
    g0, g1, g2, g3 = (values[start + k] for k in range(4))
    d01 = (g1 - g0) / (x1 - x0)
    d12 = (g2 - g1) / (x2 - x1)
    d23 = (g3 - g2) / (x3 - x2)
    d012 = (d12 - d01) / (x2 - x0)
    d123 = (d23 - d12) / (x3 - x1)
    d0123 = (d123 - d012) / (x3 - x0)
    c3 = d0123
    c2 = d012 - d0123 * (x0 + x1 + x2)
    c1 = d01 - d012 * (x0 + x1) + d0123 * (x0 * x1 + x0 * x2 + x1 * x2)
    c0 = g0 - d01 * x0 + d012 * x0 * x1 - d0123 * x0 * x1 * x2
    return c0, c1, c2, c3


def integrate(
    values,
    grid: RadialGrid,
    weight_exponent: float = 0.0,
    lower: float = 0.0,
    upper: float = 1.0,
) -> float:
    """Composite quadrature of int g(r) r^w dr from lower to upper.

    g is given by its samples at the grid nodes; per cell it is replaced by
    the cubic through the four nearest nodes and integrated against r^w in
    closed form, so monomials g(r) = r^k, k <= 3, are integrated exactly.
    lower = 0 is allowed for w > -1: the segment [0, r_min] uses the linear
    extension from the value and slope at the smallest node.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.nodes.shape:
        raise ParameterError("values must be sampled at every grid node")
    if not (0.0 <= lower < upper <= 1.0):
        raise ParameterError(f"need 0 <= lower < upper <= 1, got [{lower}, {upper}]")
    w = float(weight_exponent)
    total = 0.0
    nodes = grid.nodes
    if lower < nodes[0]:
        if lower > 0.0:
            raise ParameterError(
                f"lower bound {lower} falls below the smallest grid node {nodes[0]}"
            )
        if w <= -1.0:
            raise SingularityError(f"weight r^{w} is not integrable at 0")
        # analytic extension on [0, min(upper, r_min)] from the first node
        b = min(upper, nodes[0])
        slope = (values[1] - values[0]) / (nodes[1] - nodes[0])
        c0 = values[0] - slope * nodes[0]
        total += c0 * b ** (w + 1.0) / (w + 1.0) + slope * b ** (w + 2.0) / (w + 2.0)
        if upper <= nodes[0]:
            return total
        lower = nodes[0]
    lo_cell = nodes[:-1]
    hi_cell = nodes[1:]
    sel = (hi_cell > lower) & (lo_cell < upper)
    if not np.any(sel):
        return total
    a = np.maximum(lo_cell[sel], lower)
    b = np.minimum(hi_cell[sel], upper)
    mu = power_moments(a, b, w, 3)
    c0, c1, c2, c3 = _cubic_cell_coeffs(nodes, values)
    idx = np.nonzero(sel)[0]
    total += float(
        np.sum(c0[idx] * mu[0] + c1[idx] * mu[1] + c2[idx] * mu[2] + c3[idx] * mu[3])
    )
    return total
