"""Radial solution profiles and their nonlinearities.

Two explicit families drive most of the test battery:

* unbounded solutions of -div(grad u) = f(u) on the unit ball with one
  negative radial direction, built from a concave extension of the identity
  profile Psi(t) = t past a junction t = r0^N; and
* the log-type and power-type solutions of -div(grad u) = r^alpha f(u) that
  realize the sharp pointwise bounds when N >= 10 + 4*alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtrapolationError, ParameterError
from .grid import ProblemParams, RadialGrid

__all__ = [
    "PsiProfile",
    "RadialProfile",
    "Nonlinearity",
    "ExponentialNonlinearity",
    "PowerNonlinearity",
    "SignedPowerNonlinearity",
    "LinearNonlinearity",
    "ConstantNonlinearity",
    "TabulatedNonlinearity",
    "HHExponents",
    "psi_profile",
    "synthesize_solution",
    "recover_nonlinearity",
    "gamma_value",
    "s_alpha_value",
    "gamma_exponent",
    "explicit_hh_solution",
    "hh_residual",
]

# 8-point Gauss-Legendre rule on [0, 1]; per-cell this leaves the smooth
# closed-form integrands at rounding level
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


# ---------------------------------------------------------------------------
# nonlinearities


class Nonlinearity:
    """f, f' and the antiderivative F with F(0) = 0."""

    def f(self, u):
        raise NotImplementedError

    def fprime(self, u):
        raise NotImplementedError

    def F(self, u):
        raise NotImplementedError


@dataclass(frozen=True)
class ExponentialNonlinearity(Nonlinearity):
    """f(u) = coeff * exp(rate * u)."""

    coeff: float
    rate: float

    def f(self, u):
        return self.coeff * np.exp(self.rate * np.asarray(u, dtype=float))

    def fprime(self, u):
        return self.rate * self.f(u)

    def F(self, u):
        u = np.asarray(u, dtype=float)
        return self.coeff * np.expm1(self.rate * u) / self.rate


@dataclass(frozen=True)
class PowerNonlinearity(Nonlinearity):
    """f(u) = coeff * (shift + u)^exponent, defined for shift + u > 0."""

    coeff: float
    exponent: float
    shift: float = 0.0

    def f(self, u):
        return self.coeff * (self.shift + np.asarray(u, dtype=float)) ** self.exponent

    def fprime(self, u):
        base = self.shift + np.asarray(u, dtype=float)
        return self.coeff * self.exponent * base ** (self.exponent - 1.0)

    def F(self, u):
        base = self.shift + np.asarray(u, dtype=float)
        p1 = self.exponent + 1.0
        return self.coeff * (base**p1 - self.shift**p1) / p1


@dataclass(frozen=True)
class SignedPowerNonlinearity(Nonlinearity):
    """Odd superlinear power f(u) = coeff * |u|^(power-1) * u, power > 1."""

    coeff: float
    power: float

    def f(self, u):
        u = np.asarray(u, dtype=float)
        return self.coeff * np.abs(u) ** (self.power - 1.0) * u

    def fprime(self, u):
        u = np.asarray(u, dtype=float)
        return self.coeff * self.power * np.abs(u) ** (self.power - 1.0)

    def F(self, u):
        u = np.asarray(u, dtype=float)
        return self.coeff * np.abs(u) ** (self.power + 1.0) / (self.power + 1.0)


@dataclass(frozen=True)
class LinearNonlinearity(Nonlinearity):
    """f(u) = slope * u."""

    slope: float

    def f(self, u):
        return self.slope * np.asarray(u, dtype=float)

    def fprime(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.slope)

    def F(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * self.slope * u**2


@dataclass(frozen=True)
class ConstantNonlinearity(Nonlinearity):
    """f(u) = value."""

    value: float

    def f(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.value)

    def fprime(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def F(self, u):
        return self.value * np.asarray(u, dtype=float)


@dataclass(frozen=True, eq=False)
class TabulatedNonlinearity(Nonlinearity):
    """f and f' tabulated against strictly increasing u samples.

    f is interpolated linearly; f' is read from its stored column (never
    re-differenced, the table owner knows the exact derivative); F is the
    exact antiderivative of the piecewise-linear f anchored at F(0) = 0.
    """

    u_table: np.ndarray
    f_table: np.ndarray
    fprime_table: np.ndarray
    _F_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        u = np.asarray(self.u_table, dtype=float)
        fv = np.asarray(self.f_table, dtype=float)
        fp = np.asarray(self.fprime_table, dtype=float)
        if u.ndim != 1 or u.size < 2 or fv.shape != u.shape or fp.shape != u.shape:
            raise ParameterError("table columns must be 1-d arrays of equal length >= 2")
        if not np.all(np.diff(u) > 0):
            raise ParameterError("table abscissae must be strictly increasing")
        cumF = np.concatenate(
            [[0.0], np.cumsum(0.5 * (fv[1:] + fv[:-1]) * np.diff(u))]
        )
        # anchor F(0) = 0 by subtracting the interpolated value at u = 0
        if u[0] <= 0.0 <= u[-1]:
            cumF -= np.interp(0.0, u, cumF)
        for name, arr in (("u_table", u), ("f_table", fv), ("fprime_table", fp)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        cumF.setflags(write=False)
        object.__setattr__(self, "_F_table", cumF)

    def _check_range(self, u):
        u = np.asarray(u, dtype=float)
        span = self.u_table[-1] - self.u_table[0]
        slack = 1e-9 * max(span, 1.0)
        if np.any(u < self.u_table[0] - slack) or np.any(u > self.u_table[-1] + slack):
            raise ExtrapolationError(
                f"argument outside tabulated range [{self.u_table[0]}, {self.u_table[-1]}]"
            )
        return u

    def f(self, u):
        return np.interp(self._check_range(u), self.u_table, self.f_table)

    def fprime(self, u):
        return np.interp(self._check_range(u), self.u_table, self.fprime_table)

    def F(self, u):
        return np.interp(self._check_range(u), self.u_table, self._F_table)


# ---------------------------------------------------------------------------
# radial profiles


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A radial function and its derivative sampled on a grid.

    center_value carries u(0) when a closed form is available (bounded
    profiles); it is None for profiles singular at the origin.
    """

    grid: RadialGrid
    u: np.ndarray
    u_r: np.ndarray
    params: ProblemParams
    label: str = ""
    center_value: float | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        u_r = np.asarray(self.u_r, dtype=float)
        if u.shape != self.grid.nodes.shape or u_r.shape != self.grid.nodes.shape:
            raise ParameterError("profile samples must match the grid nodes")
        u.setflags(write=False)
        u_r.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "u_r", u_r)


# ---------------------------------------------------------------------------
# the concave-extension construction


@dataclass(frozen=True)
class PsiProfile:
    """Profile Psi equal to the identity up to t = r0^N, then saturating.

    Past the junction, Psi is the concave increasing extension
        Psi(t) = kappa*a - (kappa-1)*a * exp(-(t - a)/((kappa-1)*a)),
    a = r0^N, which matches value and slope at the junction and stays below
    the bound kappa * r0^N with kappa = N / (2*sqrt(N-1)).  The junction is
    C^1 only (the second derivative jumps); every inequality the construction
    needs survives this deliberate smoothness relaxation.
    """

    params: ProblemParams
    r0: float

    @property
    def kappa(self) -> float:
        n = self.params.N
        return n / (2.0 * math.sqrt(n - 1.0))

    @property
    def junction(self) -> float:
        return self.r0**self.params.N

    @property
    def extension_scale(self) -> float:
        return (self.kappa - 1.0) * self.junction

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        a, s, k = self.junction, self.extension_scale, self.kappa
        ext = k * a - s * np.exp(-np.maximum(t - a, 0.0) / s)
        return np.where(t <= a, t, ext)

    def psi_prime(self, t):
        t = np.asarray(t, dtype=float)
        a, s = self.junction, self.extension_scale
        return np.where(t <= a, 1.0, np.exp(-np.maximum(t - a, 0.0) / s))

    def psi_second(self, t):
        """Right-continuous at the junction: the extension-side value."""
        t = np.asarray(t, dtype=float)
        a, s = self.junction, self.extension_scale
        return np.where(t < a, 0.0, -np.exp(-np.maximum(t - a, 0.0) / s) / s)


def psi_profile(params: ProblemParams, r0: float) -> PsiProfile:
    """Concave-extension profile for the given dimension and junction radius."""
    if params.N < 3:
        raise ParameterError(
            "N = 2 is unsupported: kappa_2 = 1 leaves no room for a bounded extension"
        )
    if not 0.0 < r0 < 1.0:
        raise ParameterError(f"r0 must lie in (0, 1), got {r0}")
    return PsiProfile(params=params, r0=r0)


def synthesize_solution(psi: PsiProfile, grid: RadialGrid) -> RadialProfile:
    """Solution u(r) = int_r^1 Psi(s^N) s^(1-N) ds sampled on the grid.

    The integrand is evaluated in closed form, cell by cell with a fixed
    Gauss rule, and accumulated from the outer boundary so u(1) = 0 exactly.
    The derivative comes from the identity u'(r) = -r^(1-N) Psi(r^N).
    """
    if grid.anchor is None or grid.anchor != psi.r0:
        raise ParameterError("grid anchor must coincide with the junction radius r0")
    n_dim = psi.params.N
    nodes = grid.nodes
    lo, hi = nodes[:-1], nodes[1:]
    h = hi - lo
    pts = lo[:, None] + h[:, None] * _GL_X[None, :]
    vals = psi.psi(pts**n_dim) * pts ** (1.0 - n_dim)
    cell = h * (vals @ _GL_W)
    u = np.zeros_like(nodes)
    u[:-1] = np.cumsum(cell[::-1])[::-1]
    u_r = -nodes ** (1.0 - n_dim) * psi.psi(nodes**n_dim)
    i0 = grid.index_of(psi.r0)
    center = float(u[i0]) + 0.5 * psi.r0**2
    return RadialProfile(
        grid=grid,
        u=u,
        u_r=u_r,
        params=psi.params,
        label=f"counterexample N={n_dim} r0={psi.r0:g}",
        center_value=center,
    )


def recover_nonlinearity(psi: PsiProfile, grid: RadialGrid) -> TabulatedNonlinearity:
    """Nonlinearity along the synthesized solution, tabulated against u.

    f(u(r)) = N Psi'(r^N) and f'(u(r)) = -N^2 r^(2N-2) Psi''(r^N) / Psi(r^N);
    u is strictly decreasing in r so reversing the node order gives an
    increasing table.  At the junction node the plateau-side value f' = 0 is
    stored, keeping the inner region exactly potential-free; the table is
    extended by the constant plateau row at u(0).
    """
    profile = synthesize_solution(psi, grid)
    n_dim = psi.params.N
    r = grid.nodes
    t = r**n_dim
    f_vals = n_dim * psi.psi_prime(t)
    fp_vals = -(n_dim**2) * r ** (2.0 * (n_dim - 1.0)) * psi.psi_second(t) / psi.psi(t)
    i0 = grid.index_of(psi.r0)
    fp_vals[i0] = 0.0
    u_tab = profile.u[::-1].copy()
    f_tab = f_vals[::-1].copy()
    fp_tab = fp_vals[::-1].copy()
    # plateau row at the center value u(0): f = N, f' = 0
    u0 = profile.center_value
    if u0 is not None and u0 > u_tab[-1]:
        u_tab = np.append(u_tab, u0)
        f_tab = np.append(f_tab, float(n_dim))
        fp_tab = np.append(fp_tab, 0.0)
    return TabulatedNonlinearity(u_table=u_tab, f_table=f_tab, fprime_table=fp_tab)


# ---------------------------------------------------------------------------
# sharp-decay exponents and the explicit optimal solutions


def gamma_value(n_dim: float, alpha: float) -> float:
    """Sharp decay exponent 2 - N/2 + alpha/2 + sqrt((alpha+2)(alpha+2N-2))/2."""
    return 2.0 - n_dim / 2.0 + alpha / 2.0 + math.sqrt((alpha + 2.0) * (alpha + 2.0 * n_dim - 2.0)) / 2.0


def s_alpha_value(n_dim: float, alpha: float) -> float:
    """Exponent -alpha/2 - sqrt((2+alpha)(2N-2+alpha))/2 annihilating the middle term of the key quadratic."""
    return -alpha / 2.0 - math.sqrt((2.0 + alpha) * (2.0 * n_dim - 2.0 + alpha)) / 2.0


@dataclass(frozen=True)
class HHExponents:
    """Decay exponent, test-function exponent and threshold dimension."""

    gamma: float
    s_alpha: float
    critical_dim: float


def gamma_exponent(params: ProblemParams) -> HHExponents:
    return HHExponents(
        gamma=gamma_value(params.N, params.alpha),
        s_alpha=s_alpha_value(params.N, params.alpha),
        critical_dim=params.critical_dim,
    )


def explicit_hh_solution(
    params: ProblemParams,
    case: str,
    grid: RadialGrid,
    gamma: float | None = None,
) -> tuple[RadialProfile, Nonlinearity]:
    """Explicit stable radial solution of -div(grad u) = r^alpha f(u).

    case 'critical' (N = 10 + 4*alpha): u = |log r| with
        f(u) = (N-2) exp((2+alpha) u);
    case 'supercritical' (N > 10 + 4*alpha): u = r^gamma - 1 with
        f(u) = (-gamma)(gamma+N-2) (1+u)^(1 + (2+alpha)/(-gamma)),
    for any gamma in [gamma(N, alpha), 0).
    """
    n_dim, alpha = params.N, params.alpha
    r = grid.nodes
    if case == "critical":
        if abs(n_dim - params.critical_dim) > 1e-12:
            raise ParameterError(f"critical case needs N = 10 + 4*alpha, got N={n_dim}, alpha={alpha}")
        u = -np.log(r)
        u_r = -1.0 / r
        nl = ExponentialNonlinearity(coeff=float(n_dim - 2), rate=2.0 + alpha)
        label = f"log-critical N={n_dim} alpha={alpha:g}"
    elif case == "supercritical":
        if not n_dim > params.critical_dim:
            raise ParameterError(f"supercritical case needs N > 10 + 4*alpha, got N={n_dim}, alpha={alpha}")
        g_min = gamma_value(n_dim, alpha)
        g = g_min if gamma is None else float(gamma)
        if not (g_min - 1e-12 <= g < 0.0):
            raise ParameterError(f"gamma must lie in [{g_min}, 0), got {g}")
        u = r**g - 1.0
        u_r = g * r ** (g - 1.0)
        nl = PowerNonlinearity(
            coeff=(-g) * (g + n_dim - 2.0),
            exponent=1.0 + (2.0 + alpha) / (-g),
            shift=1.0,
        )
        label = f"power N={n_dim} alpha={alpha:g} gamma={g:.6g}"
    else:
        raise ParameterError(f"unknown case {case!r}; use 'critical' or 'supercritical'")
    profile = RadialProfile(grid=grid, u=u, u_r=u_r, params=params, label=label)
    return profile, nl


def hh_residual(
    params: ProblemParams,
    case: str,
    r,
    gamma: float | None = None,
) -> np.ndarray:
    """-(u'' + (N-1) u'/r) - r^alpha f(u) through the closed forms.

    Vanishes identically (up to rounding) for both explicit families.
    """
    n_dim, alpha = params.N, params.alpha
    r = np.asarray(r, dtype=float)
    if case == "critical":
        # u = -log r: u' = -1/r, u'' = 1/r^2
        lhs = -(1.0 / r**2 - (n_dim - 1.0) / r**2)
        rhs = (n_dim - 2.0) * r**alpha * np.exp((2.0 + alpha) * (-np.log(r)))
        return lhs - rhs
    if case == "supercritical":
        g = gamma_value(n_dim, alpha) if gamma is None else float(gamma)
        lhs = -(g * (g - 1.0) + (n_dim - 1.0) * g) * r ** (g - 2.0)
        coeff = (-g) * (g + n_dim - 2.0)
        rhs = coeff * r**alpha * (r**g) ** (1.0 + (2.0 + alpha) / (-g))
        return lhs - rhs
    raise ParameterError(f"unknown case {case!r}")
