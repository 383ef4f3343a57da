"""Norms, energies, and verifiers for the quantitative radial inequalities.

Constants in the verified bounds are never hardcoded: each check reports the
empirical sup of the relevant ratio together with its relative change under
grid coarsening, so a finite, refinement-stable sup certifies the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DataError, DegeneracyError, ParameterError
from .grid import ProblemParams, RadialGrid, integrate, make_grid, sphere_area
from .profiles import (
    Nonlinearity,
    RadialProfile,
    gamma_value,
    psi_profile,
    recover_nonlinearity,
    s_alpha_value,
    synthesize_solution,
)
from .util import loglog_slope, parallel_map

__all__ = [
    "EstimateCheck",
    "DiagnosticsReport",
    "RadialTestFunction",
    "linear_cap",
    "power_cap",
    "origin_ramp",
    "key_test_suite",
    "lp_norm",
    "h1_norm",
    "quotient_scaling_fit",
    "check_pointwise_estimate",
    "key_inequality",
    "ur_band_bound",
    "hardy_stability_margin",
    "diagnostics",
    "counterexample_profile",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True, eq=False)
class EstimateCheck:
    """Empirical verdict on one inequality: ratios, their sup, fit, drift."""

    name: str
    ratio_series: list
    sup_ratio: float
    fitted_slope: float | None = None
    fit_residual: float | None = None
    refinement_drift: float = math.nan


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    energy: float
    first_variation_residual: float
    ur_sign_ok: bool
    l1_norm: float
    lp_norms: dict
    h1_annulus_norm: float


# ---------------------------------------------------------------------------
# norms


def lp_norm(profile: RadialProfile, p: float) -> float:
    """(omega_N int |u|^p r^(N-1) dr)^(1/p); p = inf is the node max plus u(0)."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    n_dim = profile.params.N
    if math.isinf(p):
        m = float(np.max(np.abs(profile.u)))
        if profile.center_value is not None:
            m = max(m, abs(profile.center_value))
        return m
    val = integrate(np.abs(profile.u) ** p, profile.grid, weight_exponent=n_dim - 1.0)
    return float((sphere_area(n_dim) * val) ** (1.0 / p))


def h1_norm(profile: RadialProfile, lower: float = 0.0, upper: float = 1.0) -> float:
    """Full H^1 norm (function plus gradient) on the annulus lower < r < upper."""
    n_dim = profile.params.N
    sq = integrate(
        profile.u**2 + profile.u_r**2, profile.grid, n_dim - 1.0, lower, upper
    )
    return float(math.sqrt(sphere_area(n_dim) * sq))


# ---------------------------------------------------------------------------
# the unbounded index-1 family and its norm-quotient scaling


def counterexample_profile(
    params: ProblemParams, r0: float, node_count: int = 2048, r_min: float = 1.0e-6
):
    """Synthesized unbounded solution and its nonlinearity on an anchored grid."""
    grid = make_grid("graded", node_count=node_count, r_min=r_min, anchor=r0)
    psi = psi_profile(params, r0)
    return synthesize_solution(psi, grid), recover_nonlinearity(psi, grid), grid


def quotient_scaling_fit(
    params: ProblemParams, p: float, q: float, r0_list, node_count: int = 2048
) -> EstimateCheck:
    """Log-log slope of |u|_p / |u|_q against r0 for the synthesized family.

    The construction gives quotient ~ r0^(-N(1/q - 1/p)) (with 1/p = 0 for
    p = inf); divergence as r0 -> 0 is asserted only for p > N/(N-2).
    """
    if not 1 <= q < p:
        raise ParameterError(f"need 1 <= q < p, got p={p}, q={q}")
    r0_list = sorted(float(r) for r in r0_list)
    if len(r0_list) < 3:
        raise DataError("need at least 3 junction radii for a slope fit")

    def quotient(r0: float) -> float:
        profile, _, _ = counterexample_profile(params, r0, node_count=node_count)
        return lp_norm(profile, p) / lp_norm(profile, q)

    ratios = parallel_map(quotient, r0_list)
    slope, resid = loglog_slope(r0_list, ratios)
    series = list(zip(r0_list, ratios))
    return EstimateCheck(
        name=f"norm-quotient-rate p={p:g} q={q:g} N={params.N}",
        ratio_series=series,
        sup_ratio=float(max(ratios)),
        fitted_slope=slope,
        fit_residual=resid,
    )


# ---------------------------------------------------------------------------
# pointwise bounds by dimension


def _subsample(profile: RadialProfile) -> RadialProfile:
    """Every-other-node restriction (keeping the outer boundary) for drift checks."""
    idx = np.arange(profile.grid.n - 1, -1, -2)[::-1]
    if idx[0] != 0:
        idx = np.concatenate([[0], idx])
    sub_nodes = profile.grid.nodes[idx].copy()
    anchor = profile.grid.anchor if profile.grid.anchor in sub_nodes else None
    sub_grid = RadialGrid(sub_nodes, kind=profile.grid.kind, anchor=anchor)
    return RadialProfile(
        grid=sub_grid,
        u=profile.u[idx].copy(),
        u_r=profile.u_r[idx].copy(),
        params=profile.params,
        label=profile.label,
        center_value=profile.center_value,
    )


def check_pointwise_estimate(profile: RadialProfile) -> EstimateCheck:
    """sup_r |u(r)| / (|u|_{H1(annulus)} * bound(r)) with the dimensional bound.

    bound(r) is 1 below the threshold dimension, |log r| + 1 at it, and
    r^gamma above it.  The sup must be finite and stable under coarsening.
    """
    params = profile.params

    def sup_of(prof: RadialProfile):
        ann = h1_norm(prof, 0.5, 1.0)
        if ann == 0.0:
            raise DegeneracyError("H^1 annulus norm vanishes; the bound is vacuous")
        r = prof.grid.nodes
        gap = params.critical_dim - params.N
        if gap > 1e-12:
            bound = np.ones_like(r)
        elif gap < -1e-12:
            bound = r ** gamma_value(params.N, params.alpha)
        else:
            bound = np.abs(np.log(r)) + 1.0
        ratios = np.abs(prof.u) / (ann * bound)
        return ratios, float(np.max(ratios))

    ratios, sup_full = sup_of(profile)
    _, sup_half = sup_of(_subsample(profile))
    drift = abs(sup_full - sup_half) / sup_full if sup_full else math.nan
    series = list(zip(profile.grid.nodes.tolist(), ratios.tolist()))
    return EstimateCheck(
        name=f"pointwise-bound N={params.N} alpha={params.alpha:g}",
        ratio_series=series,
        sup_ratio=sup_full,
        refinement_drift=drift,
    )


# ---------------------------------------------------------------------------
# the key quadratic-form inequality and its proof test functions


@dataclass(frozen=True)
class RadialTestFunction:
    """Lipschitz test function on (0, 1] with v(1) = 0, given with its slope."""

    name: str
    value: Callable
    slope: Callable
    breakpoints: tuple = ()


def linear_cap() -> RadialTestFunction:
    return RadialTestFunction("linear-cap", lambda t: 1.0 - t, lambda t: -1.0 + 0.0 * t)


def power_cap(s: float, r: float, cap_at: float = 0.5) -> RadialTestFunction:
    """t^s on [r, cap_at] matched linearly below r and by a linear cap above.

    v = r^(s-1) t on (0, r), t^s on [r, cap_at], cap_at^(s-1)*... scaled
    (1 - t)/(1 - cap_at) continuation above cap_at; with cap_at = 1/2 the
    outer piece is 2^(1-s)(1 - t).
    """
    if not 0.0 < r < cap_at < 1.0:
        raise ParameterError(f"need 0 < r < cap_at < 1, got r={r}, cap_at={cap_at}")
    outer = cap_at**s / (1.0 - cap_at)

    def value(t):
        t = np.asarray(t, dtype=float)
        return np.where(
            t < r, r ** (s - 1.0) * t, np.where(t <= cap_at, t**s, outer * (1.0 - t))
        )

    def slope(t):
        t = np.asarray(t, dtype=float)
        return np.where(
            t < r,
            r ** (s - 1.0),
            np.where(t <= cap_at, s * t ** (s - 1.0), -outer),
        )

    return RadialTestFunction(f"power-cap s={s:g} r={r:g}", value, slope, (r, cap_at))


def origin_ramp(r1: float, eps: float) -> RadialTestFunction:
    """Linear rise to t = r1 - eps, sharp descent to zero at r1, zero beyond."""
    if not 0.0 < eps < r1 <= 1.0:
        raise ParameterError(f"need 0 < eps < r1 <= 1, got r1={r1}, eps={eps}")

    def value(t):
        t = np.asarray(t, dtype=float)
        return np.where(
            t < r1 - eps,
            t / (r1 - eps),
            np.where(t <= r1, (r1 - t) / eps, 0.0),
        )

    def slope(t):
        t = np.asarray(t, dtype=float)
        return np.where(
            t < r1 - eps, 1.0 / (r1 - eps), np.where(t <= r1, -1.0 / eps, 0.0)
        )

    return RadialTestFunction(f"ramp r1={r1:g} eps={eps:g}", value, slope, (r1 - eps, r1))


def key_test_suite(params: ProblemParams, band_r: float = 0.25) -> list[RadialTestFunction]:
    """The test functions driving the derivative-band and nonvanishing arguments."""
    s = s_alpha_value(params.N, params.alpha)
    return [
        linear_cap(),
        power_cap(s, band_r),
        power_cap(s, band_r / 4.0),
        origin_ramp(0.75, 0.1),
        origin_ramp(0.5, 0.05),
    ]


def _interp_ur_sq(profile: RadialProfile):
    """Cubic-stencil interpolant of u_r per cell, squared at evaluation points."""
    from .grid import _cubic_cell_coeffs

    nodes = profile.grid.nodes
    c0, c1, c2, c3 = _cubic_cell_coeffs(nodes, profile.u_r)

    def at(cell_idx, pts):
        ur = c0[cell_idx] + pts * (c1[cell_idx] + pts * (c2[cell_idx] + pts * c3[cell_idx]))
        return ur**2

    return at


def key_inequality(
    profile: RadialProfile, v: RadialTestFunction, r0: float, upper: float = 1.0
) -> float:
    """I(r0, upper; v) = int t^(N-1) u_r^2 (v'^2 + a v'v/t + (1-N-aN/2) v^2/t^2) dt.

    Nonnegative over (r0, 1) for every Lipschitz v with v(1) = 0 whenever the
    profile is a stable finite-energy radial solution.  Integration is per
    grid cell (split at the test function's breakpoints) with a fixed Gauss
    rule; u_r is interpolated with the same cubic stencils as the quadrature.
    """
    params = profile.params
    n_dim, alpha = params.N, params.alpha
    nodes = profile.grid.nodes
    if not nodes[0] <= r0 < upper <= 1.0:
        raise ParameterError(f"need r_min <= r0 < upper <= 1, got r0={r0}")
    cuts = np.unique(
        np.concatenate(
            [
                nodes[(nodes >= r0) & (nodes <= upper)],
                [r0, upper],
                [b for b in v.breakpoints if r0 < b < upper],
            ]
        )
    )
    lo, hi = cuts[:-1], cuts[1:]
    cell_of = np.clip(np.searchsorted(nodes, lo, side="right") - 1, 0, nodes.size - 2)
    ur_sq = _interp_ur_sq(profile)
    pts = lo[:, None] + (hi - lo)[:, None] * _GL_X[None, :]
    w2 = ur_sq(cell_of[:, None], pts)
    vv = v.value(pts)
    vs = v.slope(pts)
    c0 = 1.0 - n_dim - alpha * n_dim / 2.0
    integrand = pts ** (n_dim - 1.0) * w2 * (vs**2 + alpha * vs * vv / pts + c0 * vv**2 / pts**2)
    return float(np.sum((hi - lo) * (integrand @ _GL_W)))


# ---------------------------------------------------------------------------
# derivative band bound


def ur_band_bound(profile: RadialProfile, r_list) -> EstimateCheck:
    """Band integrals int_{r/2}^r u_r^2 dt against the predicted power of r.

    The certified exponent is 3 - N + alpha + sqrt((2+alpha)(2N-2+alpha));
    ratios are taken against the squared annulus gradient norm times r^expo.
    """
    params = profile.params
    n_dim, alpha = params.N, params.alpha
    expo = 3.0 - n_dim + alpha + math.sqrt((2.0 + alpha) * (2.0 * n_dim - 2.0 + alpha))
    grad_sq = sphere_area(n_dim) * integrate(
        profile.u_r**2, profile.grid, n_dim - 1.0, 0.5, 1.0
    )
    r_list = sorted(float(r) for r in r_list)
    bands = [
        integrate(profile.u_r**2, profile.grid, 0.0, r / 2.0, r) for r in r_list
    ]
    ratios = [band / (grad_sq * r**expo) for band, r in zip(bands, r_list)]
    slope, resid = loglog_slope(r_list, bands)
    return EstimateCheck(
        name=f"derivative-band N={n_dim} alpha={alpha:g}",
        ratio_series=list(zip(r_list, ratios)),
        sup_ratio=float(max(ratios)),
        fitted_slope=slope,
        fit_residual=resid,
    )


# ---------------------------------------------------------------------------
# Hardy comparison and solution diagnostics


def hardy_stability_margin(profile: RadialProfile, nonlinearity: Nonlinearity) -> float:
    """(N-2)^2/4 - sup_r r^(2+alpha) f'(u(r)).

    A nonnegative margin certifies stability by comparison with the sharp
    weighted Hardy constant; the log-type threshold solutions attain 0.
    """
    params = profile.params
    r = profile.grid.nodes
    weight = r ** (2.0 + params.alpha) * np.asarray(
        nonlinearity.fprime(profile.u), dtype=float
    )
    return float((params.N - 2.0) ** 2 / 4.0 - np.max(weight))


def _nonuniform_derivative(nodes: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Second-order derivative of samples at the interior nodes."""
    hl = nodes[1:-1] - nodes[:-2]
    hr = nodes[2:] - nodes[1:-1]
    return (
        hl / (hr * (hl + hr)) * vals[2:]
        - (hl - hr) / (hl * hr) * vals[1:-1]
        - hr / (hl * (hl + hr)) * vals[:-2]
    )


def diagnostics(profile: RadialProfile, nonlinearity: Nonlinearity) -> DiagnosticsReport:
    """Energy, Euler-Lagrange defect, derivative sign, and the norm battery."""
    params = profile.params
    n_dim, alpha = params.N, params.alpha
    r = profile.grid.nodes
    F = np.asarray(nonlinearity.F(profile.u), dtype=float)
    dens = 0.5 * profile.u_r**2 - r**alpha * F
    energy = sphere_area(n_dim) * integrate(dens, profile.grid, n_dim - 1.0)
    d_ur = _nonuniform_derivative(r, profile.u_r)
    f_vals = np.asarray(nonlinearity.f(profile.u), dtype=float)
    defect = -d_ur - (n_dim - 1.0) * profile.u_r[1:-1] / r[1:-1] - r[1:-1] ** alpha * f_vals[1:-1]
    residual = float(np.max(np.abs(defect)))
    sign_ok = bool(np.all(profile.u_r < 0.0) or np.all(profile.u_r > 0.0))
    lp = {p: lp_norm(profile, p) for p in (1.0, 2.0, math.inf)}
    return DiagnosticsReport(
        energy=float(energy),
        first_variation_residual=residual,
        ur_sign_ok=sign_ok,
        l1_norm=lp[1.0],
        lp_norms=lp,
        h1_annulus_norm=h1_norm(profile, 0.5, 1.0),
    )
