"""Shooting continuation of the branch -div(grad u) = lam * f(u) on the unit ball.

f is autonomous, so the branch is parameterized by the center value m: solve
w'' + (N-1) w'/r + f(w) = 0 with w(0) = m, w'(0) = 0, locate the first zero R,
and rescale u(r) = w(R r), lam = R^2.  lam(m) is single-valued where u(lam)
folds, which resolves the turning point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DataError, NonlinearityClassError, ParameterError, StepSizeError
from .estimates import EstimateCheck, h1_norm, lp_norm
from .grid import ProblemParams, RadialGrid
from .profiles import Nonlinearity, PowerNonlinearity, RadialProfile
from .spectral import QuadraticFormSpec, assemble_pencil, morse_index
from .util import parallel_map

__all__ = [
    "BranchPoint",
    "BranchReport",
    "shoot",
    "shooting_defect",
    "trace_branch",
    "extremal_diagnostics",
    "joseph_lundgren_power",
    "extremal_parameter",
    "singular_extremal_profile",
]


@dataclass(frozen=True, eq=False)
class BranchPoint:
    """One branch solution keyed by its center value m = u(0) = sup u."""

    m: float
    lam: float
    sup_norm: float
    l1_norm: float
    h1_norm: float
    radial_morse_index: int | None
    profile: RadialProfile


@dataclass(frozen=True, eq=False)
class BranchReport:
    """Branch points ordered by m, the located fold, and the minimal branch."""

    points: list
    lambda_star: float
    minimal_branch: list
    nonlinearity: Nonlinearity
    extremal_reference: tuple | None = None


def joseph_lundgren_power(n_dim: int) -> float:
    """Power (N - 2 sqrt(N-1)) / (N - 2 sqrt(N-1) - 4), finite for N >= 11."""
    s = n_dim - 2.0 * math.sqrt(n_dim - 1.0)
    if s - 4.0 <= 0.0:
        raise ParameterError(f"the closed-form power needs N >= 11, got N={n_dim}")
    return s / (s - 4.0)


def extremal_parameter(n_dim: int) -> float:
    """Closed-form fold parameter (2/(q-1)) (N - 2 - 2/(q-1)) for f = (1+u)^q, q = q_N."""
    beta = 2.0 / (joseph_lundgren_power(n_dim) - 1.0)
    return beta * (n_dim - 2.0 - beta)


def singular_extremal_profile(params: ProblemParams, grid: RadialGrid) -> RadialProfile:
    """The singular profile r^(-2/(q_N - 1)) - 1 reached at the fold for N >= 11."""
    beta = 2.0 / (joseph_lundgren_power(params.N) - 1.0)
    r = grid.nodes
    return RadialProfile(
        grid=grid,
        u=r ** (-beta) - 1.0,
        u_r=-beta * r ** (-beta - 1.0),
        params=params,
        label=f"singular-extremal N={params.N}",
    )


def _first_zero(
    params: ProblemParams,
    nonlinearity: Nonlinearity,
    m: float,
    rtol: float,
    max_step: float = math.inf,
):
    """Integrate the center problem out to its first zero; return (R, dense sol, r_start)."""
    n_dim = params.N
    f = lambda w: float(nonlinearity.f(w))
    f_m = f(m)
    if f_m <= 0.0:
        raise NonlinearityClassError(f"f(m) must be positive at the center, got f({m}) = {f_m}")

    def rhs(r, y):
        return [y[1], -(n_dim - 1.0) / r * y[1] - f(y[0])]

    def crossing(r, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1.0

    # even series start removes the (N-1)/r singularity: w = m - f(m) r^2/(2N) + c4 r^4
    fp_m = float(nonlinearity.fprime(m))
    c4 = fp_m * f_m / (8.0 * n_dim * (n_dim + 2.0))
    r_scale = math.sqrt(2.0 * n_dim * max(abs(m), 1e-3) / f_m)
    r_start = 1e-5 * r_scale
    y0 = [m - f_m * r_start**2 / (2.0 * n_dim) + c4 * r_start**4,
          -f_m * r_start / n_dim + 4.0 * c4 * r_start**3]
    r_max = max(1e3, 1e3 * r_scale)
    sol = solve_ivp(
        rhs,
        (r_start, r_max),
        y0,
        method="RK45",
        rtol=rtol,
        atol=1e-13 * max(1.0, abs(m)) if rtol < 1.0 else 1e300,
        max_step=max_step,
        events=crossing,
        dense_output=True,
    )
    if sol.status == -1:
        raise StepSizeError(f"integration failed at m={m}: {sol.message}")
    if sol.status != 1 or len(sol.t_events[0]) == 0:
        raise NonlinearityClassError(
            f"no zero crossing before r={r_max:g} at m={m}; f is outside the admissible class"
        )
    return float(sol.t_events[0][0]), sol, r_start, (m, f_m, c4)


def shoot(
    params: ProblemParams,
    nonlinearity: Nonlinearity,
    m: float,
    grid: RadialGrid,
    rtol: float = 1e-10,
    max_step: float = math.inf,
) -> BranchPoint:
    """Branch point with center value m via rescaling of the first zero."""
    if m <= 0.0:
        raise ParameterError(f"center value m must be positive, got {m}")
    n_dim = params.N
    R, sol, r_start, series = _first_zero(params, nonlinearity, m, rtol, max_step)
    rho = grid.nodes * R
    u = np.empty_like(rho)
    u_r = np.empty_like(rho)
    inside = rho < r_start
    if np.any(inside):
        m0, f_m, c4 = series
        rr = rho[inside]
        u[inside] = m0 - f_m * rr**2 / (2.0 * n_dim) + c4 * rr**4
        u_r[inside] = -f_m * rr / n_dim + 4.0 * c4 * rr**3
    vals = sol.sol(np.clip(rho[~inside], r_start, R))
    u[~inside] = vals[0]
    u_r[~inside] = vals[1]
    u[-1] = 0.0
    u_r *= R  # chain rule of u(r) = w(R r)
    lam = R**2
    profile = RadialProfile(
        grid=grid,
        u=u,
        u_r=u_r,
        params=params,
        label=f"branch m={m:g}",
        center_value=m,
    )
    return BranchPoint(
        m=m,
        lam=lam,
        sup_norm=m,
        l1_norm=lp_norm(profile, 1.0),
        h1_norm=h1_norm(profile),
        radial_morse_index=None,
        profile=profile,
    )


def shooting_defect(
    params: ProblemParams,
    nonlinearity: Nonlinearity,
    m: float,
    rtol: float = 1e-10,
    samples: int = 400,
) -> float:
    """sup |(-div grad - lam f)(u)| of the rescaled shot, relative free.

    The rescaling identity is exact, so the PDE defect equals R^2 times the
    ODE defect of the dense interpolant, evaluated here by differentiating
    the interpolant numerically.
    """
    n_dim = params.N
    R, sol, r_start, _ = _first_zero(params, nonlinearity, m, rtol)
    rho = np.linspace(r_start * 2.0, R * (1.0 - 1e-9), samples)
    w, wp = sol.sol(rho)
    dr = 1e-6 * R
    wp_hi = sol.sol(np.minimum(rho + dr, R))[1]
    wp_lo = sol.sol(np.maximum(rho - dr, r_start))[1]
    wpp = (wp_hi - wp_lo) / (np.minimum(rho + dr, R) - np.maximum(rho - dr, r_start))
    defect = wpp + (n_dim - 1.0) / rho * wp + np.asarray(nonlinearity.f(w), dtype=float)
    return float(R**2 * np.max(np.abs(defect)))


def _branch_index(point: BranchPoint, nonlinearity: Nonlinearity) -> int:
    """Radial index of the linearization lam * f'(u) on the ball."""
    params = point.profile.params
    grid = point.profile.grid
    V = point.lam * np.asarray(nonlinearity.fprime(point.profile.u), dtype=float)
    spec = QuadraticFormSpec(params=params, domain=(0.0, 1.0), potential=V)
    pencil = assemble_pencil(spec, grid)
    return morse_index(pencil, allow_boundary=True)


def _fit_lambda_star(ms, lams) -> float:
    """Max of lam(m) plus a quadratic correction through the top three points.

    The fit removes the O(dm^2) sampling bias at an interior fold; it is
    skipped when the top values are flat to rounding or the max sits at the
    sweep boundary.
    """
    i = int(np.argmax(lams))
    lam_max = float(lams[i])
    if i == 0 or i == len(lams) - 1:
        return lam_max
    x = np.log(np.asarray(ms[i - 1 : i + 2], dtype=float))
    y = np.asarray(lams[i - 1 : i + 2], dtype=float)
    if np.ptp(y) <= 1e-9 * abs(lam_max):
        return lam_max
    coef = np.polyfit(x, y, 2)
    if coef[0] >= 0.0:
        return lam_max
    vertex = -coef[1] / (2.0 * coef[0])
    if not x[0] <= vertex <= x[-1]:
        return lam_max
    value = float(np.polyval(coef, vertex))
    return max(lam_max, value)


def trace_branch(
    params: ProblemParams,
    nonlinearity: Nonlinearity,
    m_grid,
    grid: RadialGrid,
    rtol: float = 1e-10,
) -> BranchReport:
    """Shoot every m, locate the fold, and classify the minimal branch.

    The minimal branch runs up to the first local maximum of lam(m); on it
    lam is strictly increasing and each point carries the radial index of its
    linearization.  Failed shots are skipped (recorded by their absence).
    """
    m_values = sorted(float(m) for m in m_grid)
    if len(m_values) < 3:
        raise DataError("need at least 3 center values to trace a branch")

    def try_shoot(m):
        try:
            return shoot(params, nonlinearity, m, grid, rtol=rtol)
        except (NonlinearityClassError, StepSizeError):
            return None

    shots = [p for p in parallel_map(try_shoot, m_values) if p is not None]
    if len(shots) < 3:
        raise DataError("branch tracing failed at nearly every center value")
    indices = parallel_map(lambda p: _branch_index(p, nonlinearity), shots)
    points = [
        BranchPoint(
            m=p.m,
            lam=p.lam,
            sup_norm=p.sup_norm,
            l1_norm=p.l1_norm,
            h1_norm=p.h1_norm,
            radial_morse_index=idx,
            profile=p.profile,
        )
        for p, idx in zip(shots, indices)
    ]
    lams = [p.lam for p in points]
    cut = len(points)
    for i in range(1, len(points)):
        if lams[i] <= lams[i - 1]:
            cut = i
            break
    minimal = points[:cut]
    # the sampled argmax can sit one m-step past the true fold; the minimal
    # branch is the stable side, so trim trailing unstable samples
    while minimal and minimal[-1].radial_morse_index:
        minimal.pop()
    lambda_star = _fit_lambda_star([p.m for p in points], lams)

    extremal = None
    if isinstance(nonlinearity, PowerNonlinearity) and nonlinearity.shift == 1.0 and params.N >= 11:
        q = joseph_lundgren_power(params.N)
        if abs(nonlinearity.exponent - q) <= 1e-9 * q and abs(nonlinearity.coeff - 1.0) <= 1e-12:
            extremal = (singular_extremal_profile(params, grid), extremal_parameter(params.N))

    return BranchReport(
        points=points,
        lambda_star=lambda_star,
        minimal_branch=minimal,
        nonlinearity=nonlinearity,
        extremal_reference=extremal,
    )


def extremal_diagnostics(report: BranchReport, params: ProblemParams) -> EstimateCheck:
    """Diagnostics of the branch end as the fold parameter is approached.

    With the closed-form singular reference (N >= 11, f = (1+u)^{q_N}) the
    check reports the pointwise relative deviation of the most advanced
    near-fold profile from the reference on [0.1, 1].  Otherwise it certifies
    boundedness: the value is the fitted center value at the fold and the
    drift is its change under halving the m-resolution.  The sup of L1 norms
    over the whole branch rides along in the ratio series tail.
    """
    points = report.points
    near = [p for p in points if p.lam >= 0.98 * report.lambda_star]
    if not near:
        raise DataError("no branch points with lam within 2% of the fold parameter")
    l1_sup = max(p.l1_norm for p in points)

    if report.extremal_reference is not None:
        ref_profile, _ = report.extremal_reference
        probe = max(near, key=lambda p: p.m)
        r = probe.profile.grid.nodes
        sel = r >= 0.1
        dev = np.abs(probe.profile.u[sel] - ref_profile.u[sel]) / (1.0 + ref_profile.u[sel])
        sup_dev = float(np.max(dev))
        half = dev[::2]
        drift = abs(sup_dev - float(np.max(half))) / sup_dev if sup_dev else 0.0
        series = list(zip(r[sel].tolist(), dev.tolist()))
        series.append(("l1-sup", l1_sup))
        return EstimateCheck(
            name=f"fold-profile-deviation N={params.N}",
            ratio_series=series,
            sup_ratio=sup_dev,
            refinement_drift=drift,
        )

    def fold_center(pts) -> float:
        lams = [p.lam for p in pts]
        i = int(np.argmax(lams))
        if 0 < i < len(pts) - 1:
            x = np.log([pts[i - 1].m, pts[i].m, pts[i + 1].m])
            y = [lams[i - 1], lams[i], lams[i + 1]]
            coef = np.polyfit(x, y, 2)
            if coef[0] < 0.0:
                v = -coef[1] / (2.0 * coef[0])
                if x[0] <= v <= x[-1]:
                    return float(math.exp(v))
        return pts[i].m

    m_full = fold_center(points)
    m_half = fold_center(points[::2])
    drift = abs(m_full - m_half) / m_full if m_full else math.nan
    series = [(p.m, p.sup_norm) for p in report.minimal_branch]
    series.append(("l1-sup", l1_sup))
    return EstimateCheck(
        name=f"fold-boundedness N={params.N}",
        ratio_series=series,
        sup_ratio=m_full,
        refinement_drift=drift,
    )
