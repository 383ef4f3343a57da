"""Radial penalized eigenvalues and signed solutions for degenerate weights.

The problem is -div(grad u) = g(u) - h(r) f(u) on the unit ball with h >= 0
vanishing exactly on the inner ball r <= rho.  The penalized operator is
taken as -div(grad .) + mu W(r) (penalization sign), so its first eigenvalue
increases from the ball eigenvalue at mu = 0 toward the inner-ball eigenvalue
as mu grows; that monotone interpolation is what the sub/supersolution
construction of the signed solutions rests on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded

from .errors import (
    ContractViolationError,
    DataError,
    ExistencePreconditionError,
    ParameterError,
)
from .grid import ProblemParams, RadialGrid
from .profiles import Nonlinearity, RadialProfile
from .spectral import QuadraticFormSpec, assemble_pencil, smallest_eigenvalues
from .util import parallel_map

__all__ = [
    "DegenerateSpec",
    "SignedSolutionReport",
    "weighted_eigen",
    "lambda1_curve",
    "inner_ball_eigenvalue",
    "signed_solutions",
]

_DEFAULT_MU_SWEEP = (1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6)


@dataclass(frozen=True, eq=False)
class DegenerateSpec:
    """Weight h vanishing on [0, rho], asymptotically linear g, superlinear f.

    lambda_slope is the asymptotic slope lim g(t)/t; existence of signed
    solutions requires it to sit strictly between the first eigenvalue of the
    ball and that of the inner ball B_rho.
    """

    params: ProblemParams
    rho: float
    h: Callable
    g: Nonlinearity
    f: Nonlinearity
    lambda_slope: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ParameterError(f"rho must lie in (0, 1), got {self.rho}")
        if self.params.alpha != 0.0:
            raise ParameterError("degenerate problems are posed without a radial weight (alpha = 0)")

    def h_samples(self, grid: RadialGrid) -> np.ndarray:
        hv = np.asarray(self.h(grid.nodes), dtype=float)
        if hv.shape != grid.nodes.shape:
            raise ParameterError("h must return one value per grid node")
        if np.any(hv < 0.0):
            raise ParameterError("h must be nonnegative")
        if np.any(hv[grid.nodes <= self.rho] != 0.0):
            raise ParameterError("h must vanish on [0, rho]")
        return hv


@dataclass(frozen=True, eq=False)
class SignedSolutionReport:
    positive_solution: RadialProfile | None
    negative_solution: RadialProfile | None
    iterations: int
    ordering_certificate: bool
    lambda1_mu_curve: list


def _origin_slope(f: Nonlinearity) -> float:
    return float(np.asarray(f.f(1e-8)) / 1e-8)


def _ratio_f_over_u(f: Nonlinearity, u: np.ndarray) -> np.ndarray:
    """f(u)/u with the origin slope filled in where u vanishes."""
    u = np.asarray(u, dtype=float)
    tiny = np.abs(u) < 1e-300
    safe = np.where(tiny, 1.0, u)
    ratio = np.asarray(f.f(safe), dtype=float) / safe
    return np.where(tiny, _origin_slope(f), ratio)


def weighted_eigen(
    spec: DegenerateSpec,
    mu: float,
    k: int,
    grid: RadialGrid,
    profile: RadialProfile | None = None,
):
    """k smallest Dirichlet eigenvalues of -div(grad .) + mu W on the ball.

    W is the weight h, or h * f(u)/u when a profile is supplied.
    """
    if mu < 0.0:
        raise ParameterError(f"mu must be nonnegative, got {mu}")
    W = spec.h_samples(grid)
    if profile is not None:
        W = W * _ratio_f_over_u(spec.f, profile.u)
    qspec = QuadraticFormSpec(params=spec.params, domain=(0.0, 1.0), potential=-mu * W)
    pencil = assemble_pencil(qspec, grid)
    return smallest_eigenvalues(pencil, k)


def lambda1_curve(spec: DegenerateSpec, mu_list, grid: RadialGrid) -> list:
    """[(mu, lambda_1(mu))] over the sweep, evaluated independently per mu."""
    mus = [float(m) for m in mu_list]
    vals = parallel_map(lambda m: float(weighted_eigen(spec, m, 1, grid)[0]), mus)
    return list(zip(mus, vals))


def inner_ball_eigenvalue(spec: DegenerateSpec, grid: RadialGrid) -> float:
    """First Dirichlet eigenvalue of the inner ball r < rho (the mu -> inf limit)."""
    qspec = QuadraticFormSpec(params=spec.params, domain=(0.0, spec.rho))
    pencil = assemble_pencil(qspec, grid)
    return float(smallest_eigenvalues(pencil, 1)[0])


class _Mirrored(Nonlinearity):
    """t -> -phi(-t); solving the mirrored problem yields the negative solution."""

    def __init__(self, base: Nonlinearity):
        self.base = base

    def f(self, u):
        return -np.asarray(self.base.f(-np.asarray(u, dtype=float)))

    def fprime(self, u):
        return np.asarray(self.base.fprime(-np.asarray(u, dtype=float)))

    def F(self, u):
        return np.asarray(self.base.F(-np.asarray(u, dtype=float)))


class _RadialOperator:
    """Tridiagonal pieces of the ball problem: stiffness, mass, h-weighted mass."""

    def __init__(self, spec: DegenerateSpec, grid: RadialGrid):
        base = assemble_pencil(
            QuadraticFormSpec(params=spec.params, domain=(0.0, 1.0)), grid
        )
        hv = spec.h_samples(grid)
        penal = assemble_pencil(
            QuadraticFormSpec(params=spec.params, domain=(0.0, 1.0), potential=-hv),
            grid,
        )
        self.nodes = base.full_radii
        self.kd, self.ke = base.full_kd, base.full_ke
        self.md, self.me = base.full_md, base.full_me
        self.hd = penal.full_kd - base.full_kd
        self.he = penal.full_ke - base.full_ke
        self.h_nodes = hv

    @staticmethod
    def mat_vec(d, e, x):
        y = d * x
        y[:-1] += e * x[1:]
        y[1:] += e * x[:-1]
        return y

    def apply_mass(self, x):
        return self.mat_vec(self.md, self.me, x)

    def apply_stiff(self, x):
        return self.mat_vec(self.kd, self.ke, x)

    def solve_interior(self, d, e, rhs, boundary_value=0.0):
        """Solve the tridiagonal system on nodes 0..n-2 with x[n-1] prescribed."""
        n = self.nodes.size
        b = rhs[: n - 1].copy()
        b[-1] -= e[n - 2] * boundary_value
        ab = np.zeros((3, n - 1))
        ab[1] = d[: n - 1]
        ab[0, 1:] = e[: n - 2]
        ab[2, :-1] = e[: n - 2]
        x = np.empty(n)
        x[: n - 1] = solve_banded((1, 1), ab, b)
        x[-1] = boundary_value
        return x

    def factor_shifted(self, c: float):
        """Reusable Cholesky solve for the interior system K + c M."""
        n = self.nodes.size
        d = self.kd[: n - 1] + c * self.md[: n - 1]
        e = self.ke[: n - 2] + c * self.me[: n - 2]
        ab = np.zeros((2, n - 1))
        ab[1] = d
        ab[0, 1:] = e
        cb = cholesky_banded(ab)

        def solve(rhs):
            x = np.empty(n)
            x[: n - 1] = cho_solve_banded((cb, False), rhs[: n - 1])
            x[-1] = 0.0
            return x

        return solve


def _ground_mode(spec: DegenerateSpec, grid: RadialGrid, mu: float):
    """First eigenpair of -div(grad .) + mu h, normalized positive with sup 1."""
    W = spec.h_samples(grid)
    qspec = QuadraticFormSpec(params=spec.params, domain=(0.0, 1.0), potential=-mu * W)
    pencil = assemble_pencil(qspec, grid)
    vals, vecs = smallest_eigenvalues(pencil, 1, vectors=True)
    e = np.zeros(grid.n)
    e[: grid.n - 1] = vecs[0]
    if e[np.argmax(np.abs(e))] < 0:
        e = -e
    return float(vals[0]), e / np.max(e)


def _solve_positive(
    spec: DegenerateSpec,
    grid: RadialGrid,
    op: _RadialOperator,
    curve: list,
    lam1: float,
    lam1_inner: float,
    max_iter: int,
    tol: float,
    sub_scale: float = 1.0,
):
    """Minimal positive solution by monotone iteration from a small subsolution."""
    lam = spec.lambda_slope
    g, f = spec.g, spec.f
    gp0 = float(np.asarray(g.fprime(0.0)))
    if not lam1 < lam < lam1_inner:
        raise ExistencePreconditionError(
            f"need lambda_1 < lambda < lambda_1(inner ball), got "
            f"{lam1:.6g}, {lam:.6g}, {lam1_inner:.6g}"
        )
    if gp0 <= lam1:
        raise ExistencePreconditionError(
            f"need g'(0) > lambda_1 for the subsolution, got {gp0:.6g} <= {lam1:.6g}"
        )

    # supersolution scaffold: a mu with lambda_1(mu) strictly above lambda
    margin = 0.05 * (lam1_inner - lam)
    mu_star = next((m for m, v in curve if v >= lam + margin), None)
    if mu_star is None:
        raise ExistencePreconditionError(
            f"no mu in the sweep lifts lambda_1(mu) above lambda = {lam:.6g}; "
            "the supersolution construction fails"
        )

    def rhs_values(u):
        return np.asarray(g.f(u), dtype=float) - op.h_nodes * np.asarray(f.f(u), dtype=float)

    def weak_residual(u):
        stiff = op.apply_stiff(u)
        react = op.apply_mass(rhs_values(u))
        scale = float(np.max(np.abs(stiff)) + np.max(np.abs(react))) or 1.0
        return stiff - react, scale

    n = grid.n
    interior = slice(0, n - 1)
    slack = 1e-10

    # boundary-lifted profile of the penalized-shifted problem, positive and
    # bounded below; large multiples dominate the reaction term on supp h
    d_aux = op.kd + mu_star * op.hd - lam * op.md
    e_aux = op.ke + mu_star * op.he - lam * op.me
    psi = op.solve_interior(d_aux, e_aux, np.zeros(n), boundary_value=1.0)
    if np.min(psi) <= 0.0:
        raise ExistencePreconditionError("auxiliary boundary profile fails positivity")

    mu0 = max(_origin_slope(f), 0.0)
    _, e1 = _ground_mode(spec, grid, mu0)

    t_super = max(1.0, 2.0 * math.sqrt(mu_star) / float(np.min(psi)))
    v_super = None
    for _ in range(60):
        cand = t_super * psi
        r, scale = weak_residual(cand)
        if np.all(r[interior] >= -slack * scale):
            v_super = cand
            break
        t_super *= 2.0
    if v_super is None:
        raise ExistencePreconditionError("no multiple of the boundary profile is a supersolution")

    v_sub = None
    t_sub = 0.1 * float(np.min(v_super))
    for _ in range(80):
        cand = t_sub * e1
        r, scale = weak_residual(cand)
        if np.all(r[interior] <= slack * scale) and np.all(cand <= v_super):
            v_sub = cand
            break
        t_sub *= 0.5
    if v_sub is None:
        raise ExistencePreconditionError("no small multiple of the ground mode is a subsolution")
    if not 0.0 < sub_scale <= 1.0:
        raise ParameterError(f"sub_scale must lie in (0, 1], got {sub_scale}")
    v_sub = sub_scale * v_sub  # shrinking keeps the subsolution property near 0

    # The Lipschitz constant over the full ordered interval can be enormous
    # (the supersolution is a large multiple of the boundary profile), which
    # stalls the contraction.  The iterates increase from the subsolution, so
    # c is recomputed over the running iterate range and enlarged, with the
    # step retried, whenever monotonicity would fail; the interval-wide
    # constant remains the hard ceiling.
    top = float(np.max(v_super))

    def lipschitz(hi: float) -> float:
        probe = np.linspace(-0.02 * hi, 1.02 * hi, 256)
        return float(np.max(np.abs(g.fprime(probe)))) + float(np.max(op.h_nodes)) * float(
            np.max(np.abs(f.fprime(probe)))
        )

    u = v_sub.copy()
    sup_scale = max(top, 1.0)
    hi_range = max(1.25 * float(np.max(u)), 1e-2)
    c = lipschitz(hi_range)
    factor = op.factor_shifted(c)
    iterations = 0
    converged = False
    delta_prev = math.inf
    while iterations < max_iter:
        iterations += 1
        if 1.05 * float(np.max(u)) > hi_range:
            hi_range = 1.25 * float(np.max(u))
            c = lipschitz(hi_range)
            factor = op.factor_shifted(c)
            delta_prev = math.inf
        rhs = op.apply_mass(rhs_values(u) + c * u)
        u_next = factor(rhs)
        if np.any(u_next < u - 1e-9 * sup_scale):
            if hi_range >= 2.0 * top:
                raise ContractViolationError("monotone iteration left the ordered interval")
            hi_range = min(8.0 * hi_range, 2.0 * top)
            c = lipschitz(hi_range)
            factor = op.factor_shifted(c)
            delta_prev = math.inf
            continue
        if np.any(u_next > v_super + 1e-9 * sup_scale):
            raise ContractViolationError("iterate climbed past the supersolution")
        delta = float(np.max(np.abs(u_next - u)))
        u = u_next
        # geometric remainder estimate: the distance to the fixed point is
        # about delta * rho / (1 - rho) for contraction factor rho
        rho = delta / delta_prev if delta_prev > 0.0 and math.isfinite(delta_prev) else 1.0
        remainder = delta * rho / max(1.0 - rho, 1e-3) if rho < 1.0 else math.inf
        delta_prev = delta
        if delta < tol and remainder < tol:
            converged = True
            break
    if not converged:
        raise DataError(f"monotone iteration did not converge in {max_iter} steps")

    ordered = bool(
        np.all(v_sub <= u + 1e-9 * sup_scale) and np.all(u <= v_super + 1e-9 * sup_scale)
    )
    u_r = np.gradient(u, grid.nodes)
    profile = RadialProfile(
        grid=grid, u=u, u_r=u_r, params=spec.params, label="degenerate-positive"
    )
    return profile, iterations, ordered


def signed_solutions(
    spec: DegenerateSpec,
    grid: RadialGrid,
    max_iter: int = 50000,
    tol: float = 1e-10,
    mu_sweep=_DEFAULT_MU_SWEEP,
    sub_scale: float = 1.0,
) -> SignedSolutionReport:
    """One positive and one negative solution via ordered monotone iteration.

    Builds the subsolution from the ground mode of the penalized operator at
    the origin slope of f and the supersolution from the boundary-lifted
    profile, then iterates u -> (-div grad + c)^(-1)(g(u) - h f(u) + c u)
    upward from the subsolution.  The negative solution solves the mirrored
    problem.  When lambda >= lambda_1(inner ball) no supersolution exists and
    an existence-precondition error is raised.
    """
    op = _RadialOperator(spec, grid)
    curve = lambda1_curve(spec, mu_sweep, grid)
    lam1 = float(
        smallest_eigenvalues(
            assemble_pencil(QuadraticFormSpec(params=spec.params, domain=(0.0, 1.0)), grid),
            1,
        )[0]
    )
    lam1_inner = inner_ball_eigenvalue(spec, grid)

    pos, it_pos, ord_pos = _solve_positive(
        spec, grid, op, curve, lam1, lam1_inner, max_iter, tol, sub_scale
    )

    mirrored = DegenerateSpec(
        params=spec.params,
        rho=spec.rho,
        h=spec.h,
        g=_Mirrored(spec.g),
        f=_Mirrored(spec.f),
        lambda_slope=spec.lambda_slope,
    )
    neg_m, it_neg, ord_neg = _solve_positive(
        mirrored, grid, op, curve, lam1, lam1_inner, max_iter, tol, sub_scale
    )
    neg = RadialProfile(
        grid=grid,
        u=-neg_m.u,
        u_r=-neg_m.u_r,
        params=spec.params,
        label="degenerate-negative",
    )
    return SignedSolutionReport(
        positive_solution=pos,
        negative_solution=neg,
        iterations=max(it_pos, it_neg),
        ordering_certificate=bool(ord_pos and ord_neg),
        lambda1_mu_curve=curve,
    )
