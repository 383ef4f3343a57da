"""Second-variation quadratic forms, negative-eigenvalue counts, stability checks.

The quadratic form Q(phi) = int (phi'^2 + [l(l+N-2)/r^2 - V] phi^2) r^(N-1) dr
is restricted to continuous piecewise-linear functions on the grid, giving a
symmetric tridiagonal pencil (K, M).  Negative counts come from the pivot
signs of the triangular factorization of K - sigma*M (Sylvester inertia);
individual eigenvalues from bisection on that count plus inverse-iteration
refinement.

Trial functions always vanish at the outer boundary.  At the inner boundary
the value is free when the domain reaches the origin-side cutoff (radial H^1
functions need not vanish at the axis) and pinned to zero on an annulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import DegeneracyError, ParameterError, StabilityBoundaryError
from .grid import ProblemParams, RadialGrid, power_moments, shifted_cell_moments
from .profiles import Nonlinearity, RadialProfile
from .util import parallel_map

__all__ = [
    "QuadraticFormSpec",
    "SpectralPencil",
    "MorseReport",
    "assemble_pencil",
    "morse_index",
    "smallest_eigenvalues",
    "full_morse_index",
    "angular_multiplicity",
    "hardy_check",
    "cc_quotient",
]

#: relative eigenvalue tolerance defining the boundary-of-stability window
ZERO_EIGENVALUE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class QuadraticFormSpec:
    """Domain, potential and boundary data of a second-variation form.

    potential holds V sampled at every grid node (V = r^alpha f'(u) for a
    linearized solution); leave it None to have assemble_pencil derive it
    from a profile and nonlinearity.  inner_bc is 'dirichlet', 'natural' or
    'auto' (natural exactly when the domain reaches the smallest grid node).
    """

    params: ProblemParams
    domain: tuple[float, float] = (0.0, 1.0)
    potential: np.ndarray | None = None
    inner_bc: str = "auto"
    angular_l: int = 0

    def __post_init__(self):
        a, b = self.domain
        if not (0.0 <= a < b <= 1.0):
            raise ParameterError(f"domain must satisfy 0 <= a < b <= 1, got {self.domain}")
        if self.inner_bc not in ("auto", "dirichlet", "natural"):
            raise ParameterError(f"unknown inner boundary condition {self.inner_bc!r}")
        if self.angular_l < 0 or int(self.angular_l) != self.angular_l:
            raise ParameterError("angular_l must be a nonnegative integer")
        if self.potential is not None:
            pot = np.asarray(self.potential, dtype=float)
            if not np.all(np.isfinite(pot)):
                raise ParameterError("potential must be finite at all nodes")
            object.__setattr__(self, "potential", pot)


class SpectralPencil:
    """Tridiagonal stiffness/mass pair restricted to the active trial space.

    Full (no boundary condition) arrays are kept so callers can lift
    inhomogeneous boundary data; kd/ke/md/me expose the constrained views.
    """

    def __init__(self, radii, full_kd, full_ke, full_md, full_me, lo, hi, lambda_ref):
        self.full_radii = radii
        self.full_kd = full_kd
        self.full_ke = full_ke
        self.full_md = full_md
        self.full_me = full_me
        self._lo = lo  # first active node index (0 natural, 1 inner Dirichlet)
        self._hi = hi  # one past the last active node (outer Dirichlet drops the end)
        self.lambda_ref = float(lambda_ref)
        self.tolerance = ZERO_EIGENVALUE_RTOL * self.lambda_ref

    @property
    def size(self) -> int:
        return self._hi - self._lo

    @property
    def radii(self) -> np.ndarray:
        return self.full_radii[self._lo : self._hi]

    @property
    def kd(self) -> np.ndarray:
        return self.full_kd[self._lo : self._hi]

    @property
    def ke(self) -> np.ndarray:
        return self.full_ke[self._lo : self._hi - 1]

    @property
    def md(self) -> np.ndarray:
        return self.full_md[self._lo : self._hi]

    @property
    def me(self) -> np.ndarray:
        return self.full_me[self._lo : self._hi - 1]

    def _as_lists(self):
        # plain-float copies make the pivot recursion ~30x faster than
        # iterating over numpy scalars
        cached = getattr(self, "_list_cache", None)
        if cached is None:
            cached = (
                self.kd.tolist(),
                self.ke.tolist(),
                self.md.tolist(),
                self.me.tolist(),
            )
            self._list_cache = cached
        return cached


def _mass_blocks(T):
    """(ll, lr, rr) cell integrals of hat-function products against T-moments."""
    return T[0] - 2.0 * T[1] + T[2], T[1] - T[2], T[2]


def _coeff_blocks(T, c_left, c_right):
    """Cell integrals of hat products weighted by the linear interpolant of c."""
    ll = c_left * (T[0] - 3.0 * T[1] + 3.0 * T[2] - T[3]) + c_right * (T[1] - 2.0 * T[2] + T[3])
    lr = c_left * (T[1] - 2.0 * T[2] + T[3]) + c_right * (T[2] - T[3])
    rr = c_left * (T[2] - T[3]) + c_right * T[3]
    return ll, lr, rr


def _scatter(ll, lr, rr, n):
    """Accumulate per-cell 2x2 blocks into tridiagonal (diag, off) arrays."""
    diag = np.zeros(n)
    diag[:-1] += ll
    diag[1:] += rr
    return diag, lr.copy()


def _sturm_count_scalar(kd, ke, md, me, sigma: float) -> int:
    """Number of generalized eigenvalues of (K, M) below sigma.

    Counts negative pivots of the triangular factorization of K - sigma*M;
    by Sylvester's law of inertia this equals the eigenvalue count.  The
    inputs are plain lists for speed.
    """
    count = 0
    d = kd[0] - sigma * md[0]
    if d == 0.0:
        d = 1e-300
    if d < 0.0:
        count += 1
    for i in range(1, len(kd)):
        e = ke[i - 1] - sigma * me[i - 1]
        d = kd[i] - sigma * md[i] - e * e / d
        if d == 0.0:
            d = 1e-300
        if d < 0.0:
            count += 1
    return count


def _count_below(pencil: SpectralPencil, sigmas):
    kd, ke, md, me = pencil._as_lists()
    sig = np.atleast_1d(np.asarray(sigmas, dtype=float))
    return np.array([_sturm_count_scalar(kd, ke, md, me, float(s)) for s in sig])


def _eigenvalue_bracket(pencil: SpectralPencil, want: int) -> tuple[float, float]:
    """[lo, hi] with no eigenvalue below lo and at least `want` below hi."""
    scale = max(pencil.lambda_ref, 1.0)
    lo, hi = -scale, scale
    while _count_below(pencil, lo)[0] > 0:
        lo *= 8.0
    while _count_below(pencil, hi)[0] < want:
        hi *= 8.0
        if not math.isfinite(hi):
            raise ParameterError("failed to bracket the requested eigenvalues")
    return lo, hi


def _tridiag_solve(kd, ke, md, me, sigma, rhs):
    n = kd.size
    ab = np.zeros((3, n))
    ab[1] = kd - sigma * md
    ab[0, 1:] = ke - sigma * me
    ab[2, :-1] = ab[0, 1:]
    return solve_banded((1, 1), ab, rhs)


def _mat_vec(diag, off, x):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    return y


def _refine_eigenpair(pencil: SpectralPencil, sigma: float, width: float):
    """Inverse iteration with Rayleigh-quotient updates from a bisection bracket."""
    kd, ke, md, me = pencil.kd, pencil.ke, pencil.md, pencil.me
    rng = np.random.default_rng(12345)
    x = rng.standard_normal(kd.size)
    lam = sigma
    shift = sigma
    for _ in range(4):
        try:
            y = _tridiag_solve(kd, ke, md, me, shift, _mat_vec(md, me, x))
        except Exception:
            shift += max(abs(shift), 1.0) * 1e-12 + 1e-300
            continue
        nrm = math.sqrt(float(y @ _mat_vec(md, me, y)))
        if nrm == 0.0 or not math.isfinite(nrm):
            break
        x = y / nrm
        lam_new = float(x @ _mat_vec(kd, ke, x))
        if abs(lam_new - lam) <= 1e-14 * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
        shift = lam
    # a refined value must stay inside the bisection bracket
    if abs(lam - sigma) > 2.0 * width:
        lam = sigma
    return lam, x


def assemble_pencil(
    spec: QuadraticFormSpec,
    grid: RadialGrid,
    profile: RadialProfile | None = None,
    nonlinearity: Nonlinearity | None = None,
) -> SpectralPencil:
    """Discretize the quadratic form of `spec` on the grid.

    The potential enters through its piecewise-linear interpolant; gradient,
    angular and mass integrals use exact closed-form weight moments per cell.
    """
    a, b = spec.domain
    n_dim = spec.params.N
    ia = 0 if a <= grid.r_min else grid.index_of(a)
    ib = grid.index_of(b)
    if ib - ia + 1 < 3:
        raise ParameterError("domain covers fewer than 3 grid nodes")
    nodes = grid.nodes[ia : ib + 1]
    if spec.potential is not None:
        V = spec.potential[ia : ib + 1]
    elif profile is not None and nonlinearity is not None:
        u = profile.u[ia : ib + 1]
        V = nodes**spec.params.alpha * np.asarray(nonlinearity.fprime(u), dtype=float)
    else:
        V = np.zeros_like(nodes)

    h = np.diff(nodes)
    Tm = shifted_cell_moments(nodes, float(n_dim - 1), 3)
    grad = Tm[0] / h**2
    k_ll, k_lr, k_rr = grad, -grad, grad
    if spec.angular_l > 0:
        Ta = shifted_cell_moments(nodes, float(n_dim - 3), 2)
        c_ang = spec.angular_l * (spec.angular_l + n_dim - 2.0)
        all_, alr, arr = _mass_blocks(Ta)
        k_ll = k_ll + c_ang * all_
        k_lr = k_lr + c_ang * alr
        k_rr = k_rr + c_ang * arr
    p_ll, p_lr, p_rr = _coeff_blocks(Tm, V[:-1], V[1:])
    n_all = nodes.size
    kd0, ke0 = _scatter(k_ll, k_lr, k_rr, n_all)
    kd = kd0 - _scatter(p_ll, p_lr, p_rr, n_all)[0]
    ke = ke0 - p_lr
    m_ll, m_lr, m_rr = _mass_blocks(Tm)
    md, me = _scatter(m_ll, m_lr, m_rr, n_all)

    inner = spec.inner_bc
    if inner == "auto":
        inner = "natural" if ia == 0 else "dirichlet"
    lo = 1 if inner == "dirichlet" else 0
    hi = n_all - 1  # outer boundary is always Dirichlet

    # eigenvalue scale: first eigenvalue of the potential-free part, used for
    # the zero-crossing tolerance
    ref = SpectralPencil(nodes, kd0, ke0, md, me, lo, hi, lambda_ref=1.0)
    lam_ref = _bisect_eigenvalues(ref, 1, refine=False)[0]
    return SpectralPencil(nodes, kd, ke, md, me, lo, hi, lambda_ref=max(lam_ref, 1e-8))


def _bisect_eigenvalues(pencil: SpectralPencil, k: int, refine: bool = True, vectors: bool = False):
    if k < 1:
        raise ParameterError("k must be >= 1")
    if k > pencil.size:
        raise ParameterError(f"requested {k} eigenvalues from a pencil of size {pencil.size}")
    lo0, hi0 = _eigenvalue_bracket(pencil, k)
    vals = np.empty(k)
    vecs = np.empty((k, pencil.size)) if vectors else None
    for j in range(1, k + 1):
        lo, hi = lo0, hi0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if _count_below(pencil, mid)[0] >= j:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * max(1.0, abs(lo), abs(hi)):
                break
        sigma = 0.5 * (lo + hi)
        if refine or vectors:
            lam, vec = _refine_eigenpair(pencil, sigma, hi - lo)
            vals[j - 1] = lam
            if vectors:
                vecs[j - 1] = vec
        else:
            vals[j - 1] = sigma
    order = np.argsort(vals)
    vals = vals[order]
    if vectors:
        return vals, vecs[order]
    return vals


def morse_index(pencil: SpectralPencil, allow_boundary: bool = False) -> int:
    """Number of eigenvalues below -tau (negative inertia of K).

    Eigenvalues inside [-tau, +tau] make the count ill-defined; that raises a
    boundary-of-stability error unless allow_boundary is set.
    """
    tau = pencil.tolerance
    below, above = _count_below(pencil, [-tau, tau])
    if above != below and not allow_boundary:
        raise StabilityBoundaryError(
            f"{above - below} eigenvalue(s) within {tau:g} of zero; "
            "the Morse index is at a stability boundary"
        )
    return int(below)


def smallest_eigenvalues(pencil: SpectralPencil, k: int, vectors: bool = False):
    """The k smallest generalized eigenvalues (ascending), optionally with vectors."""
    return _bisect_eigenvalues(pencil, k, refine=True, vectors=vectors)


def angular_multiplicity(l: int, n_dim: int) -> int:
    """Dimension of the degree-l spherical-harmonic space on S^(N-1)."""
    if l == 0:
        return 1
    if l == 1:
        return n_dim
    return math.comb(n_dim + l - 1, l) - math.comb(n_dim + l - 3, l - 2)


@dataclass(frozen=True, eq=False)
class MorseReport:
    """Negative-direction counts of a linearized radial operator."""

    radial_index: int
    full_index: int | None
    per_l_counts: dict[int, tuple[int, int]] | None
    smallest_eigenvalues: np.ndarray | None
    grid_size: int
    tolerance: float


def full_morse_index(
    profile: RadialProfile,
    nonlinearity: Nonlinearity,
    params: ProblemParams,
    grid: RadialGrid,
    l_max: int = 8,
    domain: tuple[float, float] = (0.0, 1.0),
) -> MorseReport:
    """Radial and full Morse index via the spherical-harmonic decomposition.

    The full index is sum_l count_l * mult(l, N); the angular cutoff extends
    itself until the count at the largest l vanishes.
    """

    def count_at(l: int) -> tuple[int, float]:
        spec = QuadraticFormSpec(params=params, domain=domain, angular_l=l)
        pencil = assemble_pencil(spec, grid, profile=profile, nonlinearity=nonlinearity)
        return morse_index(pencil), pencil.tolerance

    counts: dict[int, int] = {}
    tol = 0.0
    l_values = list(range(l_max + 1))
    hard_cap = 256
    while True:
        fresh = [l for l in l_values if l not in counts]
        for l, (c, t) in zip(fresh, parallel_map(count_at, fresh)):
            counts[l] = c
            tol = max(tol, t)
        top = max(counts)
        if counts[top] == 0:
            break
        if top >= hard_cap:
            raise ParameterError(f"negative directions persist past l = {hard_cap}")
        l_values = list(range(top + 1, min(2 * top + 2, hard_cap) + 1))

    per_l = {l: (c, angular_multiplicity(l, params.N)) for l, c in sorted(counts.items())}
    full = sum(c * m for c, m in per_l.values())
    spec0 = QuadraticFormSpec(params=params, domain=domain, angular_l=0)
    pencil0 = assemble_pencil(spec0, grid, profile=profile, nonlinearity=nonlinearity)
    k_eigs = min(max(counts[0] + 1, 1), pencil0.size)
    eigs = smallest_eigenvalues(pencil0, k_eigs)
    return MorseReport(
        radial_index=counts[0],
        full_index=full,
        per_l_counts=per_l,
        smallest_eigenvalues=eigs,
        grid_size=grid.n,
        tolerance=tol,
    )


def hardy_check(omega, a: float, b: float, alpha_exp: float, grid: RadialGrid):
    """Both sides of int r^(a+1) w'^2 >= (a^2/4) int r^(a-1) w^2 on [a, b].

    omega is sampled at the grid nodes, treated as piecewise linear, and must
    vanish at both endpoints (which must be nodes).  Returns (lhs, rhs,
    margin) with margin = lhs - rhs.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape != grid.nodes.shape:
        raise ParameterError("omega must be sampled at every grid node")
    if not 0.0 < a < b <= 1.0:
        raise ParameterError(f"need 0 < a < b <= 1, got [{a}, {b}]")
    ia, ib = grid.index_of(a), grid.index_of(b)
    scale = float(np.max(np.abs(omega))) or 1.0
    if abs(omega[ia]) > 1e-12 * scale or abs(omega[ib]) > 1e-12 * scale:
        raise ParameterError("omega must vanish at both endpoints")
    nodes = grid.nodes[ia : ib + 1]
    w = omega[ia : ib + 1]
    h = np.diff(nodes)
    slopes = np.diff(w) / h
    mu0 = power_moments(nodes[:-1], nodes[1:], alpha_exp + 1.0, 0)[0]
    lhs = float(np.sum(slopes**2 * mu0))
    T = shifted_cell_moments(nodes, alpha_exp - 1.0, 2)
    wl, wr = w[:-1], w[1:]
    sq = wl**2 * (T[0] - 2.0 * T[1] + T[2]) + 2.0 * wl * wr * (T[1] - T[2]) + wr**2 * T[2]
    rhs = float(alpha_exp**2 / 4.0 * np.sum(sq))
    return lhs, rhs, lhs - rhs


def cc_quotient(profile: RadialProfile, r0: float, grid: RadialGrid, outer: float = 1.0) -> float:
    """Minimum of int r^(N-1) u_r^2 w'^2 / int r^(N-3) u_r^2 w^2 over the annulus.

    The minimum is the smallest eigenvalue of the pencil with u_r^2-weighted
    stiffness and mass; values >= N-1 certify stability on the annulus for
    nonconstant radial solutions.  u_r must not vanish inside [r0, outer).
    """
    ia, ib = grid.index_of(r0), grid.index_of(outer)
    if ib - ia + 1 < 3:
        raise ParameterError("annulus covers fewer than 3 grid nodes")
    nodes = grid.nodes[ia : ib + 1]
    w2 = profile.u_r[ia : ib + 1] ** 2
    if np.any(w2[:-1] == 0.0):
        raise DegeneracyError("u_r vanishes inside the annulus; the quotient degenerates")
    n_dim = profile.params.N
    h = np.diff(nodes)
    T1 = shifted_cell_moments(nodes, float(n_dim - 1), 1)
    g = (w2[:-1] * (T1[0] - T1[1]) + w2[1:] * T1[1]) / h**2
    kd, ke = _scatter(g, -g, g, nodes.size)
    T3 = shifted_cell_moments(nodes, float(n_dim - 3), 3)
    m_ll, m_lr, m_rr = _coeff_blocks(T3, w2[:-1], w2[1:])
    md, me = _scatter(m_ll, m_lr, m_rr, nodes.size)
    pencil = SpectralPencil(nodes, kd, ke, md, me, 1, nodes.size - 1, lambda_ref=1.0)
    lam = _bisect_eigenvalues(pencil, 1, refine=True)[0]
    return float(lam)
